"""Pure-Python versions of the compiled kernels; same algorithms, same outputs."""
from __future__ import annotations

OK = 0
OVERFLOW = 1


def coset_enumerate(ngens: int, relators, max_cosets: int):
    """HLT coset enumeration over the trivial subgroup with lookahead.

    ``relators`` are lists of column indices (2g for a generator, 2g+1 for its
    inverse).  Returns ``(status, rows, high_water)`` where ``rows`` is the
    compacted table of live cosets in definition order (empty on overflow).
    """
    ncols = 2 * ngens
    rels = [list(r) for r in relators if r]
    table: list[list[int]] = [[-1] * ncols]
    parent: list[int] = [0]
    state = {"live": 1, "high": 1}

    def rep(k: int) -> int:
        r = k
        while parent[r] != r:
            r = parent[r]
        while parent[k] != r:
            parent[k], k = r, parent[k]
        return r

    def merge(a: int, b: int, queue: list[int]) -> None:
        a, b = rep(a), rep(b)
        if a == b:
            return
        lo, hi = (a, b) if a < b else (b, a)
        parent[hi] = lo
        queue.append(hi)
        state["live"] -= 1

    def coincidence(a: int, b: int) -> None:
        queue: list[int] = []
        merge(a, b, queue)
        qi = 0
        while qi < len(queue):
            g = queue[qi]
            qi += 1
            row = table[g]
            for x in range(ncols):
                d = row[x]
                if d < 0:
                    continue
                xi = x ^ 1
                table[d][xi] = -1
                mu, nu = rep(g), rep(d)
                if table[mu][x] >= 0:
                    merge(nu, table[mu][x], queue)
                elif table[nu][xi] >= 0:
                    merge(mu, table[nu][xi], queue)
                else:
                    table[mu][x] = nu
                    table[nu][xi] = mu

    def define(c: int, x: int) -> None:
        n = len(table)
        table.append([-1] * ncols)
        parent.append(n)
        table[c][x] = n
        table[n][x ^ 1] = c
        state["live"] += 1
        if state["live"] > state["high"]:
            state["high"] = state["live"]

    def scan(a: int, w, fill: bool) -> None:
        f, i = a, 0
        b, j = a, len(w) - 1
        while True:
            while i <= j and table[f][w[i]] >= 0:
                f = table[f][w[i]]
                i += 1
            if i > j:
                if f != a:
                    coincidence(f, a)
                return
            while j >= i and table[b][w[j] ^ 1] >= 0:
                b = table[b][w[j] ^ 1]
                j -= 1
            if j < i:
                coincidence(f, b)
                return
            if i == j:
                table[f][w[i]] = b
                table[b][w[i] ^ 1] = f
                return
            if not fill:
                return
            define(f, w[i])

    def compact(cur: int) -> int:
        """Renumber live cosets in order; returns the new index of the first live coset >= cur."""
        new = [-1] * len(table)
        k = 0
        for c in range(len(table)):
            if parent[c] == c:
                new[c] = k
                k += 1
        rows = []
        for c in range(len(table)):
            if parent[c] == c:
                rows.append([new[d] if d >= 0 else -1 for d in table[c]])
        nxt = k
        for c in range(cur, len(table)):
            if parent[c] == c:
                nxt = new[c]
                break
        table[:] = rows
        parent[:] = list(range(k))
        return nxt

    def lookahead() -> None:
        c = 0
        while c < len(table):
            for w in rels:
                if parent[c] != c:
                    break
                scan(c, w, False)
            c += 1

    need = max([len(w) for w in rels] + [ncols]) + 1
    a = 0
    while a < len(table):
        if parent[a] != a:
            a += 1
            continue
        restarted = False
        k = 0
        while k < len(rels):
            if len(table) + need > max_cosets:
                lookahead()
                a = compact(a)
                if len(table) + need > max_cosets:
                    return OVERFLOW, [], state["high"]
                restarted = True
                break
            scan(a, rels[k], True)
            if parent[a] != a:
                break
            k += 1
        if restarted:
            continue
        if parent[a] == a and len(table) + ncols > max_cosets:
            lookahead()
            a = compact(a)
            if len(table) + ncols > max_cosets:
                return OVERFLOW, [], state["high"]
            continue
        if parent[a] == a:
            for x in range(ncols):
                if parent[a] != a:
                    break
                if table[a][x] < 0:
                    define(a, x)
        a += 1
    compact(0)
    return OK, table, state["high"]


def gf2_rank(rows) -> int:
    """Rank over F_2 of rows given as Python integers (bit i = column i)."""
    pivots: dict[int, int] = {}
    r = 0
    for v in rows:
        v = int(v)
        while v:
            top = v.bit_length() - 1
            if top in pivots:
                v ^= pivots[top]
            else:
                pivots[top] = v
                r += 1
                break
    return r
