# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: coset enumeration and F_2 rank.  Mirrors ``_fallback``."""
from libc.stdlib cimport malloc, realloc, free

DEF OK = 0
DEF OVERFLOW = 1


cdef struct Tc:
    int ncols
    int nrows
    int cap
    int *tab
    int *parent
    long live
    long high
    int *queue
    int qcap


cdef int grow(Tc *s, int rows) except -1:
    cdef int newcap
    cdef int *t
    cdef int *p
    if rows <= s.cap:
        return 0
    newcap = s.cap * 2
    if newcap < rows:
        newcap = rows
    t = <int *> realloc(s.tab, <size_t> newcap * s.ncols * sizeof(int))
    if t == NULL:
        raise MemoryError()
    s.tab = t
    p = <int *> realloc(s.parent, <size_t> newcap * sizeof(int))
    if p == NULL:
        raise MemoryError()
    s.parent = p
    s.cap = newcap
    return 0


cdef inline int rep(Tc *s, int k):
    cdef int r = k
    cdef int nxt
    while s.parent[r] != r:
        r = s.parent[r]
    while s.parent[k] != r:
        nxt = s.parent[k]
        s.parent[k] = r
        k = nxt
    return r


cdef int push(Tc *s, int *qlen, int v) except -1:
    cdef int *q
    if qlen[0] == s.qcap:
        s.qcap = s.qcap * 2 + 16
        q = <int *> realloc(s.queue, <size_t> s.qcap * sizeof(int))
        if q == NULL:
            raise MemoryError()
        s.queue = q
    s.queue[qlen[0]] = v
    qlen[0] += 1
    return 0


cdef int merge(Tc *s, int a, int b, int *qlen) except -1:
    cdef int lo, hi
    a = rep(s, a)
    b = rep(s, b)
    if a == b:
        return 0
    if a < b:
        lo = a; hi = b
    else:
        lo = b; hi = a
    s.parent[hi] = lo
    push(s, qlen, hi)
    s.live -= 1
    return 0


cdef int coincidence(Tc *s, int a, int b) except -1:
    cdef int qlen = 0
    cdef int qi = 0
    cdef int g, x, d, xi, mu, nu
    cdef int nc = s.ncols
    merge(s, a, b, &qlen)
    while qi < qlen:
        g = s.queue[qi]
        qi += 1
        for x in range(nc):
            d = s.tab[g * nc + x]
            if d < 0:
                continue
            xi = x ^ 1
            s.tab[d * nc + xi] = -1
            mu = rep(s, g)
            nu = rep(s, d)
            if s.tab[mu * nc + x] >= 0:
                merge(s, nu, s.tab[mu * nc + x], &qlen)
            elif s.tab[nu * nc + xi] >= 0:
                merge(s, mu, s.tab[nu * nc + xi], &qlen)
            else:
                s.tab[mu * nc + x] = nu
                s.tab[nu * nc + xi] = mu
    return 0


cdef int define(Tc *s, int c, int x) except -1:
    cdef int n = s.nrows
    cdef int nc = s.ncols
    cdef int y
    grow(s, n + 1)
    for y in range(nc):
        s.tab[n * nc + y] = -1
    s.parent[n] = n
    s.nrows = n + 1
    s.tab[c * nc + x] = n
    s.tab[n * nc + (x ^ 1)] = c
    s.live += 1
    if s.live > s.high:
        s.high = s.live
    return 0


cdef int scan(Tc *s, int a, int *w, int r, bint fill) except -1:
    cdef int f = a
    cdef int i = 0
    cdef int b = a
    cdef int j = r - 1
    cdef int nc = s.ncols
    while True:
        while i <= j and s.tab[f * nc + w[i]] >= 0:
            f = s.tab[f * nc + w[i]]
            i += 1
        if i > j:
            if f != a:
                coincidence(s, f, a)
            return 0
        while j >= i and s.tab[b * nc + (w[j] ^ 1)] >= 0:
            b = s.tab[b * nc + (w[j] ^ 1)]
            j -= 1
        if j < i:
            coincidence(s, f, b)
            return 0
        if i == j:
            s.tab[f * nc + w[i]] = b
            s.tab[b * nc + (w[i] ^ 1)] = f
            return 0
        if not fill:
            return 0
        define(s, f, w[i])


cdef int compact(Tc *s, int cur) except -1:
    cdef int n = s.nrows
    cdef int nc = s.ncols
    cdef int *new = <int *> malloc(<size_t> (n if n > 0 else 1) * sizeof(int))
    cdef int c, k = 0, x, d, nxt
    if new == NULL:
        raise MemoryError()
    for c in range(n):
        if s.parent[c] == c:
            new[c] = k
            k += 1
        else:
            new[c] = -1
    nxt = k
    for c in range(cur, n):
        if s.parent[c] == c:
            nxt = new[c]
            break
    for c in range(n):
        if s.parent[c] == c:
            for x in range(nc):
                d = s.tab[c * nc + x]
                s.tab[new[c] * nc + x] = new[d] if d >= 0 else -1
    for c in range(k):
        s.parent[c] = c
    s.nrows = k
    free(new)
    return nxt


cdef int lookahead(Tc *s, int **rels, int *lens, int nrel) except -1:
    cdef int c = 0, k
    while c < s.nrows:
        for k in range(nrel):
            if s.parent[c] != c:
                break
            scan(s, c, rels[k], lens[k], False)
        c += 1
    return 0


def coset_enumerate(int ngens, relators, long max_cosets):
    """Compiled twin of ``_fallback.coset_enumerate`` with identical results."""
    cdef Tc s
    cdef int nc = 2 * ngens
    cdef list rl = [list(r) for r in relators if len(r)]
    cdef int nrel = len(rl)
    cdef int **rels = <int **> malloc(<size_t> (nrel if nrel else 1) * sizeof(int *))
    cdef int *lens = <int *> malloc(<size_t> (nrel if nrel else 1) * sizeof(int))
    cdef int i, k, x, a, need, status = OK
    cdef bint restarted
    s.ncols = nc
    s.nrows = 0
    s.cap = 0
    s.tab = NULL
    s.parent = NULL
    s.queue = NULL
    s.qcap = 0
    need = nc
    for k in range(nrel):
        lens[k] = len(rl[k])
        rels[k] = <int *> malloc(<size_t> lens[k] * sizeof(int))
        for i in range(lens[k]):
            rels[k][i] = rl[k][i]
        if lens[k] > need:
            need = lens[k]
    need += 1
    try:
        grow(&s, 64)
        for x in range(nc):
            s.tab[x] = -1
        s.parent[0] = 0
        s.nrows = 1
        s.live = 1
        s.high = 1
        a = 0
        while a < s.nrows:
            if s.parent[a] != a:
                a += 1
                continue
            restarted = False
            k = 0
            while k < nrel:
                if s.nrows + need > max_cosets:
                    lookahead(&s, rels, lens, nrel)
                    a = compact(&s, a)
                    if s.nrows + need > max_cosets:
                        status = OVERFLOW
                        break
                    restarted = True
                    break
                scan(&s, a, rels[k], lens[k], True)
                if s.parent[a] != a:
                    break
                k += 1
            if status == OVERFLOW:
                break
            if restarted:
                continue
            if s.parent[a] == a and s.nrows + nc > max_cosets:
                lookahead(&s, rels, lens, nrel)
                a = compact(&s, a)
                if s.nrows + nc > max_cosets:
                    status = OVERFLOW
                    break
                continue
            if s.parent[a] == a:
                for x in range(nc):
                    if s.parent[a] != a:
                        break
                    if s.tab[a * nc + x] < 0:
                        define(&s, a, x)
            a += 1
        if status == OVERFLOW:
            return OVERFLOW, [], s.high
        compact(&s, 0)
        rows = [[s.tab[i * nc + x] for x in range(nc)] for i in range(s.nrows)]
        return OK, rows, s.high
    finally:
        for k in range(nrel):
            free(rels[k])
        free(rels)
        free(lens)
        free(s.tab)
        free(s.parent)
        free(s.queue)


def gf2_rank(rows):
    """Rank over F_2 of rows packed into integers; fast path for at most 64 columns."""
    cdef unsigned long long piv[64]
    cdef unsigned long long v
    cdef int r = 0, top
    vals = [int(x) for x in rows]
    if any(x >> 64 for x in vals):
        from ._fallback import gf2_rank as slow
        return slow(vals)
    for top in range(64):
        piv[top] = 0
    for x in vals:
        v = x
        while v:
            top = 63
            while not (v >> top) & 1:
                top -= 1
            if piv[top]:
                v ^= piv[top]
            else:
                piv[top] = v
                r += 1
                break
    return r
