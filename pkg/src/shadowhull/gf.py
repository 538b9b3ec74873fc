"""Finite fields F_p and F_{p^2} with table-driven arithmetic.

Elements are encoded as small integers: ``a0 + a1 * p`` stands for
``a0 + a1 * x`` where ``x`` is a root of the field modulus.  All hot code
works on these integer codes through the lookup tables of a :class:`Field`;
:class:`FqElement` is the user-facing value wrapper.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache


class DomainError(ArithmeticError):
    """Raised on undefined field operations such as inverting zero."""


class UnsupportedFieldError(ValueError):
    """Raised when a field descriptor or operation is outside the supported range."""


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def _irreducible_quadratic(p: int) -> tuple[int, int]:
    # Smallest (m1, m0) such that x^2 + m1 x + m0 has no root mod p.
    # This yields x^2+x+1 over F_2 and x^2+1 over F_3.
    for m1 in range(p):
        for m0 in range(1, p):
            if all((t * t + m1 * t + m0) % p for t in range(p)):
                return m0, m1
    raise UnsupportedFieldError(f"no irreducible quadratic over F_{p}")


class Field:
    """The field F_q, q = p^k with k in {1, 2}.

    ``modulus`` is ``(m0, m1)`` for the monic polynomial ``x^2 + m1 x + m0``
    when ``k == 2`` and ``None`` otherwise.
    """

    __slots__ = ("p", "k", "q", "modulus", "add_t", "mul_t", "neg_t", "inv_t",
                 "frob_t", "sub_t")

    def __init__(self, p: int, k: int = 1):
        if not is_prime(p):
            raise UnsupportedFieldError(f"characteristic {p} is not prime")
        if k not in (1, 2):
            raise UnsupportedFieldError(f"extension degree {k} not supported")
        self.p = p
        self.k = k
        self.q = p ** k
        self.modulus = _irreducible_quadratic(p) if k == 2 else None
        q = self.q
        self.add_t = [[self._add(a, b) for b in range(q)] for a in range(q)]
        self.mul_t = [[self._mul(a, b) for b in range(q)] for a in range(q)]
        self.neg_t = [self._neg(a) for a in range(q)]
        self.sub_t = [[self.add_t[a][self.neg_t[b]] for b in range(q)] for a in range(q)]
        inv = [0] * q
        for a in range(1, q):
            for b in range(1, q):
                if self.mul_t[a][b] == 1:
                    inv[a] = b
                    break
        self.inv_t = inv
        if k == 2:
            frob = []
            for a in range(q):
                r = 1
                for _ in range(p):
                    r = self.mul_t[r][a]
                frob.append(r)
            self.frob_t = frob
        else:
            self.frob_t = None

    # raw arithmetic on integer codes, used only to fill the tables
    def _split(self, a: int) -> tuple[int, int]:
        return a % self.p, a // self.p

    def _join(self, a0: int, a1: int) -> int:
        return (a0 % self.p) + (a1 % self.p) * self.p

    def _add(self, a: int, b: int) -> int:
        a0, a1 = self._split(a)
        b0, b1 = self._split(b)
        return self._join(a0 + b0, a1 + b1)

    def _neg(self, a: int) -> int:
        a0, a1 = self._split(a)
        return self._join(-a0, -a1)

    def _mul(self, a: int, b: int) -> int:
        if self.k == 1:
            return (a * b) % self.p
        a0, a1 = self._split(a)
        b0, b1 = self._split(b)
        m0, m1 = self.modulus
        # (a0 + a1 x)(b0 + b1 x) with x^2 = -m1 x - m0
        c0 = a0 * b0 - a1 * b1 * m0
        c1 = a0 * b1 + a1 * b0 - a1 * b1 * m1
        return self._join(c0, c1)

    # public integer-code API
    def add(self, a: int, b: int) -> int:
        return self.add_t[a][b]

    def sub(self, a: int, b: int) -> int:
        return self.sub_t[a][b]

    def mul(self, a: int, b: int) -> int:
        return self.mul_t[a][b]

    def neg(self, a: int) -> int:
        return self.neg_t[a]

    def inv(self, a: int) -> int:
        if a == 0:
            raise DomainError("inverse of zero")
        return self.inv_t[a]

    def frobenius(self, a: int) -> int:
        if self.k != 2:
            raise UnsupportedFieldError("frobenius needs a quadratic extension")
        return self.frob_t[a]

    def conj(self, a: int) -> int:
        """Involutory automorphism; the identity on a prime field."""
        return a if self.k == 1 else self.frob_t[a]

    def pow(self, a: int, e: int) -> int:
        r = 1
        for _ in range(e):
            r = self.mul_t[r][a]
        return r

    def coeffs(self, a: int) -> tuple[int, ...]:
        return self._split(a) if self.k == 2 else (a,)

    def from_coeffs(self, coeffs) -> int:
        coeffs = list(coeffs)
        if len(coeffs) > self.k:
            raise UnsupportedFieldError(f"too many coefficients for F_{self.q}")
        coeffs += [0] * (self.k - len(coeffs))
        return sum((c % self.p) * self.p ** i for i, c in enumerate(coeffs))

    def subfield(self) -> list[int]:
        """Codes of the prime subfield F_p (the fixed field of the conjugation)."""
        return list(range(self.p))

    def norm(self, a: int) -> int:
        return self.mul(a, self.conj(a))

    def trace(self, a: int) -> int:
        return self.add(a, self.conj(a))

    def element(self, value) -> "FqElement":
        if isinstance(value, int):
            if self.k == 1:
                value %= self.p
            elif not 0 <= value < self.q:
                raise UnsupportedFieldError(f"code {value} out of range for F_{self.q}")
            return FqElement(self, value)
        return FqElement(self, self.from_coeffs(value))

    def literal(self, a: int) -> str:
        return f"{self.p}^{self.k}:" + ",".join(str(c) for c in self.coeffs(a))

    def __repr__(self) -> str:
        return f"Field({self.p}, {self.k})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Field) and (self.p, self.k) == (other.p, other.k)

    def __hash__(self) -> int:
        return hash((self.p, self.k))

    def __reduce__(self):
        return (get_field, (self.p, self.k))


@lru_cache(maxsize=None)
def get_field(p: int, k: int = 1) -> Field:
    """Shared field descriptor for F_{p^k}."""
    return Field(p, k)


def field_of_order(q: int) -> Field:
    for p in range(2, q + 1):
        if is_prime(p):
            if q == p:
                return get_field(p, 1)
            if q == p * p:
                return get_field(p, 2)
    raise UnsupportedFieldError(f"no supported field of order {q}")


@dataclass(frozen=True)
class FqElement:
    field: Field
    value: int

    def _check(self, other: "FqElement") -> None:
        if not isinstance(other, FqElement) or other.field != self.field:
            raise UnsupportedFieldError("operands live in different fields")

    def __add__(self, other: "FqElement") -> "FqElement":
        self._check(other)
        return FqElement(self.field, self.field.add(self.value, other.value))

    def __sub__(self, other: "FqElement") -> "FqElement":
        self._check(other)
        return FqElement(self.field, self.field.sub(self.value, other.value))

    def __mul__(self, other: "FqElement") -> "FqElement":
        self._check(other)
        return FqElement(self.field, self.field.mul(self.value, other.value))

    def __neg__(self) -> "FqElement":
        return FqElement(self.field, self.field.neg(self.value))

    def inverse(self) -> "FqElement":
        return FqElement(self.field, self.field.inv(self.value))

    def frobenius(self) -> "FqElement":
        return FqElement(self.field, self.field.frobenius(self.value))

    @property
    def coeffs(self) -> tuple[int, ...]:
        return self.field.coeffs(self.value)

    def __str__(self) -> str:
        return self.field.literal(self.value)


def field_arith(a: FqElement, b: FqElement | None, op: str) -> FqElement:
    """Apply ``op`` in {add, mul, inv, neg}; unary ops ignore ``b``."""
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    if op == "inv":
        return a.inverse()
    if op == "neg":
        return -a
    raise ValueError(f"unknown field operation {op!r}")


def frobenius(a: FqElement) -> FqElement:
    return a.frobenius()


def parse_literal(text: str) -> FqElement:
    """Parse ``"p^k:c0,c1"`` (constant coefficient first), e.g. ``"2^2:1,1"``."""
    try:
        head, body = text.split(":", 1)
        if "^" in head:
            p_s, k_s = head.split("^", 1)
            p, k = int(p_s), int(k_s)
        else:
            p, k = int(head), 1
        coeffs = [int(c) for c in body.split(",") if c.strip() != ""]
    except ValueError as exc:
        raise ValueError(f"malformed field literal {text!r}") from exc
    field = get_field(p, k)
    return field.element(coeffs)
