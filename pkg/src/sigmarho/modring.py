"""Prime fields with verified roots of unity, admissible-prime search, and CRT.

All exact arithmetic in the solver happens in fields F_p whose prime is picked
so that every root of unity a transform run needs actually exists.  Counting
answers larger than one machine word are reassembled from several such fields
by Chinese remaindering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


class NoAdmissiblePrimeError(Exception):
    """No word-sized prime satisfies the requested congruence constraints."""


class OrderUnavailableError(Exception):
    """Requested root-of-unity order does not divide p - 1."""


WORD_LIMIT = 1 << 62

_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for all 64-bit integers."""
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def prime_factors(n: int) -> list[int]:
    """Distinct prime factors of n by trial division (n is word-sized here)."""
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out.append(n)
    return out


@dataclass
class OpCounter:
    """Mutable tally of field operations; vectorised kernels add in bulk."""

    add: int = 0
    sub: int = 0
    mul: int = 0
    pow: int = 0
    inv: int = 0

    def reset(self) -> None:
        self.add = self.sub = self.mul = self.pow = self.inv = 0

    def snapshot(self) -> dict[str, int]:
        return {"add": self.add, "sub": self.sub, "mul": self.mul,
                "pow": self.pow, "inv": self.inv}


class PrimeField:
    """F_p plus cached, verified roots of unity.

    The field itself is immutable once built; the operation counter ``ops``
    is the only mutable state and is shared by everything computing in the
    field (single aggregation point for the instrumentation).
    """

    def __init__(self, p: int, orders: tuple[int, ...] = ()):
        if not is_prime(p):
            raise ValueError(f"{p} is not prime")
        self.p = p
        self.ops = OpCounter()
        self.roots: dict[int, int] = {}
        self.inverse_roots: dict[int, int] = {}
        self.inv_r: dict[int, int] = {}
        for r in orders:
            self.root(r)

    def __repr__(self) -> str:
        return f"PrimeField(p={self.p})"

    # -- roots of unity ----------------------------------------------------

    def root(self, r: int) -> int:
        """An element of order exactly r, found once and cached."""
        if r not in self.roots:
            w = find_root(self, r)
            self.roots[r] = w
            self.inverse_roots[r] = pow(w, self.p - 2, self.p)
            self.inv_r[r] = pow(r % self.p, self.p - 2, self.p)
        return self.roots[r]

    # -- counted scalar arithmetic ------------------------------------------

    def add(self, a: int, b: int) -> int:
        self.ops.add += 1
        return (a + b) % self.p

    def sub(self, a: int, b: int) -> int:
        self.ops.sub += 1
        return (a - b) % self.p

    def mul(self, a: int, b: int) -> int:
        self.ops.mul += 1
        return a * b % self.p

    def pow(self, a: int, e: int) -> int:
        self.ops.pow += 1
        return pow(a, e, self.p)

    def inv(self, a: int) -> int:
        if a % self.p == 0:
            raise ZeroDivisionError("division by zero in field")
        self.ops.inv += 1
        return pow(a, self.p - 2, self.p)


def field_arith(field: PrimeField, a: int, b: int, op: str) -> int:
    """Scalar field operation by name; increments the field's counter."""
    if op == "add":
        return field.add(a, b)
    if op == "sub":
        return field.sub(a, b)
    if op == "mul":
        return field.mul(a, b)
    if op == "pow":
        return field.pow(a, b)
    if op == "inv":
        return field.inv(a)
    raise ValueError(f"unknown field op {op!r}")


def find_root(field: PrimeField, r: int) -> int:
    """Element of order exactly r in F_p, requires r | p - 1.

    Candidates x are raised to (p-1)/r; the result is accepted when its order
    is exactly r, checked against every maximal proper divisor r/q.
    """
    p = field.p
    if r < 1:
        raise ValueError("order must be positive")
    if (p - 1) % r != 0:
        raise OrderUnavailableError(f"order {r} unavailable in F_{p}")
    if r == 1:
        return 1
    exps = [r // q for q in prime_factors(r)]
    for x in range(2, p):
        w = pow(x, (p - 1) // r, p)
        if w == 1:
            continue
        if all(pow(w, e, p) != 1 for e in exps):
            return w
    raise OrderUnavailableError(f"no element of order {r} found in F_{p}")


def choose_prime(orders: list[int] | tuple[int, ...], min_value: int) -> PrimeField:
    """Smallest prime p > min_value with p = 1 + j*lcm(orders).

    Scanning the arithmetic progression 1 + j*R guarantees every requested
    root order divides p - 1; the returned field has those roots populated.
    """
    orders = tuple(orders)
    if not orders or any(r < 1 for r in orders):
        raise ValueError("orders must be positive integers")
    if min_value < 1:
        raise ValueError("min_value must be >= 1")
    R = math.lcm(*orders)
    j = max(1, min_value // R)
    while True:
        cand = 1 + j * R
        if cand > WORD_LIMIT:
            raise NoAdmissiblePrimeError(
                f"no admissible word-sized prime for lcm {R} above {min_value}")
        if cand > min_value and is_prime(cand):
            return PrimeField(cand, orders=orders)
        j += 1


@dataclass(frozen=True)
class ResidueValue:
    """One residue per field of a multi-prime counting run."""

    residues: tuple[int, ...]


def crt_reconstruct(value: ResidueValue, fields: list[PrimeField]) -> int:
    """Unique integer in [0, prod p_i) matching every residue."""
    if len(value.residues) != len(fields):
        raise ValueError("residue/field count mismatch")
    primes = [f.p for f in fields]
    if len(set(primes)) != len(primes):
        raise ValueError("fields must have pairwise-distinct primes")
    x, mod = 0, 1
    for r, p in zip(value.residues, primes):
        if r >= p:
            raise ValueError("residue not reduced")
        # incremental CRT: adjust x by a multiple of mod to hit r mod p
        t = (r - x) * pow(mod % p, p - 2, p) % p
        x += mod * t
        mod *= p
    return x
