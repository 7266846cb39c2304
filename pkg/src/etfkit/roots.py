"""Integrality filters for Gram matrices whose off-diagonal phases are m-th
roots of unity. Everything here is exact integer arithmetic."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .construct import factorize

__all__ = [
    "RootsFeasibility",
    "two_k_exact",
    "two_k_fraction",
    "vanishing_sum_feasible",
    "vanishing_sum_bruteforce",
    "roots_feasibility",
    "roots_compatible_etfs",
    "sic_root_candidates",
]

NECESSARY_ONLY = "necessary condition"


def _rational_sqrt(q: Fraction) -> Fraction | None:
    """Exact square root of a non-negative rational, or None when irrational."""
    if q < 0:
        return None
    num, den = q.numerator, q.denominator
    rn, rd = math.isqrt(num), math.isqrt(den)
    if rn * rn != num or rd * rd != den:
        return None
    return Fraction(rn, rd)


def two_k_fraction(d: int, n: int) -> Fraction | None:
    """``2k = (n - 2d) sqrt((n - 1) / (d (n - d)))`` when rational, else None."""
    if not 1 <= d < n:
        raise ValueError("need 1 <= d < n")
    if n == 2 * d:
        return Fraction(0)
    root = _rational_sqrt(Fraction(n - 1, d * (n - d)))
    if root is None:
        return None
    return (n - 2 * d) * root


def two_k_exact(d: int, n: int) -> int | None:
    """Exact integer ``2k``, or None when ``2k`` is not an integer."""
    val = two_k_fraction(d, n)
    if val is None or val.denominator != 1:
        return None
    return int(val)


def vanishing_sum_feasible(n_prime: int, m: int) -> tuple[bool, tuple[int, ...] | None]:
    """Whether ``n_prime = sum x_i p_i`` over the distinct primes ``p_i`` of ``m``.

    Returns ``(feasible, witness)`` where the witness lists ``x_i`` in increasing
    prime order.
    """
    if m < 2:
        raise ValueError("m must be >= 2")
    if n_prime < 0:
        return False, None
    primes = sorted(factorize(m))
    # reach[v] = index of last prime used to reach v, -1 for v = 0, None if unreachable
    reach: list[int | None] = [None] * (n_prime + 1)
    reach[0] = -1
    for v in range(1, n_prime + 1):
        for idx, p in enumerate(primes):
            if p <= v and reach[v - p] is not None:
                reach[v] = idx
                break
    if reach[n_prime] is None:
        return False, None
    counts = [0] * len(primes)
    v = n_prime
    while v:
        idx = reach[v]
        counts[idx] += 1
        v -= primes[idx]
    return True, tuple(counts)


def vanishing_sum_bruteforce(n_prime: int, m: int) -> bool:
    """Exhaustive search over coefficient vectors (test oracle)."""
    primes = sorted(factorize(m))

    def rec(rest: int, i: int) -> bool:
        if rest == 0:
            return True
        if i == len(primes):
            return False
        return any(rec(rest - x * primes[i], i + 1) for x in range(rest // primes[i] + 1))

    return n_prime >= 0 and rec(n_prime, 0)


@dataclass(frozen=True)
class RootsFeasibility:
    n: int
    d: int
    m: int
    two_k: int | None
    feasible: bool
    witness: tuple[int, ...] | None
    flags: tuple[str, ...] = ()
    label: str = NECESSARY_ONLY

    @property
    def n_prime(self) -> int | None:
        return None if self.two_k is None else self.two_k + self.n - 2

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "m": self.m,
            "two_k": self.two_k,
            "feasible": self.feasible,
            "witness": list(self.witness) if self.witness else None,
            "flags": list(self.flags),
            "label": self.label,
        }


def roots_feasibility(d: int, n: int, m: int) -> RootsFeasibility:
    """Evaluate the m-th roots filter for one ``(d, n)``.

    ``2k`` is taken literally with its sign. Negative ``2k`` (``d > n/2``) is
    flagged and reported infeasible, since the vanishing-sum argument fixes a
    row normalization that presumes ``2k >= 0``. ``d = 1`` is flagged as the
    trivial simplex.
    """
    tk = two_k_exact(d, n)
    flags = []
    if d == 1:
        flags.append("trivial simplex")
    if tk is None:
        return RootsFeasibility(n, d, m, None, False, None, tuple(flags))
    if tk < 0:
        flags.append("negative 2k")
        return RootsFeasibility(n, d, m, tk, False, None, tuple(flags))
    ok, wit = vanishing_sum_feasible(tk + n - 2, m)
    return RootsFeasibility(n, d, m, tk, ok, wit, tuple(flags))


def roots_compatible_etfs(
    n: int, m: int, include_simplex: bool = False
) -> list[tuple[int, RootsFeasibility]]:
    """All ``d`` in ``1..n-1`` passing the filter. The trivial simplex ``d = 1``
    is left out unless ``include_simplex``."""
    if n < 2:
        raise ValueError("n must be >= 2")
    out = []
    for d in range(1, n):
        if d == 1 and not include_simplex:
            continue
        rec = roots_feasibility(d, n, m)
        if rec.feasible:
            out.append((d, rec))
    return out


def sic_root_candidates(d_max: int) -> list[int]:
    """Dimensions ``d <= d_max`` with ``d = 2`` or ``d + 1`` a perfect square."""
    if d_max < 2:
        raise ValueError("d_max must be >= 2")
    out = []
    for d in range(2, d_max + 1):
        r = math.isqrt(d + 1)
        if d == 2 or r * r == d + 1:
            out.append(d)
    return out
