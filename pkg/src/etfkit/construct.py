"""Deterministic signature unitaries: hermitian Fourier matrices, real symmetric
Hadamard tensor powers, Kronecker products, and Haagerup-set invariants."""

from __future__ import annotations

import enum
import itertools
import math
import re
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
from scipy.spatial import cKDTree

from .core import SignatureUnitary

__all__ = [
    "OddPower",
    "NotASquare",
    "ZeroEntry",
    "HaagerupSet",
    "Equivalence",
    "hermitian_fourier",
    "real_hadamard_tensor",
    "sylvester_hadamard",
    "tensor",
    "identity_signature",
    "partitions",
    "partition_count",
    "factorize",
    "prop2_enumerate",
    "haagerup_set",
    "certify_inequivalent",
    "build",
]


class OddPower(ValueError):
    pass


class NotASquare(ValueError):
    pass


class ZeroEntry(ValueError):
    pass


# 4x4 symmetric Hadamard with constant diagonal, row-permutation of H2 (x) H2
_H4 = np.array(
    [
        [1, 1, 1, 1],
        [1, 1, -1, -1],
        [1, -1, 1, -1],
        [1, -1, -1, 1],
    ],
    dtype=float,
)
_H2 = np.array([[1, 1], [1, -1]], dtype=float)


def hermitian_fourier(n: int) -> SignatureUnitary:
    """Hermitian complex Hadamard of size ``n^2`` scaled to a unitary.

    Entry ``((a, b), (c, d))`` is ``w^(ad - bc) / n`` with ``w = exp(2 pi i / n)``
    and row index ``a n + b``; the diagonal is ``1/n``.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    a, b = np.divmod(np.arange(n * n), n)
    expo = np.mod(np.outer(a, b) - np.outer(b, a), n)  # (a d - b c) for rows (a,b), cols (c,d)
    m = np.exp(2j * np.pi * expo / n) / n
    if n == 2:
        m = m.real.astype(complex)
    return SignatureUnitary(n=n * n, theta=math.acos(1.0 / n), matrix=m)


def sylvester_hadamard(k: int) -> np.ndarray:
    """``H2^(x)k / 2^(k/2)`` with ``H2 = [[1, 1], [1, -1]]`` (diagonal not constant)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return reduce(np.kron, [_H2] * k) / 2 ** (k / 2)


def real_hadamard_tensor(k: int) -> SignatureUnitary:
    """Real symmetric Hadamard of size ``2^k`` with constant diagonal ``2^(-k/2)``.

    Built as the ``k/2``-fold Kronecker power of the constant-diagonal 4x4
    Hadamard, which is permutation-equivalent to ``H2^(x)k``; odd ``k`` has no
    constant-diagonal form (use :func:`sylvester_hadamard`).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if k % 2:
        raise OddPower(f"2^{k} admits no real symmetric Hadamard with constant diagonal here")
    m = reduce(np.kron, [_H4] * (k // 2)) / 2 ** (k / 2)
    return SignatureUnitary(n=2**k, theta=math.acos(2 ** (-k / 2)), matrix=m)


def identity_signature(n: int = 1) -> SignatureUnitary:
    return SignatureUnitary(n=n, theta=0.0, matrix=np.eye(n))


def tensor(u1: SignatureUnitary, u2: SignatureUnitary) -> SignatureUnitary:
    """Kronecker product; ``cos(theta) = cos(theta1) cos(theta2)``."""
    if u1.cos_theta < 0 or u2.cos_theta < 0:
        raise ValueError("tensor expects signatures with non-negative diagonal")
    c = u1.cos_theta * u2.cos_theta
    return SignatureUnitary(
        n=u1.n * u2.n, theta=math.acos(min(1.0, c)), matrix=np.kron(u1.matrix, u2.matrix)
    )


def partitions(r: int) -> list[tuple[int, ...]]:
    """All partitions of ``r`` as non-increasing tuples, reverse-lexicographic."""
    if r < 0:
        raise ValueError("r must be >= 0")

    def gen(rest: int, cap: int):
        if rest == 0:
            yield ()
            return
        for first in range(min(rest, cap), 0, -1):
            for tail in gen(rest - first, first):
                yield (first,) + tail

    return list(gen(r, r))


def partition_count(r: int) -> int:
    """P(r) by the standard coin-change recurrence."""
    ways = [1] + [0] * r
    for part in range(1, r + 1):
        for total in range(part, r + 1):
            ways[total] += ways[total - part]
    return ways[r]


def factorize(m: int) -> dict[int, int]:
    """Prime factorization by trial division."""
    if m < 1:
        raise ValueError("m must be >= 1")
    out: dict[int, int] = {}
    p = 2
    while p * p <= m:
        while m % p == 0:
            out[p] = out.get(p, 0) + 1
            m //= p
        p += 1
    if m > 1:
        out[m] = out.get(m, 0) + 1
    return out


def prop2_enumerate(n: int) -> list[SignatureUnitary]:
    """One signature with ``cos(theta) = 1/sqrt(n)`` per tuple of partitions of
    the prime exponents of ``sqrt(n)``; each part ``s`` of the partition for prime
    ``p`` contributes a factor ``hermitian_fourier(p^s)``."""
    root = math.isqrt(n)
    if n < 4 or root * root != n:
        raise NotASquare(f"{n} is not a perfect square >= 4")
    per_prime = []
    for p, r in sorted(factorize(root).items()):
        options = []
        for part in partitions(r):
            factors = [hermitian_fourier(p**s) for s in part]
            options.append(reduce(tensor, factors))
        per_prime.append(options)
    return [reduce(tensor, combo) for combo in itertools.product(*per_prime)]


@dataclass(frozen=True)
class HaagerupSet:
    values: np.ndarray = field(repr=False)
    tol: float = 1e-8

    def __len__(self) -> int:
        return len(self.values)

    def same_as(self, other: HaagerupSet, tol: float | None = None) -> bool:
        """Set equality within ``tol``: equal sizes and a one-to-one matching."""
        tol = self.tol if tol is None else tol
        if len(self) != len(other):
            return False
        if not len(self):
            return True
        a = np.column_stack([self.values.real, self.values.imag])
        b = np.column_stack([other.values.real, other.values.imag])
        dist, idx = cKDTree(b).query(a, distance_upper_bound=tol)
        if np.any(~np.isfinite(dist)):
            return False
        return len(np.unique(idx)) == len(idx)

    def contains(self, z: complex, tol: float | None = None) -> bool:
        tol = self.tol if tol is None else tol
        return bool(np.any(np.abs(self.values - z) <= tol))


def _dedup(values: np.ndarray, tol: float) -> np.ndarray:
    """Sorted representatives of ``values`` with pairwise distance > tol."""
    grid = tol / 10
    keys = np.column_stack([np.round(values.real / grid), np.round(values.imag / grid)]).astype(np.int64)
    _, first = np.unique(keys, axis=0, return_index=True)
    cand = values[first]
    cand = cand[np.lexsort((cand.imag, cand.real))]
    kept: list[complex] = []
    for z in cand:
        # cand sorted by real part: only recent representatives can be within tol
        close = False
        for y in reversed(kept):
            if z.real - y.real > tol:
                break
            if abs(z - y) <= tol:
                close = True
                break
        if not close:
            kept.append(z)
    out = np.array(kept, dtype=complex)
    return out[np.lexsort((out.imag, out.real))]


def haagerup_set(
    u: np.ndarray | SignatureUnitary, tol: float = 1e-8, phases: bool = True
) -> HaagerupSet:
    """``{U_st U_uv conj(U_sv) conj(U_ut)}`` over all index quadruples.

    With ``phases`` (default) each product is divided by its modulus, so the
    set contains 1 and is comparable across normalizations of the same matrix.
    """
    m = u.matrix if isinstance(u, SignatureUnitary) else np.asarray(u, dtype=complex)
    if np.any(np.abs(m) <= 1e-15):
        raise ZeroEntry("Haagerup set needs a matrix without zero entries")
    n = m.shape[0]
    acc = []
    for s in range(n):
        # x[u, t] = U_st conj(U_ut); the quadruple product is x[u, t] conj(x[u, v])
        x = m[s][None, :] * m.conj()
        prod = x[:, :, None] * x.conj()[:, None, :]
        if phases:
            prod = prod / np.abs(prod)
        acc.append(_dedup(prod.ravel(), tol))
    return HaagerupSet(values=_dedup(np.concatenate(acc), tol), tol=tol)


class Equivalence(str, enum.Enum):
    INEQUIVALENT = "Inequivalent"
    INCONCLUSIVE = "Inconclusive"


def certify_inequivalent(u1, u2, tol: float = 1e-8) -> Equivalence:
    """Inequivalent when the Haagerup sets differ; equal sets prove nothing."""
    m1 = u1.matrix if isinstance(u1, SignatureUnitary) else np.asarray(u1)
    m2 = u2.matrix if isinstance(u2, SignatureUnitary) else np.asarray(u2)
    if m1.shape != m2.shape:
        raise ValueError("matrices must have the same size")
    if haagerup_set(m1, tol).same_as(haagerup_set(m2, tol)):
        return Equivalence.INCONCLUSIVE
    return Equivalence.INEQUIVALENT


_TOKEN = re.compile(r"\s*(tensor|fourier|hadamard|\(|\)|,|:|\d+)")


def build(spec: str) -> SignatureUnitary:
    """Parse construction strings such as ``"tensor(fourier:2,hadamard:2)"``."""
    tokens = _TOKEN.findall(spec)
    if "".join(tokens) != re.sub(r"\s+", "", spec):
        raise ValueError(f"cannot parse construction {spec!r}")
    pos = 0

    def take(expected: str | None = None) -> str:
        nonlocal pos
        if pos >= len(tokens):
            raise ValueError(f"unexpected end of construction {spec!r}")
        tok = tokens[pos]
        if expected is not None and tok != expected:
            raise ValueError(f"expected {expected!r} at {tok!r} in {spec!r}")
        pos += 1
        return tok

    def expr() -> SignatureUnitary:
        head = take()
        if head == "tensor":
            take("(")
            args = [expr()]
            while pos < len(tokens) and tokens[pos] == ",":
                take(",")
                args.append(expr())
            take(")")
            return reduce(tensor, args)
        if head in ("fourier", "hadamard"):
            take(":")
            arg = take()
            if not arg.isdigit():
                raise ValueError(f"expected an integer after {head}: in {spec!r}")
            return hermitian_fourier(int(arg)) if head == "fourier" else real_hadamard_tensor(int(arg))
        raise ValueError(f"unknown construction {head!r}")

    out = expr()
    if pos != len(tokens):
        raise ValueError(f"trailing input in construction {spec!r}")
    return out
