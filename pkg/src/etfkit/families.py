"""ER pairs, free-parameter injection and the six-parameter 16x16 family.

A family is stored as ``U(a) = base * exp(i * C @ a)`` with an integer
coefficient tensor ``C`` of shape ``(n, n, p)``. Injection therefore acts on
phase exponents and keeps every modulus exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import SignatureUnitary, gram_from_signature, signature_checks, verify_etf

__all__ = [
    "NotUnimodular",
    "NotERPair",
    "ERPair",
    "ParametricFamily",
    "CallableFamily",
    "FamilyReport",
    "find_er_pairs",
    "er_pair",
    "injection_coefficients",
    "inject_parameter",
    "hermitian_family",
    "u16_family",
    "u16_parametric",
    "U16_ER_PAIRS",
    "EQ6_H",
    "validate_family",
]

ER_TOL = 1e-8


class NotUnimodular(ValueError):
    pass


class NotERPair(ValueError):
    pass


# 4x4 real Hadamard used to illustrate a single column-pair injection
EQ6_H = np.array(
    [
        [-1, 1, 1, 1],
        [1, -1, 1, 1],
        [1, 1, -1, 1],
        [1, 1, 1, -1],
    ],
    dtype=complex,
)

# ER pairs listed for U16(0), 1-based
U16_ER_PAIRS = ((2, 3), (4, 13), (5, 8), (6, 7), (9, 12), (10, 11), (14, 15))


@dataclass(frozen=True)
class ERPair:
    i: int
    j: int
    signs: np.ndarray = field(repr=False, compare=False)

    def one_based(self) -> tuple[int, int]:
        return self.i + 1, self.j + 1


def _unimodular_part(h: np.ndarray, tol: float) -> np.ndarray:
    """Divide out the common modulus; raise if the entries are not flat."""
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError("expected a square matrix")
    mod = np.abs(h)
    scale = float(np.median(mod))
    if scale == 0 or np.max(np.abs(mod / scale - 1)) > tol:
        raise NotUnimodular("entries do not share a common modulus")
    return h / scale


def _column_product(h: np.ndarray, i: int, j: int) -> np.ndarray:
    return h[:, i] * h[:, j].conj()


def er_pair(h: np.ndarray, i: int, j: int, tol: float = ER_TOL) -> ERPair:
    """The ER pair ``(i, j)`` (0-based) or ``NotERPair``."""
    v = _column_product(_unimodular_part(h, tol), i, j)
    if np.max(np.abs(v.imag)) > tol:
        raise NotERPair(f"columns {i + 1},{j + 1} do not form an ER pair")
    return ERPair(i, j, np.where(v.real >= 0, 1, -1))


def find_er_pairs(h: np.ndarray, tol: float = ER_TOL) -> list[ERPair]:
    """All unordered column pairs with real entrywise product ``C_i * conj(C_j)``."""
    u = _unimodular_part(h, tol)
    n = u.shape[0]
    # prods[r, i, j] = u[r, i] conj(u[r, j])
    prods = u[:, :, None] * u.conj()[:, None, :]
    real = np.max(np.abs(prods.imag), axis=0) <= tol
    out = []
    for i, j in zip(*np.nonzero(np.triu(real, k=1))):
        out.append(ERPair(int(i), int(j), np.where(prods[:, i, j].real >= 0, 1, -1)))
    return out


def injection_coefficients(
    h: np.ndarray, pair: ERPair, hermitian_mode: bool = False, strict: bool = True, tol: float = ER_TOL
) -> np.ndarray:
    """Integer exponent pattern ``c`` such that ``h * exp(i c a)`` is the injected matrix.

    Column step: rows where ``C_i * conj(C_j)`` is ``-1`` get ``+1`` in columns
    ``i, j``. In hermitian mode the row pair mirrors it with ``-1`` at columns
    where ``R_i * conj(R_j)`` is ``-1``.
    """
    u = _unimodular_part(h, tol)
    i, j = pair.i, pair.j
    col = _column_product(u, i, j)
    if strict and np.max(np.abs(col.imag)) > tol:
        raise NotERPair(f"columns {i + 1},{j + 1} do not form an ER pair")
    n = u.shape[0]
    c = np.zeros((n, n), dtype=int)
    neg = col.real < 0
    c[neg, i] += 1
    c[neg, j] += 1
    if hermitian_mode:
        row = u[i, :] * u[j, :].conj()
        if strict and np.max(np.abs(row.imag)) > tol:
            raise NotERPair(f"rows {i + 1},{j + 1} do not form an ER pair")
        rneg = row.real < 0
        c[i, rneg] -= 1
        c[j, rneg] -= 1
    return c


def inject_parameter(
    h: np.ndarray,
    pair: ERPair,
    alpha: float,
    hermitian_mode: bool = False,
    strict: bool = True,
    tol: float = ER_TOL,
) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    c = injection_coefficients(h, pair, hermitian_mode, strict, tol)
    return h * np.exp(1j * alpha * c)


@dataclass(frozen=True)
class ParametricFamily:
    """``U(a) = base * exp(i * coeffs @ a)``.

    ``signature`` marks families whose members are hermitian signature
    unitaries; otherwise members are treated as (scaled) complex Hadamards.
    """

    base: np.ndarray = field(repr=False)
    coeffs: np.ndarray = field(repr=False)
    signature: bool = True
    d: int | None = None
    pairs: tuple[ERPair, ...] = ()
    hermitian_mode: bool = False

    @property
    def n(self) -> int:
        return self.base.shape[0]

    @property
    def n_params(self) -> int:
        return self.coeffs.shape[2]

    def matrix(self, alphas) -> np.ndarray:
        a = np.asarray(alphas, dtype=float).reshape(-1)
        if a.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, got {a.size}")
        return self.base * np.exp(1j * (self.coeffs @ a))

    def __call__(self, alphas) -> np.ndarray:
        return self.matrix(alphas)

    def jacobian(self, alphas) -> np.ndarray:
        """Real Jacobian of the flattened matrix, shape ``(2 n^2, p)``."""
        u = self.matrix(alphas)
        dU = 1j * self.coeffs * u[:, :, None]
        flat = dU.reshape(-1, self.n_params)
        return np.vstack([flat.real, flat.imag])


@dataclass(frozen=True)
class CallableFamily:
    """Wraps an arbitrary ``alphas -> matrix`` builder."""

    fn: Callable[[np.ndarray], np.ndarray]
    n_params: int
    signature: bool = True
    d: int | None = None

    def matrix(self, alphas) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(alphas, dtype=float)), dtype=complex)

    def __call__(self, alphas) -> np.ndarray:
        return self.matrix(alphas)

    def jacobian(self, alphas, h: float = 1e-6) -> np.ndarray:
        a = np.asarray(alphas, dtype=float)
        cols = []
        for p in range(self.n_params):
            e = np.zeros_like(a)
            e[p] = h
            diff = (self.matrix(a + e) - self.matrix(a - e)).reshape(-1) / (2 * h)
            cols.append(np.concatenate([diff.real, diff.imag]))
        return np.column_stack(cols) if cols else np.zeros((0, 0))


def hermitian_family(h: np.ndarray, pairs: list[ERPair], d: int | None = None) -> ParametricFamily:
    """One parameter per pair, each injected on columns and mirrored rows.

    ``h`` is scaled to a unitary. Coefficients are computed against ``h`` for
    every pair, which is exact when the pairs touch disjoint index sets.
    """
    h = np.asarray(h, dtype=complex)
    n = h.shape[0]
    u = h / math.sqrt(n) / float(np.median(np.abs(h))) if np.median(np.abs(h)) else h
    coeffs = np.stack([injection_coefficients(h, p, hermitian_mode=True) for p in pairs], axis=2)
    return ParametricFamily(u, coeffs, True, d, tuple(pairs), True)


# Sign pattern of 4 * U16(0), row by row
_U16_SIGNS = (
    "++++++++++++++++",
    "++--++--++--++--",
    "+-+-+-+-+-+-+-+-",
    "+--++--++--++--+",
    "++++++++--------",
    "++--++----++--++",
    "+-+-+-+--+-+-+-+",
    "+--++--+-++--++-",
    "++++----++++----",
    "++----++++----++",
    "+-+--+-++-+--+-+",
    "+--+-++-+--+-++-",
    "++++--------++++",
    "++----++--++++--",
    "+-+--+-+-+-++-+-",
    "+--+-++--++-+--+",
)

# Phase exponents of U16(a), periodic with period 8 in rows and columns.
# "+1-2" means exp(i (a1 - a2)).
_U16_PHASES = (
    ("0", "0", "0", "0", "0", "0", "0", "0"),
    ("0", "0", "0", "0", "-1+2", "-1+2", "-1+2", "-1+2"),
    ("0", "0", "0", "0", "-1+3", "-1+3", "-1+3", "-1+3"),
    ("0", "0", "0", "0", "-1", "-1", "-1", "-1"),
    ("0", "+1-2", "+1-3", "+1", "0", "-4+5", "-4+6", "-4"),
    ("0", "+1-2", "+1-3", "+1", "+4-5", "0", "-5+6", "-5"),
    ("0", "+1-2", "+1-3", "+1", "+4-6", "+5-6", "0", "-6"),
    ("0", "+1-2", "+1-3", "+1", "+4", "+5", "+6", "0"),
)


def _parse_exponent(s: str, p: int = 6) -> np.ndarray:
    out = np.zeros(p, dtype=int)
    if s == "0":
        return out
    k = 0
    while k < len(s):
        sign = 1 if s[k] == "+" else -1
        out[int(s[k + 1]) - 1] += sign
        k += 2
    return out


def _u16_tables() -> tuple[np.ndarray, np.ndarray]:
    signs = np.array([[1 if ch == "+" else -1 for ch in row] for row in _U16_SIGNS], dtype=float)
    block = np.array([[_parse_exponent(s) for s in row] for row in _U16_PHASES])
    coeffs = np.tile(block, (2, 2, 1))
    return signs, coeffs


_U16_SIGN_TABLE, _U16_COEFFS = _u16_tables()


def u16_parametric() -> ParametricFamily:
    """The six-parameter hermitian family of ETF(6,16) signatures."""
    return ParametricFamily(_U16_SIGN_TABLE / 4, _U16_COEFFS.copy(), True, 6)


def u16_family(alphas) -> SignatureUnitary:
    m = u16_parametric().matrix(alphas)
    return SignatureUnitary(n=16, theta=math.acos(0.25), matrix=m)


@dataclass
class FamilyReport:
    samples: int
    passed: int
    worst_signature: float
    worst_orthogonality: float
    worst_modulus: float
    worst_coherence: float
    worst_spectrum: float
    effective_parameters: int
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.passed == self.samples

    @property
    def degenerate(self) -> bool:
        return self.effective_parameters == 0

    def as_dict(self) -> dict:
        return {
            "samples": self.samples,
            "passed": self.passed,
            "worst_signature": self.worst_signature,
            "worst_orthogonality": self.worst_orthogonality,
            "worst_modulus": self.worst_modulus,
            "worst_coherence": self.worst_coherence,
            "worst_spectrum": self.worst_spectrum,
            "effective_parameters": self.effective_parameters,
            "failures": self.failures[:20],
        }


def validate_family(
    family: ParametricFamily | CallableFamily,
    sample_count: int = 100,
    rng: np.random.Generator | None = None,
    tol: float = 1e-8,
) -> FamilyReport:
    """Sample parameters uniformly in ``[0, 2 pi)`` and check every member.

    Every member is checked for column orthogonality and flat moduli after
    scaling to a unitary. Signature families additionally run the
    signature checks and, when ``d`` is known, the ETF verification of the
    induced Gram. The effective parameter count is the numerical rank of the
    Jacobian at the first sample.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    n_params = family.n_params
    worst = dict(sig=0.0, orth=0.0, mod=0.0, coh=0.0, spec=0.0)
    failures: list[str] = []
    passed = 0
    first = None
    for s in range(sample_count):
        a = rng.uniform(0, 2 * np.pi, n_params)
        first = a if first is None else first
        m = family.matrix(a)
        n = m.shape[0]
        u = m / (math.sqrt(n) * float(np.mean(np.abs(m)))) if not family.signature else m
        orth = float(np.max(np.abs(u.conj().T @ u - np.eye(n))))
        mod = float(np.max(np.abs(np.abs(u) - np.mean(np.abs(u)))))
        worst["orth"] = max(worst["orth"], orth)
        worst["mod"] = max(worst["mod"], mod)
        bad = []
        if orth > tol:
            bad.append(f"orthogonality {orth:.2e}")
        if mod > tol:
            bad.append(f"modulus spread {mod:.2e}")
        if family.signature:
            sig_dev = max(
                float(np.max(np.abs(u - u.conj().T))),
                float(np.max(np.abs(np.diag(u) - np.mean(np.diag(u))))),
            )
            worst["sig"] = max(worst["sig"], sig_dev)
            bad.extend(signature_checks(u, tol))
            if family.d is not None and not bad:
                c = float(np.clip(np.mean(np.diag(u).real), -1.0, 1.0))
                sig = SignatureUnitary(n=n, theta=math.acos(c), matrix=u)
                rep = verify_etf(gram_from_signature(sig, family.d), tol=tol)
                worst["coh"] = max(worst["coh"], rep.max_offdiagonal - rep.min_offdiagonal)
                worst["spec"] = max(worst["spec"], rep.max_eigenvalue_deviation)
                bad.extend(rep.failures)
        if bad:
            failures.append(f"sample {s}: " + "; ".join(bad))
        else:
            passed += 1
    rank = 0
    if first is not None and n_params:
        jac = family.jacobian(first)
        sv = np.linalg.svd(jac, compute_uv=False)
        rank = int(np.sum(sv > 1e-8 * max(1.0, sv[0]))) if sv.size else 0
    return FamilyReport(
        samples=sample_count,
        passed=passed,
        worst_signature=worst["sig"],
        worst_orthogonality=worst["orth"],
        worst_modulus=worst["mod"],
        worst_coherence=worst["coh"],
        worst_spectrum=worst["spec"],
        effective_parameters=rank,
        failures=failures,
    )
