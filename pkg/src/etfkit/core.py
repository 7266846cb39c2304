"""Frame parameters, the Gram/signature/synthesis representations and ETF checks.

An ETF(d, N) is carried by three interchangeable objects:

* the Gram matrix ``G`` (N x N, unit diagonal, constant off-diagonal modulus,
  spectrum ``{0, N/d}``),
* the signature unitary ``U = I - (2d/N) G`` (hermitian, unitary, constant
  diagonal ``cos(theta)`` with ``d = N sin^2(theta/2)``),
* the synthesis matrix ``F`` (d x N) whose columns are the frame vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "FrameSpec",
    "SignatureUnitary",
    "GramMatrix",
    "SynthesisMatrix",
    "VerificationReport",
    "InvalidSignature",
    "InvalidGram",
    "RankMismatch",
    "NotNormalized",
    "welch_bound",
    "spec_from_dn",
    "target_bistochastic",
    "signature_checks",
    "gram_checks",
    "gram_from_signature",
    "signature_from_gram",
    "frame_from_gram",
    "gram_from_frame",
    "verify_etf",
    "naimark_complement",
    "fickus_check",
]


class InvalidSignature(ValueError):
    """Matrix fails one or more signature-unitary invariants."""

    def __init__(self, failures: list[str]):
        self.failures = failures
        super().__init__("invalid signature unitary: " + "; ".join(failures))


class InvalidGram(ValueError):
    """Matrix fails one or more ETF Gram-matrix invariants."""

    def __init__(self, failures: list[str]):
        self.failures = failures
        super().__init__("invalid ETF Gram matrix: " + "; ".join(failures))


class RankMismatch(ValueError):
    pass


class NotNormalized(ValueError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


def _check_dn(d: int, n: int) -> None:
    if not (1 <= d < n):
        raise ValueError(f"need 1 <= d < n, got d={d}, n={n}")


def welch_bound(d: int, n: int) -> float:
    """Inverse coherence ``alpha = sqrt(d(n-1)/(n-d))``.

    Every pair of ETF(d, n) vectors has ``|<phi_j, phi_k>| = 1/alpha``.
    """
    _check_dn(d, n)
    return math.sqrt(d * (n - 1) / (n - d))


@dataclass(frozen=True)
class FrameSpec:
    """Parameters tying an ETF(d, n) to its unistochastic target.

    ``theta`` satisfies ``d = n sin^2(theta/2)`` and lies in ``(0, pi)``;
    values above ``pi/2`` describe frames with ``d > n/2``, which the solver
    handles through the Naimark complement (see :attr:`reduced`).
    """

    n: int
    d: int
    theta: float
    alpha: float
    k: float
    real_mode: bool = False

    @property
    def cos_theta(self) -> float:
        return 1.0 - 2.0 * self.d / self.n

    @property
    def is_complement(self) -> bool:
        return 2 * self.d > self.n

    @property
    def reduced(self) -> FrameSpec:
        """Parameters with ``theta`` in ``[0, pi/2]``: these, or the complement's."""
        if not self.is_complement:
            return self
        return spec_from_dn(self.n - self.d, self.n, self.real_mode)


def spec_from_dn(d: int, n: int, real_mode: bool = False) -> FrameSpec:
    _check_dn(d, n)
    theta = 2.0 * math.asin(math.sqrt(d / n))
    k = (n - 2 * d) / 2.0 * math.sqrt((n - 1) / (d * (n - d)))
    return FrameSpec(n=n, d=d, theta=theta, alpha=welch_bound(d, n), k=k, real_mode=real_mode)


def target_bistochastic(n: int, theta: float) -> np.ndarray:
    """The bistochastic matrix ``B_n(theta)``: ``cos^2`` on the diagonal,
    ``sin^2/(n-1)`` elsewhere. Returned as a real array."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if not (0.0 <= theta <= math.pi / 2 + 1e-15):
        raise ValueError(f"theta must lie in [0, pi/2], got {theta}")
    c2 = math.cos(theta) ** 2
    b = np.full((n, n), (1.0 - c2) / (n - 1))
    np.fill_diagonal(b, c2)
    return b


@dataclass(frozen=True)
class SignatureUnitary:
    """Hermitian unitary with constant diagonal ``cos(theta)``."""

    n: int
    theta: float
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "matrix", _frozen(self.matrix))

    @classmethod
    def from_matrix(cls, m: np.ndarray, tol: float = 1e-8) -> SignatureUnitary:
        """Wrap ``m`` after checking every invariant at ``tol``."""
        m = np.asarray(m, dtype=complex)
        failures = signature_checks(m, tol)
        if failures:
            raise InvalidSignature(failures)
        c = float(np.clip(np.mean(np.diag(m).real), -1.0, 1.0))
        return cls(n=m.shape[0], theta=math.acos(c), matrix=m)

    @property
    def cos_theta(self) -> float:
        return math.cos(self.theta)

    @property
    def d(self) -> float:
        """Frame dimension ``n sin^2(theta/2)`` (not necessarily integral)."""
        return self.n * math.sin(self.theta / 2) ** 2

    @property
    def is_real(self) -> bool:
        return bool(np.all(np.abs(self.matrix.imag) <= 1e-12))


def signature_checks(m: np.ndarray, tol: float = 1e-8) -> list[str]:
    """Names of the violated signature-unitary invariants (empty when valid)."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return [f"not square: shape {m.shape}"]
    if not np.all(np.isfinite(m)):
        return ["non-finite entries"]
    n = m.shape[0]
    failures = []
    herm = np.max(np.abs(m - m.conj().T))
    if herm > tol:
        failures.append(f"hermiticity deviation {herm:.3e}")
    unit = np.max(np.abs(m.conj().T @ m - np.eye(n)))
    if unit > tol:
        failures.append(f"unitarity deviation {unit:.3e}")
    diag = np.diag(m)
    c = float(np.mean(diag.real))
    ddev = np.max(np.abs(diag - c))
    if ddev > tol:
        failures.append(f"diagonal not constant (deviation {ddev:.3e})")
    if n > 1:
        s2 = (1.0 - c * c) / (n - 1)
        off = np.abs(m[~np.eye(n, dtype=bool)]) ** 2
        mdev = np.max(np.abs(off - s2))
        if mdev > tol:
            failures.append(f"off-diagonal moduli deviation {mdev:.3e}")
    return failures


@dataclass(frozen=True)
class GramMatrix:
    n: int
    d: int
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "matrix", _frozen(self.matrix))


@dataclass(frozen=True)
class SynthesisMatrix:
    """d x n matrix whose columns are the frame vectors."""

    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "matrix", _frozen(self.matrix))

    @property
    def d(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return self.matrix.shape[1]


def _target_coherence(d: int, n: int) -> float:
    # orthonormal bases (d == n) are accepted by verification only
    if d == n:
        return 0.0
    return 1.0 / welch_bound(d, n)


def gram_checks(
    g: np.ndarray, d: int, tol: float = 1e-8, spectral_tol: float = 1e-6
) -> list[str]:
    """Names of the violated ETF Gram conditions (empty when valid).

    ``spectral_tol`` is relative to ``n/d``.
    """
    report = verify_etf(GramMatrix(n=len(g), d=d, matrix=g), tol=tol, spectral_tol=spectral_tol)
    return report.failures


def gram_from_signature(u: SignatureUnitary, d: int, tol: float = 1e-6) -> GramMatrix:
    """``G = (n / 2d)(I - U)``."""
    n = u.n
    if abs(n * math.sin(u.theta / 2) ** 2 - d) > tol:
        raise ValueError(
            f"d={d} does not match theta={u.theta:.12g} for n={n} "
            f"(expected d = {n * math.sin(u.theta / 2) ** 2:.12g})"
        )
    g = n / (2.0 * d) * (np.eye(n) - u.matrix)
    return GramMatrix(n=n, d=d, matrix=g)


def signature_from_gram(g: GramMatrix, tol: float = 1e-8) -> SignatureUnitary:
    """``U = I - (2d/n) G``; rejects matrices that are not ETF Gram matrices."""
    failures = gram_checks(g.matrix, g.d, tol=tol)
    if failures:
        raise InvalidGram(failures)
    u = np.eye(g.n) - (2.0 * g.d / g.n) * g.matrix
    theta = 2.0 * math.asin(math.sqrt(g.d / g.n))
    return SignatureUnitary(n=g.n, theta=theta, matrix=u)


def frame_from_gram(g: GramMatrix, method: str = "eigh") -> SynthesisMatrix:
    """Rank-d factorization ``F^H F = G``.

    ``method="eigh"`` keeps the d leading eigenpairs, ``F = sqrt(L) V^H``.
    ``method="cholesky"`` returns the upper-trapezoidal factor of the unpivoted
    rank-d Cholesky decomposition (the first ``d`` vectors form a triangle);
    it requires the leading d x d block of ``G`` to be nonsingular.
    """
    m = np.asarray(g.matrix, dtype=complex)
    n, d = g.n, g.d
    w, v = np.linalg.eigh(m)
    rank = int(np.sum(w > 1e-6 * n / d))
    if rank != d:
        raise RankMismatch(f"numerical rank {rank} differs from d={d}")
    if method == "eigh":
        f = np.sqrt(w[-d:])[:, None] * v[:, -d:].conj().T
    elif method == "cholesky":
        f = _cholesky_factor(m, d)
    else:
        raise ValueError(f"unknown factorization method {method!r}")
    return SynthesisMatrix(f)


def _cholesky_factor(m: np.ndarray, d: int) -> np.ndarray:
    lead = m[:d, :d]
    try:
        l1 = np.linalg.cholesky(lead)
    except np.linalg.LinAlgError as exc:
        raise RankMismatch("leading d x d block of the Gram matrix is singular") from exc
    if np.min(np.abs(np.diag(l1))) <= 1e-6:
        raise RankMismatch("leading d x d block of the Gram matrix is numerically singular")
    # rows below the leading block: L2 = G[d:, :d] L1^{-H}
    l2 = np.linalg.solve(l1, m[:d, d:]).conj().T
    lower = np.vstack([l1, l2])
    err = float(np.max(np.abs(lower @ lower.conj().T - m)))
    if err > 1e-8:
        raise RankMismatch(f"Cholesky factor reproduces the Gram matrix only to {err:.2e}")
    return lower.conj().T


def gram_from_frame(f: SynthesisMatrix, tol: float = 1e-8) -> GramMatrix:
    m = f.matrix
    norms = np.linalg.norm(m, axis=0)
    dev = np.max(np.abs(norms - 1.0)) if m.size else 0.0
    if dev > tol:
        raise NotNormalized(f"column norms deviate from 1 by {dev:.3e}")
    return GramMatrix(n=f.n, d=f.d, matrix=m.conj().T @ m)


@dataclass(frozen=True)
class VerificationReport:
    n: int
    d: int
    hermitian: bool
    hermiticity_deviation: float
    normalized: bool
    max_diagonal_deviation: float
    equiangular: bool
    coherence_target: float
    max_offdiagonal: float
    min_offdiagonal: float
    spectrum_ok: bool
    eigenvalue_clusters: dict[str, tuple[int, float]]
    max_eigenvalue_deviation: float
    tol: float
    failures: list[str]

    @property
    def passed(self) -> bool:
        return not self.failures

    @property
    def coherence(self) -> float:
        return self.max_offdiagonal

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "passed": self.passed,
            "hermitian": self.hermitian,
            "hermiticity_deviation": self.hermiticity_deviation,
            "normalized": self.normalized,
            "max_diagonal_deviation": self.max_diagonal_deviation,
            "equiangular": self.equiangular,
            "coherence_target": self.coherence_target,
            "max_offdiagonal": self.max_offdiagonal,
            "min_offdiagonal": self.min_offdiagonal,
            "spectrum_ok": self.spectrum_ok,
            "eigenvalue_clusters": {k: list(v) for k, v in self.eigenvalue_clusters.items()},
            "max_eigenvalue_deviation": self.max_eigenvalue_deviation,
            "tol": self.tol,
            "failures": list(self.failures),
        }


def verify_etf(
    obj: SynthesisMatrix | GramMatrix,
    tol: float = 1e-8,
    spectral_tol: float = 1e-6,
) -> VerificationReport:
    """Check the three ETF Gram conditions and report measured values.

    Failures are report content, never exceptions. Synthesis matrices are
    checked through their Gram matrix ``F^H F`` with ``d`` = number of rows.
    The spectrum is accepted when every eigenvalue lies within
    ``spectral_tol * n/d`` of 0 or ``n/d`` with multiplicities ``n-d`` and ``d``.
    """
    if isinstance(obj, SynthesisMatrix):
        g = obj.matrix.conj().T @ obj.matrix
        n, d = obj.n, obj.d
    else:
        g = np.asarray(obj.matrix, dtype=complex)
        n, d = obj.n, obj.d
    failures = []

    herm_dev = float(np.max(np.abs(g - g.conj().T))) if n else 0.0
    hermitian = herm_dev <= tol
    if not hermitian:
        failures.append(f"not hermitian (deviation {herm_dev:.3e})")

    diag_dev = float(np.max(np.abs(np.diag(g) - 1.0))) if n else 0.0
    normalized = diag_dev <= tol
    if not normalized:
        failures.append(f"diagonal deviates from 1 by {diag_dev:.3e}")

    target = _target_coherence(d, n) if 1 <= d <= n else float("nan")
    if n > 1:
        off = np.abs(g[~np.eye(n, dtype=bool)])
        max_off, min_off = float(off.max()), float(off.min())
        equiangular = bool(np.max(np.abs(off - target)) <= tol)
    else:
        max_off = min_off = 0.0
        equiangular = True
    if not equiangular:
        failures.append(
            f"not equiangular: |G_jl| in [{min_off:.12g}, {max_off:.12g}], target {target:.12g}"
        )

    if 1 <= d <= n:
        top = n / d
        w = np.linalg.eigvalsh((g + g.conj().T) / 2)
        zero = np.abs(w) <= spectral_tol * top
        high = np.abs(w - top) <= spectral_tol * top
        n_zero, n_high = int(zero.sum()), int(high.sum())
        dev = np.minimum(np.abs(w), np.abs(w - top))
        max_eig_dev = float(dev.max())
        clusters = {
            "0": (n_zero, float(np.abs(w[zero]).max()) if n_zero else 0.0),
            f"{top:.12g}": (n_high, float(np.abs(w[high] - top).max()) if n_high else 0.0),
        }
        spectrum_ok = n_zero == n - d and n_high == d
    else:
        spectrum_ok, clusters, max_eig_dev = False, {}, float("nan")
    if not spectrum_ok:
        failures.append(f"spectrum is not {{0 x {n - d}, {n}/{d} x {d}}}")

    return VerificationReport(
        n=n,
        d=d,
        hermitian=hermitian,
        hermiticity_deviation=herm_dev,
        normalized=normalized,
        max_diagonal_deviation=diag_dev,
        equiangular=equiangular,
        coherence_target=target,
        max_offdiagonal=max_off,
        min_offdiagonal=min_off,
        spectrum_ok=spectrum_ok,
        eigenvalue_clusters=clusters,
        max_eigenvalue_deviation=max_eig_dev,
        tol=tol,
        failures=failures,
    )


def naimark_complement(u: SignatureUnitary) -> SignatureUnitary:
    """``-U``: the signature of the complementary ETF(n-d, n), ``theta -> pi - theta``."""
    return SignatureUnitary(n=u.n, theta=math.pi - u.theta, matrix=-u.matrix)


def fickus_check(d: int, n: int) -> bool:
    """True iff one of ``d``, ``n-1``, ``n-d`` divides the product of the other two."""
    _check_dn(d, n)
    a, b, c = d, n - 1, n - d
    return (b * c) % a == 0 or (a * c) % b == 0 or (a * b) % c == 0
