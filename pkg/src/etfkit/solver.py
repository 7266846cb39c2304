"""Alternating-projection search for hermitian unitaries with prescribed moduli.

One cycle maps a matrix ``A`` through

1. ``A_ij -> A_ij / |A_ij| * sqrt(B_ij)``        (impose the target moduli)
2. ``A -> (A + A^H) / 2`` and ``A_ii -> cos(theta)``  (hermitian, constant diagonal)
3. Gram-Schmidt on the columns                   (back to the unitary group)

and the residual is measured on the unitary iterate. Seeds that come within
``refine_below`` of the target are finished with a Levenberg-Marquardt solve on
hermitian matrices; every reported signature is re-verified before it is
returned.
"""

from __future__ import annotations

import csv
import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable

import numpy as np
from scipy.optimize import least_squares

from .core import (
    FrameSpec,
    InvalidSignature,
    SignatureUnitary,
    fickus_check,
    gram_from_signature,
    naimark_complement,
    spec_from_dn,
    target_bistochastic,
    verify_etf,
)

__all__ = [
    "RankDeficientSeed",
    "SeedStatus",
    "SolverConfig",
    "SeedOutcome",
    "SolverResult",
    "ExistenceRecord",
    "seed_rng",
    "seed_matrix",
    "impose_moduli",
    "hermitize_and_fix_diagonal",
    "orthonormalize_columns",
    "cycle_residual",
    "refine_signature",
    "run_seed",
    "solve_signature",
    "solve_unistochastic",
    "scan",
    "write_scan_csv",
    "read_scan_csv",
]

PIVOT_THRESHOLD = 1e-12
STEP_ORDERS = ("alternate", "moduli_first", "hermitian_first")


class RankDeficientSeed(ArithmeticError):
    """Gram-Schmidt met a pivot below the threshold; the seed is discarded."""


class SeedStatus(str, enum.Enum):
    CONVERGED = "Converged"
    OSCILLATING = "Oscillating"
    EXHAUSTED = "Exhausted"


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 10_000
    tol: float = 1e-10
    seeds: int = 1000
    master_seed: int = 0
    real_mode: bool = False
    stall_window: int = 500
    stall_epsilon: float = 1e-14
    # finishing stage; set refine_below=0 to use the bare iteration only
    refine_below: float = 1e-3
    verify_tol: float = 1e-8
    batch_size: int = 64
    threads: int = 1
    # "moduli_first": 2, 2', 2'', 3; "hermitian_first": 2', 2'', 2, 3;
    # "alternate": moduli_first on even seed indices, hermitian_first on odd
    step_order: str = "alternate"

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        if self.seeds < 1:
            raise ValueError("seeds must be >= 1")
        if self.batch_size < 1 or self.threads < 1:
            raise ValueError("batch_size and threads must be >= 1")
        if self.step_order not in STEP_ORDERS:
            raise ValueError(f"step_order must be one of {STEP_ORDERS}")

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True)
class SeedOutcome:
    index: int
    status: SeedStatus
    iterations: int
    residual_history: np.ndarray = field(repr=False)
    matrix: np.ndarray | None = field(default=None, repr=False)
    refined: bool = False
    rank_deficient: bool = False

    @property
    def best_residual(self) -> float:
        h = self.residual_history
        return float(np.min(h)) if len(h) else math.inf


@dataclass(frozen=True)
class SolverResult:
    status: SeedStatus
    signature: SignatureUnitary | None
    residual_history: np.ndarray = field(repr=False)
    iterations: int
    winning_seed_index: int | None
    seeds_used: int
    best_residual: float
    refined: bool = False
    outcome_counts: dict[str, int] = field(default_factory=dict)
    spec: FrameSpec | None = None

    @property
    def converged(self) -> bool:
        return self.status is SeedStatus.CONVERGED


def seed_rng(master_seed: int, seed_index: int) -> np.random.Generator:
    """Counter-based stream for one seed, keyed on ``(master_seed, seed_index)``."""
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(seed_index,))
    return np.random.Generator(np.random.Philox(ss))


def seed_matrix(n: int, real_mode: bool, rng: np.random.Generator) -> np.ndarray:
    """Standard (complex) Gaussian matrix; ``E|a_ij|^2 = 1``."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if real_mode:
        return rng.standard_normal((n, n))
    re = rng.standard_normal((n, n))
    im = rng.standard_normal((n, n))
    return (re + 1j * im) / math.sqrt(2.0)


def _phase(a: np.ndarray) -> np.ndarray:
    if np.isrealobj(a):
        return np.where(a < 0, -1.0, 1.0)
    mod = np.abs(a)
    # undefined phase of an exact zero is taken as 1
    return np.where(mod > 0, a / np.where(mod > 0, mod, 1.0), 1.0)


def impose_moduli(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Keep the phases of ``a``, replace the moduli by ``sqrt(b)``."""
    return _phase(a) * np.sqrt(b)


def _hermitian_part(a: np.ndarray) -> np.ndarray:
    return (a + np.conj(np.swapaxes(a, -1, -2))) / 2


def hermitize_and_fix_diagonal(a: np.ndarray, cos_theta: float) -> np.ndarray:
    out = _hermitian_part(np.asarray(a))
    idx = np.arange(out.shape[-1])
    out[..., idx, idx] = cos_theta
    return out


def orthonormalize_columns(a: np.ndarray) -> np.ndarray:
    """Modified Gram-Schmidt on the columns of ``a`` in natural order.

    A second pass is made over a column whenever the first one lost more than
    1e-10 of orthogonality against the previous columns.
    """
    q = np.array(a, dtype=np.result_type(a, float), copy=True)
    n_cols = q.shape[1]
    for j in range(n_cols):
        v = q[:, j]
        for _ in range(2):
            for i in range(j):
                v = v - (q[:, i].conj() @ v) * q[:, i]
            norm = np.linalg.norm(v)
            if norm <= PIVOT_THRESHOLD:
                raise RankDeficientSeed(f"pivot norm {norm:.3e} at column {j}")
            v = v / norm
            if j == 0 or np.max(np.abs(q[:, :j].conj().T @ v)) <= 1e-10:
                break
        q[:, j] = v
    return q


def _orthonormalize_batch(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Gram-Schmidt factor of each matrix in a stack, via Householder QR.

    Fixing the phases of ``diag(R)`` to be positive makes ``Q`` the Gram-Schmidt
    factor. Also returns the smallest ``|R_jj|`` per matrix.
    """
    q, r = np.linalg.qr(a)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    piv = np.abs(diag)
    ph = _phase(diag)
    return q * ph[..., None, :], piv.min(axis=-1)


def cycle_residual(a: np.ndarray, b: np.ndarray, cos_theta: float | None) -> np.ndarray:
    """Max deviation from the target moduli, hermiticity and constant diagonal.

    Works on a single matrix or a stack. ``cos_theta=None`` measures the moduli
    only (plain unistochastic search).
    """
    a = np.asarray(a)
    r = np.max(np.abs(np.abs(a) ** 2 - b), axis=(-2, -1))
    if cos_theta is not None:
        herm = np.max(np.abs(a - np.conj(np.swapaxes(a, -1, -2))), axis=(-2, -1))
        diag = np.max(np.abs(np.diagonal(a, axis1=-2, axis2=-1) - cos_theta), axis=-1)
        r = np.maximum(r, np.maximum(herm, diag))
    return r


def _hermitian_first(order: str, seed_index: int) -> bool:
    if order == "alternate":
        return seed_index % 2 == 1
    return order == "hermitian_first"


def _cycle(
    a: np.ndarray, sqrt_b: np.ndarray, cos_theta: float | None, herm_first: np.ndarray | None = None
):
    """One sweep of projections on a stack, ending with Gram-Schmidt.

    ``herm_first`` marks the matrices whose sweep hermitizes before imposing
    moduli. The target moduli are symmetric with diagonal ``cos(theta) >= 0``,
    so in that order the moduli step keeps the iterate hermitian with the
    right diagonal. The other order follows the moduli step with
    hermitization, as in the plain sequence 2, 2', 2''.
    """
    if cos_theta is None:
        return _orthonormalize_batch(_phase(a) * sqrt_b)
    hf = np.zeros(a.shape[0], dtype=bool) if herm_first is None else np.asarray(herm_first, dtype=bool)
    a = np.array(a, copy=True)
    if hf.any():
        a[hf] = hermitize_and_fix_diagonal(a[hf], cos_theta)
    a = _phase(a) * sqrt_b
    if (~hf).any():
        a[~hf] = hermitize_and_fix_diagonal(a[~hf], cos_theta)
    return _orthonormalize_batch(a)


# -- finishing stage -------------------------------------------------------


def _herm_pack(u: np.ndarray, real_mode: bool) -> np.ndarray:
    n = u.shape[0]
    iu = np.triu_indices(n, 1)
    parts = [np.real(np.diag(u)), u[iu].real]
    if not real_mode:
        parts.append(u[iu].imag)
    return np.concatenate(parts)


def _herm_unpack(p: np.ndarray, n: int, real_mode: bool) -> np.ndarray:
    iu = np.triu_indices(n, 1)
    m = len(iu[0])
    upper = np.zeros((n, n), dtype=float if real_mode else complex)
    upper[iu] = p[n : n + m] if real_mode else p[n : n + m] + 1j * p[n + m :]
    u = upper + upper.conj().T
    u[np.arange(n), np.arange(n)] = p[:n]
    return u


def refine_signature(
    u0: np.ndarray, cos_theta: float, real_mode: bool = False, max_jacobians: int = 60
) -> np.ndarray:
    """Levenberg-Marquardt solve for a hermitian ``U`` with ``U^2 = I``,
    diagonal ``cos_theta`` and off-diagonal moduli ``sin^2/(n-1)``, started
    from ``u0``. Returns the final iterate whether or not it solved."""
    n = u0.shape[0]
    s2 = (1.0 - cos_theta**2) / (n - 1)
    iu = np.triu_indices(n, 1)
    iu0 = np.triu_indices(n)
    eye = np.eye(n)

    def residuals(p):
        u = _herm_unpack(p, n, real_mode)
        e = u @ u - eye
        parts = [np.real(np.diag(u)) - cos_theta, np.abs(u[iu]) ** 2 - s2, e[iu0].real]
        if not real_mode:
            parts.append(e[iu].imag)
        return np.concatenate(parts)

    start = _hermitian_part(np.real(u0) if real_mode else u0)
    p0 = _herm_pack(start, real_mode)
    sol = least_squares(
        residuals,
        p0,
        method="lm",
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
        max_nfev=max_jacobians * (len(p0) + 1),
    )
    return _herm_unpack(sol.x, n, real_mode)


# -- per-seed iteration ----------------------------------------------------


def _verified(
    m: np.ndarray, spec: FrameSpec, config: SolverConfig, b: np.ndarray
) -> SignatureUnitary | None:
    if cycle_residual(m, b, spec.cos_theta) > config.tol:
        return None
    try:
        sig = SignatureUnitary.from_matrix(m, tol=config.verify_tol)
    except InvalidSignature:
        return None
    if abs(sig.cos_theta - spec.cos_theta) > config.verify_tol:
        return None
    if not verify_etf(gram_from_signature(sig, spec.d), tol=config.verify_tol).passed:
        return None
    return sig


def _run_chunk(
    spec: FrameSpec, config: SolverConfig, indices: list[int]
) -> list[SeedOutcome]:
    """Iterate a batch of seeds together; each seed's trajectory is the same as
    if it were run alone."""
    n, c = spec.n, spec.cos_theta
    b = target_bistochastic(n, spec.theta)
    sqrt_b = np.sqrt(b)
    a = np.stack([seed_matrix(n, config.real_mode, seed_rng(config.master_seed, i)) for i in indices])
    k = len(indices)
    hist = np.full((config.max_iters, k), np.nan)
    pos = np.arange(k)  # chunk positions of the active seeds
    next_refine = np.full(k, config.refine_below)
    results: dict[int, SeedOutcome] = {}
    cutoff = math.inf  # seeds with larger index are irrelevant once one converges

    def finish(p, status, it, matrix=None, refined=False, rank_def=False):
        nonlocal cutoff
        results[p] = SeedOutcome(
            index=indices[p],
            status=status,
            iterations=it,
            residual_history=hist[:it, p].copy(),
            matrix=matrix,
            refined=refined,
            rank_deficient=rank_def,
        )
        if status is SeedStatus.CONVERGED:
            cutoff = min(cutoff, indices[p])

    idx_arr = np.asarray(indices)
    herm_first = np.array([_hermitian_first(config.step_order, i) for i in indices], dtype=bool)
    w = config.stall_window
    for it in range(config.max_iters):
        if not len(pos):
            break
        a, piv = _cycle(a, sqrt_b, c, herm_first[pos])
        r = cycle_residual(a, b, c)
        hist[it, pos] = r
        stalled = np.zeros(len(pos), dtype=bool)
        if it + 1 >= w:
            window = hist[it + 1 - w : it + 1][:, pos]
            stalled = window.max(axis=0) - window.min(axis=0) < config.stall_epsilon
        flagged = (
            (idx_arr[pos] > cutoff)
            | (piv <= PIVOT_THRESHOLD)
            | (r <= config.tol)
            | (r <= next_refine[pos])
            | stalled
        )
        if not flagged.any():
            continue
        keep = np.ones(len(pos), dtype=bool)
        for j in np.flatnonzero(flagged):
            p = pos[j]
            keep[j] = False
            if indices[p] > cutoff:
                continue
            if piv[j] <= PIVOT_THRESHOLD:
                finish(p, SeedStatus.EXHAUSTED, it + 1, rank_def=True)
                continue
            if r[j] <= config.tol:
                sig = _verified(a[j], spec, config, b)
                if sig is not None:
                    finish(p, SeedStatus.CONVERGED, it + 1, matrix=sig.matrix)
                    continue
            if r[j] <= next_refine[p]:
                polished = refine_signature(a[j], c, config.real_mode)
                sig = _verified(polished, spec, config, b)
                if sig is not None:
                    finish(p, SeedStatus.CONVERGED, it + 1, matrix=sig.matrix, refined=True)
                    continue
                next_refine[p] = r[j] / 100.0
            if stalled[j]:
                finish(p, SeedStatus.OSCILLATING, it + 1)
                continue
            keep[j] = True
        a, pos = a[keep], pos[keep]
    for p in pos:
        if indices[p] <= cutoff:
            finish(p, SeedStatus.EXHAUSTED, config.max_iters)
    return [results[p] for p in sorted(results)]


def run_seed(spec: FrameSpec, config: SolverConfig, seed_index: int) -> SeedOutcome:
    """Run a single seed of the search for ``spec`` (with ``theta <= pi/2``)."""
    if spec.is_complement:
        raise ValueError("run_seed expects a reduced spec (d <= n/2)")
    return _run_chunk(spec, config, [seed_index])[0]


def _chunks(total: int, size: int) -> list[list[int]]:
    return [list(range(s, min(s + size, total))) for s in range(0, total, size)]


def _search(spec: FrameSpec, config: SolverConfig) -> tuple[list[SeedOutcome], SeedOutcome | None]:
    chunks = _chunks(config.seeds, config.batch_size)
    outcomes: list[SeedOutcome] = []
    pool = ThreadPoolExecutor(config.threads) if config.threads > 1 else None
    try:
        for w in range(0, len(chunks), config.threads):
            wave = chunks[w : w + config.threads]
            if pool is None:
                done = [_run_chunk(spec, config, ch) for ch in wave]
            else:
                done = list(pool.map(lambda ch: _run_chunk(spec, config, ch), wave))
            for res in done:
                outcomes.extend(res)
            winners = [o for o in outcomes if o.status is SeedStatus.CONVERGED]
            if winners:
                win = min(winners, key=lambda o: o.index)
                return [o for o in outcomes if o.index <= win.index], win
    finally:
        if pool is not None:
            pool.shutdown()
    return outcomes, None


def solve_signature(spec: FrameSpec, config: SolverConfig | None = None) -> SolverResult:
    """Multi-seed search for the signature unitary of ETF(spec.d, spec.n).

    Frames with ``d > n/2`` are solved through their complement and the
    result is mapped back with :func:`naimark_complement`. The winner is the
    lowest-index convergent seed, independent of batching and threads.
    """
    config = config or SolverConfig()
    if spec.real_mode != config.real_mode:
        config = replace(config, real_mode=spec.real_mode)
    reduced = spec.reduced
    outcomes, win = _search(reduced, config)
    counts = {s.value: 0 for s in SeedStatus}
    counts["rank_deficient"] = 0
    for o in outcomes:
        counts[o.status.value] += 1
        counts["rank_deficient"] += o.rank_deficient
    best = min((o.best_residual for o in outcomes), default=math.inf)
    if win is None:
        trace = min(outcomes, key=lambda o: (o.best_residual, o.index))
        return SolverResult(
            status=SeedStatus.EXHAUSTED,
            signature=None,
            residual_history=trace.residual_history,
            iterations=trace.iterations,
            winning_seed_index=None,
            seeds_used=len(outcomes),
            best_residual=best,
            outcome_counts=counts,
            spec=spec,
        )
    sig = SignatureUnitary.from_matrix(win.matrix, tol=config.verify_tol)
    if spec.is_complement:
        sig = naimark_complement(sig)
    return SolverResult(
        status=SeedStatus.CONVERGED,
        signature=sig,
        residual_history=win.residual_history,
        iterations=win.iterations,
        winning_seed_index=win.index,
        seeds_used=win.index + 1,
        best_residual=min(best, float(cycle_residual(win.matrix, target_bistochastic(reduced.n, reduced.theta), reduced.cos_theta))),
        refined=win.refined,
        outcome_counts=counts,
        spec=spec,
    )


def solve_unistochastic(
    b: np.ndarray,
    seeds: int = 100,
    max_iters: int = 10_000,
    tol: float = 1e-10,
    master_seed: int = 0,
) -> np.ndarray | None:
    """Plain two-step search (moduli, then Gram-Schmidt) for a unitary ``U``
    with ``|U_ij|^2 = b_ij``. Returns the first (lowest-index) hit or None."""
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    sqrt_b = np.sqrt(b)
    for index in range(seeds):
        a = seed_matrix(n, False, seed_rng(master_seed, index))[None]
        for _ in range(max_iters):
            a, piv = _cycle(a, sqrt_b, None)
            if piv[0] <= PIVOT_THRESHOLD:
                break
            if cycle_residual(a, b, None)[0] <= tol:
                return a[0]
    return None


# -- existence scan --------------------------------------------------------


@dataclass(frozen=True)
class ExistenceRecord:
    n: int
    d: int
    theta: float
    found: bool
    seeds_used: int
    iterations: int
    best_residual: float
    derived: bool = False
    signature: SignatureUnitary | None = field(default=None, repr=False)

    @property
    def fickus_consistent(self) -> bool:
        return fickus_check(self.d, self.n)


def scan(
    n_min: int,
    n_max: int,
    config: SolverConfig | None = None,
    progress: Callable[[ExistenceRecord], None] | None = None,
) -> list[ExistenceRecord]:
    """Search every ETF(d, n) with ``n_min <= n <= n_max`` and ``1 <= d <= n/2``;
    the ``d > n/2`` rows are derived by Naimark complement and marked ``derived``."""
    if not 2 <= n_min <= n_max:
        raise ValueError("need 2 <= n_min <= n_max")
    config = config or SolverConfig()
    records: list[ExistenceRecord] = []
    for n in range(n_min, n_max + 1):
        direct: dict[int, ExistenceRecord] = {}
        for d in range(1, n // 2 + 1):
            spec = spec_from_dn(d, n, config.real_mode)
            res = solve_signature(spec, config)
            rec = ExistenceRecord(
                n=n,
                d=d,
                theta=spec.theta,
                found=res.converged,
                seeds_used=res.seeds_used,
                iterations=res.iterations,
                best_residual=res.best_residual,
                signature=res.signature,
            )
            direct[d] = rec
            records.append(rec)
            if progress:
                progress(rec)
        for d in range(n // 2 + 1, n):
            src = direct[n - d]
            rec = ExistenceRecord(
                n=n,
                d=d,
                theta=math.pi - src.theta,
                found=src.found,
                seeds_used=src.seeds_used,
                iterations=src.iterations,
                best_residual=src.best_residual,
                derived=True,
                signature=naimark_complement(src.signature) if src.signature else None,
            )
            records.append(rec)
            if progress:
                progress(rec)
    return records


SCAN_COLUMNS = ["n", "d", "theta", "found", "seeds_used", "iterations", "best_residual", "derived"]


def write_scan_csv(records: Iterable[ExistenceRecord], path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SCAN_COLUMNS)
        for r in records:
            w.writerow(
                [r.n, r.d, repr(r.theta), int(r.found), r.seeds_used, r.iterations, repr(r.best_residual), int(r.derived)]
            )
    return path


def read_scan_csv(path: str | Path) -> list[ExistenceRecord]:
    out = []
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(
                ExistenceRecord(
                    n=int(row["n"]),
                    d=int(row["d"]),
                    theta=float(row["theta"]),
                    found=bool(int(row["found"])),
                    seeds_used=int(row["seeds_used"]),
                    iterations=int(row["iterations"]),
                    best_residual=float(row["best_residual"]),
                    derived=bool(int(row.get("derived", 0) or 0)),
                )
            )
    return out
