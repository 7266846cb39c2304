"""Purity of reductions for frame vectors on a bipartite space ``d = d_a * d_b``.

Vector components are A-major: component ``i * d_b + k`` is A index ``i`` and
B index ``k``.
"""

from __future__ import annotations

import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from .core import GramMatrix, NotNormalized, SynthesisMatrix, frame_from_gram
from .families import u16_parametric
from .solver import seed_rng

__all__ = [
    "Bipartition",
    "PurityReport",
    "OptimizerConfig",
    "OptimizationResult",
    "FamilyEvaluationError",
    "partial_trace",
    "purity",
    "average_purity",
    "sic_average_purity",
    "u16_frame",
    "u16_average_purity",
    "optimize_average_purity",
    "ALPHA_LB",
    "ALPHA_UB",
]

# Parameters reported for the extreme average purities of the ETF(6,16) family
ALPHA_LB = (0.0970, 0.0957, 0.4536, 0.7275, 0.7287, 0.2258)
ALPHA_UB = (2.2222, 2.2233, 3.1401, 0.4173, 2.9043, 2.6317)


class FamilyEvaluationError(RuntimeError):
    def __init__(self, params, cause: BaseException):
        self.params = np.asarray(params, dtype=float).copy()
        super().__init__(f"family evaluation failed at {self.params.tolist()}: {cause}")


@dataclass(frozen=True)
class Bipartition:
    d_a: int
    d_b: int

    def __post_init__(self):
        if self.d_a < 1 or self.d_b < 1:
            raise ValueError("subsystem dimensions must be >= 1")

    @property
    def d(self) -> int:
        return self.d_a * self.d_b

    @classmethod
    def parse(cls, text: str) -> Bipartition:
        m = re.fullmatch(r"\s*(\d+)\s*[xX*]\s*(\d+)\s*", text)
        if not m:
            raise ValueError(f"bipartition must look like '2x3', got {text!r}")
        return cls(int(m.group(1)), int(m.group(2)))

    def __str__(self) -> str:
        return f"{self.d_a}x{self.d_b}"


def _check_unit(psi: np.ndarray, tol: float) -> None:
    norm = float(np.linalg.norm(psi))
    if abs(norm - 1.0) > tol:
        raise NotNormalized(f"state norm {norm:.12g} differs from 1")


def partial_trace(psi: np.ndarray, bp: Bipartition, tol: float = 1e-10) -> np.ndarray:
    """``rho_A = Tr_B |psi><psi|``."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if psi.size != bp.d:
        raise ValueError(f"state has length {psi.size}, bipartition needs {bp.d}")
    _check_unit(psi, tol)
    m = psi.reshape(bp.d_a, bp.d_b)
    return m @ m.conj().T


def purity(rho: np.ndarray) -> float:
    return float(np.real(np.trace(rho @ rho)))


def _purities(f: np.ndarray, bp: Bipartition) -> np.ndarray:
    """Per-column ``Tr(rho_A^2)`` for a synthesis matrix (columns are vectors)."""
    m = f.T.reshape(-1, bp.d_a, bp.d_b)
    rho = m @ m.conj().transpose(0, 2, 1)
    return np.sum(np.abs(rho) ** 2, axis=(1, 2))


@dataclass(frozen=True)
class PurityReport:
    bipartition: Bipartition
    per_vector: np.ndarray = field(repr=False)
    average: float = 0.0

    @property
    def argmin(self) -> int:
        return int(np.argmin(self.per_vector))

    @property
    def argmax(self) -> int:
        return int(np.argmax(self.per_vector))

    def as_dict(self) -> dict:
        return {
            "bipartition": str(self.bipartition),
            "average": self.average,
            "per_vector": [float(x) for x in self.per_vector],
            "argmin": self.argmin,
            "argmax": self.argmax,
            "min": float(self.per_vector.min()),
            "max": float(self.per_vector.max()),
        }


def average_purity(f: SynthesisMatrix | np.ndarray, bp: Bipartition, tol: float = 1e-10) -> PurityReport:
    m = f.matrix if isinstance(f, SynthesisMatrix) else np.asarray(f, dtype=complex)
    if m.shape[0] != bp.d:
        raise ValueError(f"frame dimension {m.shape[0]} differs from {bp.d_a}*{bp.d_b}")
    norms = np.linalg.norm(m, axis=0)
    if np.max(np.abs(norms - 1.0)) > tol:
        raise NotNormalized("frame vectors must be unit vectors")
    p = _purities(m, bp)
    return PurityReport(bp, p, float(np.mean(p)))


def sic_average_purity(bp: Bipartition) -> float:
    """Fixed average purity of reductions of any SIC on ``d_a x d_b``."""
    return (bp.d_a + bp.d_b) / (bp.d + 1)


def u16_frame(alphas, method: str = "eigh") -> SynthesisMatrix:
    """Synthesis matrix of the ETF(6,16) family member at ``alphas``.

    Purities depend on which rank-6 factorization is used, since two
    factorizations differ by a unitary on C^6 that need not respect the
    tensor split. The default is the eigen-factorization of
    :func:`frame_from_gram`. ``method="cholesky"`` varies smoothly with the
    parameters but fails where the leading 6x6 block of the Gram matrix is
    singular.
    """
    m = u16_parametric().matrix(alphas)
    g = GramMatrix(n=16, d=6, matrix=(4.0 / 3.0) * (np.eye(16) - m))
    return frame_from_gram(g, method=method)


def u16_average_purity(alphas, bp: Bipartition = Bipartition(2, 3), method: str = "eigh") -> float:
    return average_purity(u16_frame(alphas, method), bp, tol=1e-8).average


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 100
    master_seed: int = 0
    fatol: float = 1e-10
    xatol: float = 1e-8
    maxiter: int = 6000
    threads: int = 1

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class OptimizationResult:
    mode: str
    value: float
    params: np.ndarray = field(repr=False)
    restart_index: int = 0
    restart_values: tuple[float, ...] = field(default=(), repr=False)
    evaluations: int = 0

    def as_dict(self) -> dict:
        return {
            "mode": self.mode,
            "value": self.value,
            "params": [float(x) for x in self.params],
            "restart_index": self.restart_index,
            "restart_values": list(self.restart_values),
            "evaluations": self.evaluations,
            "global_optimum_claimed": False,
        }


def optimize_average_purity(
    objective: Callable[[np.ndarray], float],
    n_params: int,
    mode: str = "min",
    config: OptimizerConfig = OptimizerConfig(),
) -> OptimizationResult:
    """Multi-start Nelder-Mead over ``[0, 2 pi)^p``.

    Restart ``r`` draws its start from its own counter-based stream, so the
    result does not depend on ``threads``. Ties go to the lowest restart index.
    Returned parameters are reduced modulo ``2 pi``.
    """
    if mode not in ("min", "max"):
        raise ValueError("mode must be 'min' or 'max'")
    sign = 1.0 if mode == "min" else -1.0

    def f(x):
        try:
            val = float(objective(x))
        except Exception as exc:
            raise FamilyEvaluationError(x, exc) from exc
        if not math.isfinite(val):
            raise FamilyEvaluationError(x, ValueError(f"non-finite objective {val}"))
        return sign * val

    def run(r: int):
        x0 = seed_rng(config.master_seed, r).uniform(0, 2 * np.pi, n_params)
        if n_params == 0:
            return f(x0), x0, 1
        res = minimize(
            f,
            x0,
            method="Nelder-Mead",
            options=dict(fatol=config.fatol, xatol=config.xatol, maxiter=config.maxiter),
        )
        return float(res.fun), np.mod(res.x, 2 * np.pi), int(res.nfev)

    if config.threads > 1:
        with ThreadPoolExecutor(config.threads) as pool:
            results = list(pool.map(run, range(config.restarts)))
    else:
        results = [run(r) for r in range(config.restarts)]
    vals = [r[0] for r in results]
    best = int(np.argmin(vals))
    return OptimizationResult(
        mode=mode,
        value=sign * vals[best],
        params=results[best][1],
        restart_index=best,
        restart_values=tuple(sign * v for v in vals),
        evaluations=sum(r[2] for r in results),
    )
