"""Acceptance criteria, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line before asserting, so the
verdicts are visible in ``pytest -v`` output without ``-s``. Run just this
file with ``pytest -m acceptance``; add ``-m "acceptance or slow"`` for the
long variants.
"""

import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from etfkit.construct import (
    Equivalence,
    certify_inequivalent,
    partition_count,
    prop2_enumerate,
    real_hadamard_tensor,
    sylvester_hadamard,
)
from etfkit.core import (
    frame_from_gram,
    gram_from_signature,
    signature_checks,
    fickus_check,
    spec_from_dn,
    verify_etf,
)
from etfkit.entangle import (
    ALPHA_LB,
    ALPHA_UB,
    Bipartition,
    OptimizerConfig,
    average_purity,
    optimize_average_purity,
    u16_average_purity,
)
from etfkit.families import (
    EQ6_H,
    er_pair,
    hermitian_family,
    inject_parameter,
    u16_family,
    u16_parametric,
    validate_family,
)
from etfkit.roots import roots_compatible_etfs, sic_root_candidates
from etfkit.solver import SolverConfig, scan, solve_signature

pytestmark = pytest.mark.acceptance


@pytest.fixture
def verdict(capsys):
    def emit(label: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} {label}: {detail}")
        assert ok, f"{label}: {detail}"

    return emit


def test_criterion_01_solver_reproduction(verdict):
    t0 = time.perf_counter()
    rows, ok = [], True
    for d, n in [(1, 3), (2, 4), (3, 7), (3, 9), (6, 16)]:
        res = solve_signature(spec_from_dn(d, n), SolverConfig(seeds=1000, tol=1e-10))
        passed = res.converged and verify_etf(gram_from_signature(res.signature, d), tol=1e-8).passed
        ok &= passed
        rows.append(f"({d},{n}) {res.status.value} seed={res.winning_seed_index} verify={passed}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 300
    verdict("criterion 1 (solver reproduction)", ok, "; ".join(rows) + f"; {elapsed:.1f}s")


def _negative(d, n, seeds, max_iters):
    res = solve_signature(spec_from_dn(d, n), SolverConfig(seeds=seeds, max_iters=max_iters))
    verified = res.converged and verify_etf(gram_from_signature(res.signature, d), tol=1e-8).passed
    return res, verified


def test_criterion_02_negative_control(verdict):
    # (11,22) runs all 10^4 seeds with a 1000-iteration cap per seed; the
    # full-cap run is test_criterion_02_negative_control_full_cap
    r5, v5 = _negative(2, 5, 1000, 10_000)
    r22, v22 = _negative(11, 22, 10_000, 1000)
    ok = not r5.converged and not r22.converged and not v5 and not v22
    detail = (
        f"(2,5) {r5.status.value} over {r5.seeds_used} seeds {r5.outcome_counts} best={r5.best_residual:.3g}; "
        f"(11,22) {r22.status.value} over {r22.seeds_used} seeds {r22.outcome_counts} best={r22.best_residual:.3g}; "
        "evidence only, not a nonexistence proof"
    )
    verdict("criterion 2 (negative control)", ok, detail)


@pytest.mark.slow
def test_criterion_02_negative_control_full_cap(verdict):
    r22, v22 = _negative(11, 22, 10_000, 10_000)
    verdict(
        "criterion 2 full cap (negative control, (11,22))",
        not r22.converged and not v22,
        f"{r22.status.value} over {r22.seeds_used} seeds {r22.outcome_counts}",
    )


@pytest.mark.slow
def test_criterion_03_etf_10_20(verdict):
    res = solve_signature(spec_from_dn(10, 20), SolverConfig(seeds=10_000))
    ok = res.converged and verify_etf(gram_from_signature(res.signature, 10), tol=1e-8).passed
    verdict("criterion 3 (ETF(10,20) within 10^4 seeds)", ok, f"{res.status.value} seed={res.winning_seed_index}")


def test_criterion_04_tensor_constructions(verdict):
    rows, ok = [], True
    for n, expect in [(16, partition_count(2)), (64, partition_count(3)), (36, partition_count(1) ** 2)]:
        sigs = prop2_enumerate(n)
        d = (n - math.isqrt(n)) // 2
        frames_ok = all(verify_etf(gram_from_signature(s, d), tol=1e-8).passed for s in sigs)
        pairs = [certify_inequivalent(a, b) for i, a in enumerate(sigs) for b in sigs[i + 1 :]]
        ineq = all(p is Equivalence.INEQUIVALENT for p in pairs)
        ok &= len(sigs) == expect and frames_ok and ineq
        rows.append(f"N={n}: {len(sigs)} matrices (expect {expect}), verify={frames_ok}, pairwise inequivalent={ineq}")
    verdict("criterion 4 (tensor constructions)", ok, "; ".join(rows))


def test_criterion_05_roots_regressions(verdict):
    compat = [d for d, _ in roots_compatible_etfs(64, 4)]
    sics = sic_root_candidates(100)
    ok = compat == [8, 28, 32] and sics == [2, 3, 8, 15, 24, 35, 48, 63, 80, 99]
    verdict("criterion 5 (roots of unity)", ok, f"compatible d for N=64, m=4: {compat}; SIC candidates: {sics}")


def test_criterion_06_u16_family(verdict):
    rng = np.random.default_rng(6)
    bad = 0
    for _ in range(100):
        u = u16_family(rng.uniform(0, 2 * np.pi, 6))
        g = gram_from_signature(u, 6)
        ev = np.sort(np.linalg.eigvalsh(g.matrix))
        spectrum = np.max(np.abs(ev - np.r_[np.zeros(10), np.full(6, 8 / 3)]))
        if signature_checks(u.matrix, 1e-8) or spectrum > 1e-8:
            bad += 1
    u0 = u16_family(np.zeros(6)).matrix
    dev0 = float(np.max(np.abs(u0 - real_hadamard_tensor(4).matrix)))
    # H2^(x)4 has non-constant diagonal; the constant-diagonal form is a row permutation of it
    perm = sorted(map(tuple, np.round(4 * u0.real).astype(int))) == sorted(
        map(tuple, np.round(4 * sylvester_hadamard(4)).astype(int))
    )
    rep = validate_family(u16_parametric(), 100, np.random.default_rng(0))
    ok = bad == 0 and dev0 <= 1e-12 and perm and rep.ok
    detail = (
        f"{100 - bad}/100 members pass invariants and spectrum; |U16(0) - H2^(x)4/4 (constant-diagonal form)| = {dev0:.1e}; "
        f"row permutation of H2^(x)4/4: {perm}; effective parameters {rep.effective_parameters}"
    )
    verdict("criterion 6 (six-parameter family)", ok, detail)


def test_criterion_07_hermitian_injection_degenerate(verdict):
    pair = er_pair(EQ6_H, 2, 3)
    exact = all(
        np.array_equal(inject_parameter(EQ6_H, pair, a, hermitian_mode=True), EQ6_H)
        for a in np.linspace(0, 2 * np.pi, 97)
    )
    rep = validate_family(hermitian_family(EQ6_H, [pair], d=3), 20)
    ok = exact and rep.effective_parameters == 0
    verdict("criterion 7 (hermitian injection degenerate)", ok, f"H(a) == H(0) exactly: {exact}; effective parameters {rep.effective_parameters}")


def test_criterion_08_sic_purity(verdict):
    res = solve_signature(spec_from_dn(4, 16), SolverConfig(seeds=1000))
    assert res.converged
    f = frame_from_gram(gram_from_signature(res.signature, 4))
    avg = average_purity(f, Bipartition(2, 2)).average
    verdict("criterion 8 (SIC average purity)", abs(avg - 0.8) <= 1e-6, f"average = {avg:.12f}, expected 0.8")


def test_criterion_09_purity_bounds(verdict):
    bp = Bipartition(2, 3)
    lb = u16_average_purity(ALPHA_LB, bp)
    ub = u16_average_purity(ALPHA_UB, bp)
    cfg = OptimizerConfig(restarts=100, master_seed=0)
    lo = optimize_average_purity(lambda a: u16_average_purity(a, bp), 6, "min", cfg)
    hi = optimize_average_purity(lambda a: u16_average_purity(a, bp), 6, "max", cfg)
    repro = abs(lb - 0.576737) <= 1e-3 and abs(ub - 0.804885) <= 1e-3
    ok = repro and lo.value <= 0.5768 and hi.value >= 0.8045
    detail = (
        f"eigh factorization; at alpha_LB {lb:.6f} (target 0.576737), at alpha_UB {ub:.6f} (target 0.804885), "
        f"reproduced={repro}; optimized min {lo.value:.6f} (need <= 0.5768), max {hi.value:.6f} (need >= 0.8045)"
    )
    verdict("criterion 9 (purity bounds)", ok, detail)


def test_criterion_10_fickus_consistency(verdict):
    # reduced configuration; the full default scan is test_criterion_10_full_scan
    recs = scan(3, 16, SolverConfig(seeds=20, max_iters=2000))
    found = [(r.d, r.n) for r in recs if r.found]
    bad = [(d, n) for d, n in found if not fickus_check(d, n)]
    verdict("criterion 10 (Fickus consistency, reduced scan)", not bad, f"{len(found)} found, violations {bad}")


@pytest.mark.slow
def test_criterion_10_full_scan(verdict):
    recs = scan(3, 16, SolverConfig())
    found = [(r.d, r.n) for r in recs if r.found]
    bad = [(d, n) for d, n in found if not fickus_check(d, n)]
    verdict("criterion 10 full scan (Fickus consistency)", not bad, f"{len(found)} found, violations {bad}")


def test_criterion_11_property_suite_standalone(verdict):
    path = Path(__file__).with_name("test_properties.py")
    proc = subprocess.run(
        [sys.executable, "-m", "pytest", "-q", "-m", "property", "-p", "no:cacheprovider", str(path)],
        capture_output=True,
        text=True,
    )
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr.strip()
    verdict("criterion 11 (property suites standalone)", proc.returncode == 0, tail)
