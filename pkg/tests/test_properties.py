"""Property-based checks; run alone with ``pytest -m property``."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from etfkit.construct import (
    Equivalence,
    certify_inequivalent,
    haagerup_set,
    hermitian_fourier,
    partition_count,
    partitions,
    real_hadamard_tensor,
)
from etfkit.core import (
    SignatureUnitary,
    frame_from_gram,
    gram_from_frame,
    gram_from_signature,
    naimark_complement,
    signature_from_gram,
    spec_from_dn,
    target_bistochastic,
    verify_etf,
    welch_bound,
)
from etfkit.entangle import Bipartition, partial_trace, purity
from etfkit.families import u16_family
from etfkit.roots import two_k_fraction, vanishing_sum_bruteforce, vanishing_sum_feasible
from etfkit.solver import hermitize_and_fix_diagonal, impose_moduli, orthonormalize_columns

pytestmark = pytest.mark.property

seeds = st.integers(0, 2**32 - 1)
angles = st.lists(st.floats(0, 2 * math.pi, allow_nan=False), min_size=6, max_size=6)


def _complex(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def _random_unitary(rng, n):
    q, r = np.linalg.qr(_complex(rng, n, n))
    return q * (np.diag(r) / np.abs(np.diag(r)))


@st.composite
def dn_pairs(draw, n_max=60):
    n = draw(st.integers(2, n_max))
    d = draw(st.integers(1, n - 1))
    return d, n


@st.composite
def signatures(draw):
    kind = draw(st.sampled_from(["fourier", "hadamard", "u16"]))
    if kind == "fourier":
        n = draw(st.integers(2, 5))
        return hermitian_fourier(n), (n * n - n) // 2
    if kind == "hadamard":
        k = draw(st.sampled_from([2, 4]))
        n = 2**k
        return real_hadamard_tensor(k), (n - math.isqrt(n)) // 2
    return u16_family(draw(angles)), 6


# -- projection steps --------------------------------------------------------


@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(2, 9), st.floats(0.05, math.pi / 2))
def test_impose_moduli_idempotent(seed, n, theta):
    rng = np.random.default_rng(seed)
    b = target_bistochastic(n, theta)
    once = impose_moduli(_complex(rng, n, n), b)
    assert np.allclose(impose_moduli(once, b), once, atol=1e-14)


@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(2, 9), st.floats(-1, 1))
def test_hermitize_idempotent(seed, n, c):
    rng = np.random.default_rng(seed)
    once = hermitize_and_fix_diagonal(_complex(rng, n, n), c)
    assert np.allclose(hermitize_and_fix_diagonal(once, c), once, atol=1e-14)
    assert np.allclose(once, once.conj().T)


@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(2, 9))
def test_orthonormalize_idempotent(seed, n):
    rng = np.random.default_rng(seed)
    once = orthonormalize_columns(_complex(rng, n, n))
    assert np.max(np.abs(orthonormalize_columns(once) - once)) <= 1e-12
    assert np.max(np.abs(once.conj().T @ once - np.eye(n))) <= 1e-12


# -- Gram and signature maps -------------------------------------------------


@settings(max_examples=30, deadline=None)
@given(signatures())
def test_signature_gram_roundtrip(case):
    u, d = case
    g = gram_from_signature(u, d)
    back = signature_from_gram(g)
    assert np.max(np.abs(back.matrix - u.matrix)) <= 1e-12
    assert verify_etf(g).passed


@settings(max_examples=30, deadline=None)
@given(signatures())
def test_frame_roundtrip(case):
    u, d = case
    g = gram_from_signature(u, d)
    f = frame_from_gram(g)
    assert f.matrix.shape == (d, u.n)
    assert np.max(np.abs(gram_from_frame(f).matrix - g.matrix)) <= 1e-10


@settings(max_examples=30, deadline=None)
@given(signatures())
def test_naimark_involution(case):
    u, d = case
    c = naimark_complement(u)
    assert np.array_equal(naimark_complement(c).matrix, u.matrix)
    assert verify_etf(gram_from_signature(c, u.n - d)).passed


# -- Welch, theta and k ------------------------------------------------------


@given(dn_pairs())
def test_theta_identity(dn):
    d, n = dn
    s = spec_from_dn(d, n)
    assert n * math.sin(s.theta / 2) ** 2 == pytest.approx(d, rel=1e-12)
    assert s.cos_theta == pytest.approx(math.cos(s.theta), abs=1e-12)


@given(dn_pairs())
def test_welch_identity(dn):
    d, n = dn
    s = spec_from_dn(d, n)
    # the signature's off-diagonal modulus is (2d/n) times the Gram coherence 1/alpha
    assert (2 * d / n) / welch_bound(d, n) == pytest.approx(math.sin(s.theta) / math.sqrt(n - 1), rel=1e-12)


@given(dn_pairs())
def test_k_identity(dn):
    d, n = dn
    s = spec_from_dn(d, n)
    assert s.k == pytest.approx(math.sqrt(n - 1) * math.cos(s.theta) / math.sin(s.theta), rel=1e-9, abs=1e-12)
    exact = two_k_fraction(d, n)
    if exact is not None:
        assert float(exact) == pytest.approx(2 * s.k, rel=1e-12, abs=1e-12)


@given(dn_pairs())
def test_target_bistochastic_rows(dn):
    d, n = dn
    s = spec_from_dn(d, n).reduced
    b = target_bistochastic(n, s.theta)
    assert np.allclose(b.sum(axis=0), 1, atol=1e-14)
    assert np.allclose(b.sum(axis=1), 1, atol=1e-14)


# -- Haagerup invariance -----------------------------------------------------


@settings(max_examples=15, deadline=None)
@given(seeds, st.sampled_from(["fourier:2", "fourier:3", "hadamard:4", "u16"]))
def test_haagerup_invariant_under_equivalence(seed, which):
    rng = np.random.default_rng(seed)
    if which == "u16":
        u = u16_family(rng.uniform(0, 2 * np.pi, 6)).matrix
    elif which == "hadamard:4":
        u = real_hadamard_tensor(4).matrix
    else:
        u = hermitian_fourier(int(which[-1])).matrix
    n = u.shape[0]
    p, q = rng.permutation(n), rng.permutation(n)
    dl = np.exp(2j * np.pi * rng.random(n))
    dr = np.exp(2j * np.pi * rng.random(n))
    v = dl[:, None] * u[p][:, q] * dr[None, :]
    assert haagerup_set(u).same_as(haagerup_set(v))
    assert certify_inequivalent(u, v) is Equivalence.INCONCLUSIVE


# -- purity ------------------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(1, 4), st.integers(1, 4))
def test_purity_bounds(seed, da, db):
    rng = np.random.default_rng(seed)
    bp = Bipartition(da, db)
    psi = _complex(rng, bp.d)
    psi /= np.linalg.norm(psi)
    p = purity(partial_trace(psi, bp))
    assert 1 / min(da, db) - 1e-12 <= p <= 1 + 1e-12


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(1, 4), st.integers(1, 4))
def test_purity_local_unitary_invariance(seed, da, db):
    rng = np.random.default_rng(seed)
    bp = Bipartition(da, db)
    psi = _complex(rng, bp.d)
    psi /= np.linalg.norm(psi)
    local = np.kron(_random_unitary(rng, da), _random_unitary(rng, db))
    assert purity(partial_trace(local @ psi, bp)) == pytest.approx(purity(partial_trace(psi, bp)), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(1, 4), st.integers(1, 4))
def test_purity_symmetric_in_subsystems(seed, da, db):
    rng = np.random.default_rng(seed)
    psi = _complex(rng, da * db)
    psi /= np.linalg.norm(psi)
    swapped = psi.reshape(da, db).T.reshape(-1)
    pa = purity(partial_trace(psi, Bipartition(da, db)))
    pb = purity(partial_trace(swapped, Bipartition(db, da)))
    assert pa == pytest.approx(pb, abs=1e-12)


# -- combinatorics -----------------------------------------------------------


def _partitions_bruteforce(r):
    if r == 0:
        return {()}
    out = set()
    # every composition of r, sorted, is a partition
    for cuts in itertools.product([0, 1], repeat=r - 1):
        parts, run = [], 1
        for c in cuts:
            if c:
                parts.append(run)
                run = 1
            else:
                run += 1
        parts.append(run)
        out.add(tuple(sorted(parts, reverse=True)))
    return out


@given(st.integers(0, 10))
def test_partitions_vs_bruteforce(r):
    brute = _partitions_bruteforce(r)
    assert set(partitions(r)) == brute
    assert len(partitions(r)) == len(brute) == partition_count(r)


@given(st.integers(0, 60), st.integers(2, 30))
def test_vanishing_sum_vs_bruteforce(n_prime, m):
    assert vanishing_sum_feasible(n_prime, m)[0] == vanishing_sum_bruteforce(n_prime, m)
