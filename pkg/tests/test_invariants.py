import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from altham.invariants import (
    NoInvertibleSkew,
    check_trace_condition,
    enumerate_factorizations,
    invariance_residual,
    recursion_fields,
    solve_invariant_forms,
)
from helpers import random_system

ROT = np.array([[0.0, 1.0], [-1.0, 0.0]])


def rotation_blocks(freqs):
    n = 2 * len(freqs)
    a = np.zeros((n, n))
    for k, w in enumerate(freqs):
        a[2 * k: 2 * k + 2, 2 * k: 2 * k + 2] = w * ROT
    return a


def test_rotation_symmetric_space_is_identity():
    b = solve_invariant_forms(ROT, "symmetric")
    assert b.dimension == 1
    assert np.allclose(b.basis[0], np.eye(2) / np.sqrt(2))


def test_rotation_skew_space():
    b = solve_invariant_forms(ROT, "skew")
    assert b.dimension == 1
    assert np.allclose(b.basis[0], ROT / np.sqrt(2))


def test_two_frequencies_symmetric_dim_two():
    assert solve_invariant_forms(rotation_blocks([1.0, 2.5]), "symmetric").dimension == 2
    # equal frequencies couple the blocks
    assert solve_invariant_forms(rotation_blocks([1.0, 1.0]), "symmetric").dimension == 4


def test_basis_elements_are_invariant():
    rng = np.random.default_rng(0)
    a, _, _ = random_system(rng, 6)
    for kind in ("symmetric", "skew"):
        for b in solve_invariant_forms(a, kind).basis:
            assert invariance_residual(b, a) < 1e-10


def test_trace_condition():
    assert check_trace_condition(ROT, 3).passed
    rep = check_trace_condition(np.eye(2), 3)
    assert not rep.passed
    assert rep.traces[0] == pytest.approx(2.0)
    rng = np.random.default_rng(11)
    a, _, _ = random_system(rng, 8)
    assert check_trace_condition(a, 5).passed


def test_rotation_factorization_sign():
    facts = enumerate_factorizations(ROT)
    best = facts[0]
    assert best.positive_definite
    assert np.allclose(best.omega, [[0, -1], [1, 0]])
    assert np.allclose(best.H, np.eye(2))
    assert np.allclose(best.Lambda, ROT)
    assert best.residual < 1e-15


def test_identity_has_no_skew_invariant():
    with pytest.raises(NoInvertibleSkew):
        enumerate_factorizations(np.eye(2))


def test_anisotropic_oscillator_sign_patterns():
    # each block's skew form can flip sign independently; only the all-equal
    # patterns give a definite H
    freqs = [1.0, 1.7, 2.9]
    a = rotation_blocks(freqs)
    facts = enumerate_factorizations(a, attempts=100, seed=0)
    patterns = set()
    for f in facts:
        signs = tuple(int(np.sign(f.omega[2 * k + 1, 2 * k])) for k in range(len(freqs)))
        patterns.add((signs, f.definite))
    assert len({p for p, _ in patterns}) == 2 ** len(freqs)
    definite = {p for p, d in patterns if d}
    assert definite == {(1, 1, 1), (-1, -1, -1)}


def test_factorization_deterministic():
    rng = np.random.default_rng(3)
    a, _, _ = random_system(rng, 4)
    f1 = enumerate_factorizations(a, 20, seed=7)
    f2 = enumerate_factorizations(a, 20, seed=7)
    assert all(np.array_equal(x.omega, y.omega) for x, y in zip(f1, f2))


def test_recursion_fields_rotation():
    rep = recursion_fields(ROT, 2)
    assert len(rep.fields) == 3
    assert np.allclose(rep.fields[0], ROT)
    assert np.allclose(rep.fields[1], -ROT)
    assert np.allclose(rep.fields[2], ROT)
    assert rep.max_commutator == 0.0


def test_recursion_fields_preserve_omega():
    rng = np.random.default_rng(4)
    a, lam, _ = random_system(rng, 6)
    rep = recursion_fields(a, 3)
    assert max(rep.invariance_residuals) < 1e-9
    omega = np.linalg.inv(lam)
    for f in rep.fields:
        m = omega @ f
        assert np.linalg.norm(m - m.T) <= 1e-9 * np.linalg.norm(m)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), half=st.integers(1, 4))
def test_kernel_dimension_invariant_under_similarity(seed, half):
    rng = np.random.default_rng(seed)
    a, _, _ = random_system(rng, 2 * half)
    s = np.eye(2 * half) + 0.3 * rng.standard_normal((2 * half, 2 * half))
    b = s @ a @ np.linalg.inv(s)
    for kind in ("symmetric", "skew"):
        assert solve_invariant_forms(a, kind).dimension == solve_invariant_forms(b, kind).dimension


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), half=st.integers(1, 5))
def test_round_trip_contains_omega(seed, half):
    rng = np.random.default_rng(seed)
    a, lam, _ = random_system(rng, 2 * half)
    omega = np.linalg.inv(lam)
    basis = solve_invariant_forms(a, "skew")
    assert basis.projection_residual(omega) <= 1e-8
    for f in enumerate_factorizations(a, 20, seed=seed, basis=basis):
        assert f.residual <= 1e-10
