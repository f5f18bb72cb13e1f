import numpy as np
import pytest

from altham.core import AdmissibleTriple, canonical_complex_structure, validate_triple
from altham.invariants import enumerate_factorizations
from altham.polar import (
    NotSkewAdjoint,
    SingularA,
    assemble_invariant_hermitian,
    flow_invariance,
    polar_complex_structure,
    quadratic_hamiltonian,
)
from helpers import random_system

ROT = np.array([[0.0, 1.0], [-1.0, 0.0]])


def test_scaled_rotation():
    pr = polar_complex_structure(2 * ROT, np.eye(2))
    assert np.allclose(pr.absA, 2 * np.eye(2))
    assert np.allclose(pr.J, ROT)
    assert pr.liouville_gap == pytest.approx(np.sqrt(2.0))


def test_unit_rotation_is_its_own_structure():
    pr = polar_complex_structure(ROT, np.eye(2))
    assert np.allclose(pr.J, ROT)
    assert pr.liouville_gap < 1e-14


def test_block_frequencies_drop_out():
    a = np.zeros((4, 4))
    a[:2, :2] = 1.5 * ROT
    a[2:, 2:] = 4.0 * ROT
    pr = polar_complex_structure(a, np.eye(4))
    expected = np.kron(np.eye(2), ROT)
    assert np.allclose(pr.J, expected)


def test_JA_equals_minus_absA():
    rng = np.random.default_rng(8)
    a, _, h = random_system(rng, 6, definite=True)
    pr = polar_complex_structure(a, h)
    assert np.linalg.norm(pr.J @ a + pr.absA) <= 1e-10 * np.linalg.norm(a)


def test_positive_rescaling_keeps_J():
    rng = np.random.default_rng(9)
    a, _, h = random_system(rng, 4, definite=True)
    j1 = polar_complex_structure(a, h).J
    j2 = polar_complex_structure(7.5 * a, h).J
    assert np.allclose(j1, j2, atol=1e-10)


def test_singular_and_non_adjoint_rejected():
    with pytest.raises(SingularA):
        polar_complex_structure(np.zeros((2, 2)), np.eye(2))
    with pytest.raises(NotSkewAdjoint):
        polar_complex_structure(np.array([[1.0, 2.0], [0.0, 1.0]]), np.eye(2))


def test_assemble_oscillator_triples():
    t = assemble_invariant_hermitian(-ROT, np.eye(2))
    j0 = canonical_complex_structure(1)
    assert np.allclose(t.g, np.eye(2))
    assert np.allclose(t.J, j0)
    assert np.allclose(t.omega, j0)
    t2 = assemble_invariant_hermitian(-ROT, 2 * np.eye(2))
    assert np.allclose(t2.J, j0)
    assert np.allclose(t2.omega, 2 * j0)


def test_assembled_triple_valid_and_flow_invariant():
    a = np.zeros((4, 4))
    a[:2, :2] = 1.0 * ROT
    a[2:, 2:] = 2.0 * ROT
    facts = [f for f in enumerate_factorizations(a) if f.positive_definite]
    t = assemble_invariant_hermitian(a, facts[0])
    assert validate_triple(t.g, t.J, t.omega).accepted
    worst = flow_invariance(a, t, [0.1, 1.0])
    assert max(worst.values()) < 1e-12


def test_quadratic_hamiltonian_values_and_conservation():
    from scipy.linalg import expm

    j0 = canonical_complex_structure(1)
    assert quadratic_hamiltonian(AdmissibleTriple.from_metric(np.eye(2), j0), [1, 0]) == 0.5
    t = AdmissibleTriple.from_metric(2 * np.eye(2), j0)
    assert quadratic_hamiltonian(t, [1, 1]) == 2.0
    rng = np.random.default_rng(2)
    a, _, h = random_system(rng, 4, definite=True)
    tri = assemble_invariant_hermitian(a, h)
    xi = rng.standard_normal(4)
    e0 = quadratic_hamiltonian(tri, xi)
    for s in np.linspace(0, 2 * np.pi, 9):
        assert quadratic_hamiltonian(tri, expm(s * a) @ xi) == pytest.approx(e0, rel=1e-8)
