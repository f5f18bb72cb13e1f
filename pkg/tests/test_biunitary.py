import numpy as np
import pytest

from altham.biunitary import (
    NotPositive,
    biunitary_group,
    box_biunitary_sample,
    box_example,
    box_grid,
    hermitian_matrix,
    hermitian_pair_from_triples,
    is_biunitary,
    linearized_group_dimension,
)
from altham.compat import build_compatible_pair


def test_equal_structures_full_unitary_group():
    s = biunitary_group(np.eye(3), np.eye(3))
    assert [b.multiplicity for b in s.blocks] == [3]
    assert s.group_dimension == 9


def test_distinct_eigenvalues_cyclic():
    s = biunitary_group(np.eye(3), np.diag([1.0, 2.0, 3.0]))
    assert s.cyclic
    assert s.group_dimension == 3


def test_repeated_eigenvalue():
    s = biunitary_group(np.eye(3), np.diag([2.0, 2.0, 5.0]))
    assert [b.multiplicity for b in s.blocks] == [2, 1]
    assert s.group_dimension == 5


def test_phase_function_of_G_is_biunitary():
    h1, h2 = np.eye(3), np.diag([2.0, 2.0, 5.0])
    s = biunitary_group(h1, h2)
    u = s.phase_unitary(lambda lam: lam ** 2)
    assert is_biunitary(u, h1, h2).is_biunitary
    assert is_biunitary(np.eye(3), h1, h2).is_biunitary
    assert np.allclose(s.G(), h2)


def test_generic_h1_unitary_fails():
    rng = np.random.default_rng(0)
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))
    chk = is_biunitary(q, np.eye(3), np.diag([1.0, 2.0, 3.0]))
    assert not chk.is_biunitary
    assert chk.residuals["h1"] < 1e-12


def test_random_elements_biunitary_non_identity_h1():
    rng = np.random.default_rng(1)
    c = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    h1 = c.conj().T @ c
    h2 = c.conj().T @ np.diag([1.0, 1.0, 4.0, 7.0]) @ c
    s = biunitary_group(h1, h2)
    assert s.group_dimension == 6
    for _ in range(10):
        assert is_biunitary(s.random_element(rng), h1, h2).is_biunitary


def test_linearized_oracle_on_hand_cases():
    assert linearized_group_dimension(np.eye(2), np.eye(2)) == 4
    assert linearized_group_dimension(np.eye(3), np.diag([1.0, 2.0, 2.0])) == 5


def test_not_positive_rejected():
    with pytest.raises(NotPositive):
        biunitary_group(np.diag([1.0, -1.0]), np.eye(2))
    with pytest.raises(NotPositive):
        biunitary_group(np.eye(2), np.diag([1.0, -1.0]))


def test_hermitian_matrix_from_compatible_common_J_pair():
    pair = build_compatible_pair([(2.0, 1, 2), (3.0, 1, 2)], seed=4)
    m1, m2 = hermitian_pair_from_triples(pair.triple1, pair.triple2)
    assert np.allclose(m1, np.eye(2), atol=1e-12)
    assert np.allclose(m2, m2.conj().T, atol=1e-12)
    assert np.allclose(np.linalg.eigvalsh(m2), [2.0, 3.0])


def test_hermitian_matrix_basis_is_complex():
    pair = build_compatible_pair([(1.0, 1, 4)], seed=2)
    t = pair.triple1
    m, basis = hermitian_matrix(t)
    assert basis.shape == (4, 2)
    full = np.hstack([basis, t.J @ basis])
    assert abs(np.linalg.det(full)) > 1e-8


def test_box_examples():
    full = box_example(4, 1.0, "full")
    assert np.allclose(full.grid, [-0.75, -0.25, 0.25, 0.75])
    assert full.multiplicities == {1.0625: 2, 1.5625: 2}
    assert full.group_dimension == 8
    assert not full.cyclic
    half = box_example(2, 1.0, "half")
    assert np.allclose(half.grid, [0.25, 0.75])
    assert half.group_dimension == 2
    assert half.cyclic


def test_box_sample_is_biunitary():
    rep = box_example(10)
    u = box_biunitary_sample(rep, np.random.default_rng(0))
    h2 = np.diag(rep.eigenvalues)
    assert is_biunitary(u, np.eye(10), h2).is_biunitary


@pytest.mark.parametrize("args", [(1, 1.0, "half"), (4, 0.0, "full"), (5, 1.0, "full"), (4, 1.0, "middle")])
def test_box_grid_rejects(args):
    with pytest.raises(ValueError):
        box_grid(*args)
