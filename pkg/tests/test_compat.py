from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from altham.compat import (
    CompatPair,
    IncompatibleInput,
    build_compatible_pair,
    canonical_hermitian_forms,
    check_compatibility,
    connecting_operators,
    decompose,
    poisson_commutation_check,
)
from altham.core import AdmissibleTriple, DimensionError, canonical_complex_structure, canonical_triple
from altham.polar import assemble_invariant_hermitian


def signature_multiset(report):
    return Counter((round(lam, 9), sign, dim) for lam, sign, dim in report.signature)


def random_triple(rng, n):
    s = rng.standard_normal((n, n)) + 2 * np.eye(n)
    j = np.linalg.inv(s) @ canonical_complex_structure(n // 2) @ s
    return AdmissibleTriple.from_metric(s.T @ s, j)


def test_self_pair_compatible():
    t = canonical_triple(2)
    rep = check_compatibility(CompatPair(t, t))
    assert rep.compatible
    assert max(rep.residuals.values()) == 0.0


def test_blockwise_scaled_pair_compatible():
    t1 = canonical_triple(2)
    d = np.diag([1.0, 1.0, 3.0, 3.0])
    t2 = AdmissibleTriple.from_metric(d, t1.J)
    assert check_compatibility(CompatPair(t1, t2)).compatible


def test_generic_pair_incompatible():
    rng = np.random.default_rng(0)
    pair = CompatPair(canonical_triple(2), random_triple(rng, 4))
    rep = check_compatibility(pair)
    assert not rep.compatible
    assert max(rep.residuals.values()) > 1e-3
    with pytest.raises(IncompatibleInput):
        decompose(pair)
    # negative control for the commutation of the two energies
    assert not poisson_commutation_check(pair).passed


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        CompatPair(canonical_triple(1), canonical_triple(2))


def test_connecting_operators_identical():
    t = canonical_triple(2)
    ops = connecting_operators(CompatPair(t, t))
    assert np.allclose(ops.G, np.eye(4))
    assert np.allclose(ops.T, np.eye(4))


def test_connecting_operators_blockwise():
    pair = build_compatible_pair([(2.0, 1, 2), (3.0, -1, 2)])
    ops = connecting_operators(pair)
    assert np.allclose(ops.G, np.diag([2, 2, 3, 3]))
    assert np.allclose(ops.T, np.diag([2, 2, -3, -3]))


def test_connecting_operator_identities_seeded():
    pair = build_compatible_pair([(1.5, 1, 2), (4.0, -1, 4)], seed=3)
    ops = connecting_operators(pair)
    assert max(ops.residuals.values()) <= 1e-10


def test_identical_triples_one_block():
    t = canonical_triple(3)
    rep = decompose(CompatPair(t, t))
    assert rep.signature == [(1.0, 1, 6)]


def test_seeded_three_blocks_recovered():
    pair = build_compatible_pair([(2.0, 1, 2), (2.0, -1, 2), (5.0, 1, 4)], seed=42)
    rep = decompose(pair)
    assert signature_multiset(rep) == Counter({(2.0, 1, 2): 1, (2.0, -1, 2): 1, (5.0, 1, 4): 1})
    for b in rep.blocks:
        assert max(b.residuals.values()) <= 1e-9
    assert max(rep.cross_orthogonality.values()) <= 1e-10


def test_oscillator_pair_from_scaled_factorization():
    rot = np.array([[0.0, 1.0], [-1.0, 0.0]])
    t1 = canonical_triple(1)
    t2 = assemble_invariant_hermitian(-rot, 2 * np.eye(2))
    rep = decompose(CompatPair(t1, t2))
    assert rep.signature == [(pytest.approx(2.0), 1, 2)]
    forms = canonical_hermitian_forms(rep)
    assert forms.lambdas_plus == [pytest.approx(2.0)]
    assert forms.lambdas_minus == []


def test_canonical_forms_signs():
    t = canonical_triple(1)
    assert not canonical_hermitian_forms(decompose(CompatPair(t, t))).both_signs_present
    rep = decompose(build_compatible_pair([(2.0, 1, 2), (3.0, -1, 2)], seed=1))
    forms = canonical_hermitian_forms(rep)
    assert forms.both_signs_present
    assert forms.lambdas_plus == [pytest.approx(2.0)]
    assert forms.lambdas_minus == [pytest.approx(3.0)]


def test_poisson_commutation():
    t = canonical_triple(2)
    assert max(poisson_commutation_check(CompatPair(t, t)).values.values()) < 1e-15
    pair = build_compatible_pair([(1.0, 1, 2), (2.5, -1, 2)], seed=5)
    assert poisson_commutation_check(pair).passed


def test_full_basis_diagonalizes_both_metrics():
    pair = build_compatible_pair([(0.5, 1, 2), (2.0, -1, 4)], seed=8)
    rep = decompose(pair)
    b = rep.full_basis()
    assert np.allclose(b.T @ pair.triple1.g @ b, np.eye(6), atol=1e-10)
    m = b.T @ pair.triple2.g @ b
    assert np.allclose(m, np.diag(np.diag(m)), atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_signature_invariant_under_orthogonal_congruence(seed):
    rng = np.random.default_rng(seed)
    blocks = [(1.0, 1, 2), (3.0, -1, 2), (3.0, 1, 2)]
    pair = build_compatible_pair(blocks, seed=seed)
    q, _ = np.linalg.qr(rng.standard_normal((6, 6)))

    def move(t):
        return AdmissibleTriple.from_metric(q.T @ t.g @ q, q.T @ t.J @ q)

    moved = CompatPair(move(pair.triple1), move(pair.triple2))
    assert signature_multiset(decompose(pair)) == signature_multiset(decompose(moved))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_block_dimensions_even(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, 4))
    lams = rng.choice(np.arange(1, 10) * 0.5, size=k, replace=False)
    blocks = [(float(l), int(rng.choice([-1, 1])), 2 * int(rng.integers(1, 3))) for l in lams]
    rep = decompose(build_compatible_pair(blocks, seed=seed))
    assert all(b.dim % 2 == 0 for b in rep.blocks)
