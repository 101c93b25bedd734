import numpy as np
import pytest
from hypothesis import given, strategies as st

from ozmaps.algebra import AlgElement, ShapeMismatch, unit
from ozmaps.linmap import (LinMap, adjoint_map, apply, apply_batch, is_completely_positive, is_self_adjoint,
                           map_norm, map_norm_pos, norm_upper, selfadjointify, unital_extend)


def random_map(seed, dom=(2,), cod=(3,)):
    rng = np.random.default_rng(seed)
    m = LinMap(dom, cod, np.zeros((sum(n * n for n in cod), sum(n * n for n in dom))))
    return LinMap(m.dom, m.cod, rng.standard_normal(m.action.shape) + 1j * rng.standard_normal(m.action.shape))


def transpose_map():
    return LinMap.from_function([2], [2], lambda x: AlgElement([2], [x.blocks[0].T]))


def conjugation_map(v):
    n = v.shape[1]
    return LinMap.from_function([v.shape[0]], [n], lambda x: AlgElement([n], [v.conj().T @ x.blocks[0] @ v]))


def test_action_shape_checked():
    with pytest.raises(ShapeMismatch):
        LinMap([2], [2], np.zeros((3, 3)))


def test_apply_batch_matches_apply():
    m = random_map(1, dom=(1, 2), cod=(2, 1))
    rng = np.random.default_rng(0)
    v = rng.standard_normal((m.dom.dim, 4))
    out = apply_batch(m, v)
    for j in range(4):
        y = apply(m, AlgElement.from_vec(m.dom, v[:, j]))
        assert all(np.allclose(o[j], b) for o, b in zip(out, y.blocks))


def test_transpose_is_not_completely_positive():
    assert not is_completely_positive(transpose_map())


def test_conjugations_are_completely_positive(rng):
    v = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    w = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    assert is_completely_positive(conjugation_map(v))
    assert is_completely_positive(conjugation_map(v) + conjugation_map(w))


@given(st.integers(0, 10 ** 6))
def test_selfadjointify_is_exactly_self_adjoint(seed):
    psi = selfadjointify(random_map(seed))
    assert np.array_equal(psi.action, adjoint_map(psi).action)
    assert is_self_adjoint(psi)


@given(st.integers(0, 10 ** 6))
def test_adjoint_is_involution(seed):
    m = random_map(seed, dom=(1, 2), cod=(2,))
    assert np.array_equal(adjoint_map(adjoint_map(m)).action, m.action)


@given(st.integers(0, 10 ** 6))
def test_norm_bounds_sandwich(seed):
    m = random_map(seed)
    lo = map_norm(m, budget=4, seed=seed).value
    assert lo <= norm_upper(m) * (1 + 1e-12)


@given(st.integers(0, 10 ** 6))
def test_adjoint_is_isometric_on_measured_norm(seed):
    m = random_map(seed, dom=(2,), cod=(2,))
    a = map_norm(m, budget=8, seed=1).value
    b = map_norm(adjoint_map(m), budget=8, seed=1).value
    assert abs(a - b) <= 1e-6 * max(1.0, a) or min(a, b) >= 0.97 * max(a, b)


@given(st.integers(0, 10 ** 6))
def test_norm_at_most_four_positive_norms(seed):
    m = random_map(seed)
    assert map_norm(m, budget=4, seed=0).value <= 4 * map_norm_pos(m, budget=16, seed=0).value


def test_positive_unital_norm_floor(rng):
    v = np.linalg.qr(rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2)))[0].conj().T
    m = conjugation_map(v)  # x -> v* x v with v v* = 1 on C^2: unital
    h = apply(m, unit(m.dom))
    assert map_norm(m).value >= h.norm() - 1e-12
    assert norm_upper(m) == pytest.approx(h.norm(), rel=1e-9)


def test_zero_map_norms():
    z = LinMap.zero([2], [2])
    assert map_norm(z).value == 0.0 and norm_upper(z) == 0.0


def test_unital_extend_restriction_and_unit():
    m = random_map(3, dom=(2,), cod=(2,))
    z0 = AlgElement([2], [np.diag([1.0, 2.0])])
    ext = unital_extend(m, z0)
    assert ext.dom.blocks == (2, 1)
    assert np.array_equal(ext.action[:, :4], m.action)
    e = AlgElement(ext.dom, [np.zeros((2, 2)), np.ones((1, 1))])
    assert (apply(ext, e) - z0).norm() == 0


def test_unital_extend_zero_kills_unit():
    m = random_map(4, dom=(2,), cod=(2,))
    ext = unital_extend(m, AlgElement.zeros([2]))
    assert not np.any(ext.action[:, 4])


def test_unital_extend_shape_checked():
    with pytest.raises(ShapeMismatch):
        unital_extend(random_map(0), AlgElement.zeros([2]))
