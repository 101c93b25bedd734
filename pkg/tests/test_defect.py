import numpy as np
import pytest
from hypothesis import given, strategies as st

from ozmaps.algebra import AlgElement
from ozmaps.defect import jordan_defect, oz_defect, sa_defect
from ozmaps.genlab import gen_jordan_hom, gen_order_zero, perturb
from ozmaps.linmap import LinMap, selfadjointify


def test_identity_has_zero_defects():
    m = LinMap.identity([2])
    assert oz_defect(m).value < 1e-12
    assert sa_defect(m).value < 1e-12
    assert jordan_defect(m).value < 1e-12


def test_transpose_is_jordan_but_not_multiplicative():
    t = LinMap.from_function([2], [2], lambda x: AlgElement([2], [x.blocks[0].T]))
    assert jordan_defect(t).value < 1e-12
    e12 = AlgElement([2], [np.array([[0, 1], [0, 0]])])
    e21 = AlgElement([2], [np.array([[0, 0], [1, 0]])])
    prod = t(e12 @ e21) - t(e12) @ t(e21)
    # t(E11) - t(E12) t(E21) = E11 - E22
    assert prod.norm() == pytest.approx(1.0)


def test_enumeration_on_commutative_domain_is_exact():
    # phi(a, b) = diag(a + 0.1 b, 0.2 a + b): disjoint indicators give 0.1*1 + ... computed by hand
    w = np.array([[1.0, 0.1], [0.2, 1.0]])
    m = LinMap([1, 1], [1, 1], w)
    rep = oz_defect(m)
    assert rep.strategy == "enumerate"
    # ||phi(e1) phi(e2)|| = max(1*0.1, 0.2*1)
    assert rep.value == pytest.approx(0.2)


def test_planted_oz_witness_recovered():
    # orthogonal rank-one projections mapped to overlapping ones
    v1 = np.array([1.0, 0.0])
    v2 = np.array([np.cos(0.3), np.sin(0.3)])
    f = lambda x: AlgElement([2], [x.blocks[0][0, 0] * np.outer(v1, v1) + x.blocks[0][1, 1] * np.outer(v2, v2)])
    m = LinMap.from_function([2], [2], f)
    # the pair (E11, E22) gives |<v1, v2>| = cos(0.3)
    assert oz_defect(m, budget=16).value >= np.cos(0.3) - 1e-6


def test_sa_defect_of_non_self_adjoint_map():
    m = LinMap([1], [1], np.array([[1j]]))
    assert sa_defect(m).value == pytest.approx(2.0)


@given(st.integers(0, 10 ** 5))
def test_generated_order_zero_defect_small(seed):
    m = gen_order_zero([2], 4, [2], seed=seed)
    assert oz_defect(m, budget=4).value <= 1e-9


@given(st.integers(0, 10 ** 5))
def test_generated_jordan_hom_defect_small(seed):
    m = gen_jordan_hom([2], 4, ([1], [1]), seed=seed)
    assert jordan_defect(m, budget=3).value <= 1e-9


@given(st.integers(0, 10 ** 5), st.floats(1e-6, 1e-2))
def test_perturbation_slack_certificate(seed, tau):
    m = gen_order_zero([1, 2], 5, [1, 2], seed=seed)
    p, slack = perturb(m, tau, mode="self-adjoint", seed=seed)
    assert oz_defect(p, budget=6).value <= oz_defect(m, budget=6).value + slack


def test_selfadjointify_keeps_zero_sa_defect():
    m = selfadjointify(gen_order_zero([2], 3, [1], seed=3))
    assert sa_defect(m).value < 1e-14
