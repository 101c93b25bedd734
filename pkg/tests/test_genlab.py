import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ozmaps import genlab as G
from ozmaps import matcore as mc
from ozmaps.algebra import AlgElement, unit
from ozmaps.linmap import apply, is_completely_positive, is_self_adjoint, norm_upper


@pytest.mark.parametrize("n", range(2, 11))
def test_choi_pair_norms(n):
    a, b = G.gen_choi_pair(n)
    assert abs(mc.op_norm(a) - (1 - 1 / n)) <= 1e-12
    assert mc.op_norm(b) <= 1 + 1e-12
    # the commutator is a weighted shift with weights of modulus 2/n
    c = mc.commutator(a, b)
    assert np.allclose(np.abs(np.diag(c, -1)), 2 / n)
    assert abs(mc.op_norm(c) - 2 / n) <= 1e-12


def test_choi_pair_rejects_small_n():
    with pytest.raises(ValueError):
        G.gen_choi_pair(1)


@given(st.integers(0, 10 ** 6))
def test_order_zero_h_commutes_with_image(seed):
    m = G.gen_order_zero([1, 2], 5, [1, 2], seed)
    h = apply(m, unit(m.dom))
    for x in G.sample_elements(m.dom, 3, "general", seed):
        fx = apply(m, x)
        assert (h @ fx - fx @ h).norm() <= 1e-10


@given(st.integers(0, 10 ** 6))
def test_order_zero_kills_orthogonal_products(seed):
    m = G.gen_order_zero([2], 4, [2], seed, signed=True)
    for x, y in G.sample_orthogonal_pairs(m.dom, 3, "general", seed):
        assert (apply(m, x) @ apply(m, y)).norm() <= 1e-10


def test_positive_order_zero_is_cp():
    m = G.gen_order_zero([1, 2], 5, [1, 2], 3)
    assert is_completely_positive(m)
    assert is_self_adjoint(m, 1e-12)


def test_h_identity_gives_homomorphism():
    m = G.gen_order_zero([2], 4, [2], 1, h_identity=True)
    x, y = G.sample_elements(m.dom, 2, "general", 7)
    assert (apply(m, x @ y) - apply(m, x) @ apply(m, y)).norm() <= 1e-12


def test_jordan_hom_squares():
    m = G.gen_jordan_hom([2], 4, ([1], [1]), seed=2)
    for x in G.sample_elements(m.dom, 4, "hermitian", 5):
        fx = apply(m, x)
        assert (apply(m, x @ x) - fx @ fx).norm() <= 1e-12


def test_dimension_overflow():
    with pytest.raises(G.DimensionOverflow):
        G.gen_order_zero([2], 3, [2])
    with pytest.raises(G.DimensionOverflow):
        G.gen_order_zero([2, 1], 6, [1])
    with pytest.raises(G.DimensionOverflow):
        G.gen_jordan_hom([2], 3, ([1], [1]))


@pytest.mark.parametrize("mode", ["general", "self-adjoint", "positive-preserving"])
def test_perturb_magnitude(mode):
    m = G.gen_order_zero([2], 4, [2], 0)
    out, slack = G.perturb(m, 0.01, mode, seed=4)
    t = norm_upper(out - m)
    assert t <= 0.01 * (1 + 1e-9)
    assert slack == pytest.approx(2 * 0.01 * norm_upper(m) + 1e-4, rel=1e-6)
    if mode != "general":
        assert is_self_adjoint(out, 1e-12)
    if mode == "positive-preserving":
        assert is_completely_positive(out)


def test_perturb_rejects_bad_mode():
    m = G.gen_order_zero([2], 4, [2], 0)
    with pytest.raises(ValueError):
        G.perturb(m, 0.1, "sideways")
    with pytest.raises(ValueError):
        G.perturb(m, -1.0)


def test_magnitude_for_slack_inverts():
    m = G.gen_order_zero([2], 4, [2], 0)
    t = G.magnitude_for_slack(m, 1e-4)
    assert 2 * t * norm_upper(m) + t * t == pytest.approx(1e-4, rel=1e-10)


@pytest.mark.parametrize("kind", ["positive", "hermitian", "general"])
def test_orthogonal_pairs_are_orthogonal(kind):
    for x, y in G.sample_orthogonal_pairs([1, 3], 5, kind, 0):
        for p in (x @ y, y @ x, x.H @ y, x @ y.H):
            assert p.norm() <= 1e-12
        assert abs(x.norm() - 1) <= 1e-12


def test_sample_elements_kinds():
    for x in G.sample_elements([2, 1], 5, "positive", 1):
        assert min(np.linalg.eigvalsh(b).min() for b in x.blocks) >= -1e-12
    with pytest.raises(ValueError):
        G.sample_elements([2], 1, "weird", 0)


def test_corpus_deterministic():
    a = G.standard_corpus(5, n_perturbed=12, n_exact=6)
    b = G.standard_corpus(5, n_perturbed=12, n_exact=6)
    assert json.dumps(G.corpus_to_dict(a)) == json.dumps(G.corpus_to_dict(b))
    c = G.standard_corpus(6, n_perturbed=12, n_exact=6)
    assert json.dumps(G.corpus_to_dict(a)) != json.dumps(G.corpus_to_dict(c))


def test_corpus_round_trip(tmp_path):
    c = G.standard_corpus(1, n_perturbed=9, n_exact=3)
    p = tmp_path / "c.json"
    G.save_corpus(c, p)
    d = G.load_corpus(p)
    assert len(d) == len(c) == 12
    for e, f in zip(c, d):
        assert np.array_equal(e.map.action, f.map.action)
        assert e.map.dom == f.map.dom and e.map.cod == f.map.cod
        assert e.tags == f.tags and e.planted_eps == f.planted_eps and e.sa_eps == f.sa_eps


def test_standard_corpus_composition():
    c = G.standard_corpus(0)
    assert len(c) == 224
    pert = [e for e in c if "perturbed" in e.tags]
    assert len(pert) == 200
    assert all(1e-8 * (1 - 1e-9) <= e.planted_eps <= 1e-2 * (1 + 1e-9) for e in pert)
    assert max(max(e.map.cod.blocks) for e in c) <= 12


@pytest.mark.parametrize("payload", [
    "not json",
    "[]",
    '{"format_version": 99, "seed": 0, "entries": []}',
    '{"format_version": 1, "seed": 0}',
    '{"format_version": 1, "seed": 0, "entries": [{"dom": [1], "cod": [1], "action": [[1.0]]}]}',
])
def test_malformed_corpus(tmp_path, payload):
    p = tmp_path / "bad.json"
    p.write_text(payload)
    with pytest.raises(G.FormatError):
        G.load_corpus(p)


def test_exact_entries_have_zero_defect_plan():
    c = G.standard_corpus(0, n_perturbed=0, n_exact=6)
    for e in c:
        assert e.planted_eps == 0.0
        x = AlgElement.from_vec(e.map.dom, np.ones(e.map.dom.dim))
        assert np.all(np.isfinite(apply(e.map, x).vec()))
