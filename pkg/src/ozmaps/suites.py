"""Corpus-level verification suites used by the command line.

Each suite returns a list of ``(label, CheckReport)`` rows in a fixed order.
Per-entry work is mapped over a thread pool and merged in corpus order, and
every random draw is seeded from the entry index, so reports are
reproducible for any worker count.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import bounds as B
from . import decompose as D
from . import genlab as G
from . import matcore as mc
from .algebra import unit
from .defect import oz_defect
from .linmap import LinMap, apply, norm_upper, selfadjointify

# defect certificate used for exact order-zero entries (true defect is rounding-level)
EXACT_EPS = 1e-12
SUITES = ("s2", "s3", "s5", "s6", "s7", "s8")


@dataclass
class SuiteConfig:
    seed: int = 0
    K: float | None = None
    theta: float | None = None
    gamma: float = D.GAMMA_DEFAULT
    budget: int = 6
    samples: int = 200
    workers: int = 1


@lru_cache(maxsize=8)
def default_K(seed: int = 0) -> float:
    """Hereditary constant estimated on the standard corpus."""
    c = G.standard_corpus(seed)
    return B.estimate_K((selfadjointify(e.map), entry_eps(e)) for e in c)


def entry_eps(e: G.CorpusEntry) -> float:
    """Certified order-zero defect of an entry."""
    if e.planted_eps is None or e.planted_eps <= 0:
        return EXACT_EPS
    return float(e.planted_eps)


def sa_entry(e: G.CorpusEntry) -> tuple[LinMap, float]:
    """Self-adjoint version of an entry with its certified defect.

    Symmetrizing a map with self-adjointness defect ``s`` costs at most
    ``s ||phi|| / 2`` in the order-zero defect.
    """
    eps = entry_eps(e)
    if e.sa_eps:
        eps = eps + 0.5 * e.sa_eps * norm_upper(e.map)
    return selfadjointify(e.map), min(eps, 1.0)


def is_positive_entry(e: G.CorpusEntry) -> bool:
    return "positive" in e.tags


def _pmap(fn, items, workers: int):
    items = list(items)
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _per_entry(corpus, cfg: SuiteConfig, fn) -> list:
    rows = _pmap(lambda ie: fn(ie[0], ie[1]), list(enumerate(corpus.entries)), cfg.workers)
    return [r for group in rows for r in group]


# ---------------------------------------------------------------------------
# suite bodies

def zeta_sweep(lo: float = 1e-12, hi: float = 1e-3, n: int = 19, tail: int = 10 ** 6) -> list[tuple[float, float, float]]:
    params = B.ZetaParams(tail_cutoff=tail)
    out = []
    for s in np.geomspace(lo, hi, n):
        z = B.zeta(float(s), params)
        out.append((float(s), z, z / s ** (1 / 16)))
    return out


def zeta_reports() -> list:
    rows = [("zeta", B.make_report("zeta/zero", abs(B.zeta(0.0)), 0.0))]
    base = max(r for _, _, r in zeta_sweep(n=10))
    fine = max(r for _, _, r in zeta_sweep(n=10, tail=10 ** 7))
    rows.append(("zeta", B.make_report("zeta/ratio-stability", abs(fine - base) / base, 0.05,
                                       sup_ratio=base, sup_ratio_fine_tail=fine)))
    for s in (1e-4, 1e-6, 1e-8):
        b = B.xi_B(s)
        rows.append(("zeta", B.make_report("zeta/B-bound", b, (4 / math.pi + math.pi / 3) * math.sqrt(s), s=s)))
    return rows


def suite_s2(corpus, cfg: SuiteConfig) -> list:
    def one(i, e):
        eps = entry_eps(e)
        out = [(f"entry{i}", B.check_oz_extensions(e.map, eps, samples=cfg.samples, seed=cfg.seed + i))]
        if e.sa_eps:
            out.append((f"entry{i}", B.check_selfadjointify(e.map, eps, e.sa_eps, budget=cfg.budget, seed=cfg.seed + i)))
        return out
    return zeta_reports() + _per_entry(corpus, cfg, one)


def gk_reports(seed: int, n: int = 1000) -> list:
    rng = np.random.default_rng(seed)
    subs = []
    for _ in range(n):
        pts = int(rng.integers(2, 6))
        x = rng.uniform(-2, 2, pts - 1)
        a = complex(rng.uniform(-2, 2), rng.uniform(-2, 2) * (rng.random() < 0.5))
        subs.append(B.check_gaur_kovarik(x, a))
    rows = [("gaur-kovarik", B.combine("gaur-kovarik/sampled", subs, samples=n))]
    ratio, x, a = B.gk_grid_search(points=2)
    rows.append(("gaur-kovarik", B.make_report("gaur-kovarik/near-sharp", 2.9, ratio, x=float(x[0]), alpha=float(a))))
    return rows


def suite_s3(corpus, cfg: SuiteConfig) -> list:
    def one(i, e):
        eps = entry_eps(e)
        out = [(f"entry{i}", B.check_almost_jordan(e.map, eps, samples=500, seed=cfg.seed + i))]
        if e.sa_eps:
            # adjoin a unit sent to a slightly non-Hermitian element within the defect budget
            h = apply(e.map, unit(e.map.dom))
            herm = 0.5 * (h + h.H)
            skew = h - herm
            z0 = herm + (0.45 * e.sa_eps / max(skew.norm(), 1e-300)) * skew if skew.norm() else herm
            out.append((f"entry{i}", B.check_unital_extension(e.map, z0, e.sa_eps, budget=cfg.budget,
                                                               seed=cfg.seed + i)))
        return out
    return _per_entry(corpus, cfg, one) + gk_reports(cfg.seed)


def commutative_surjection(k: int, m: int, leak: float, seed: int) -> LinMap:
    """Map ``C^k -> C^m`` (``k >= m``) with nearly disjoint nonnegative column supports.

    The first ``m`` columns hit distinct points, the remaining ones are of
    size ``leak``, as is the off-support noise.
    """
    rng = np.random.default_rng(seed)
    w = leak * rng.random((m, k))
    for i in range(m):
        w[i, i] = rng.uniform(0.5, 1.0)
    dom, cod = [1] * k, [1] * m
    return LinMap(dom, cod, w.astype(complex))


def center_fixture_maps(seed: int) -> list[tuple[str, LinMap, float]]:
    """Maps satisfying the centre-range hypothesis, with certified defects."""
    out = []
    for j, (dom, cod, mult) in enumerate([([1, 1], 3, [1, 2]), ([1, 2], 5, [1, 2]), ([1, 1, 1], 4, [1, 1, 1])]):
        m = G.gen_order_zero(dom, cod, mult, seed=seed + j, central_h=True)
        out.append((f"central{j}", m, EXACT_EPS))
    for j, (k, mm, leak) in enumerate([(3, 3, 1e-3), (4, 3, 1e-2), (5, 4, 1e-4)]):
        m = commutative_surjection(k, mm, leak, seed + 10 + j)
        out.append((f"surjection{j}", m, max(oz_defect(m).value, EXACT_EPS)))
    return out


def sp_proj_fixtures() -> list[tuple[str, np.ndarray, np.ndarray]]:
    e12 = np.array([[0, 1], [0, 0]], dtype=complex)
    t3 = np.zeros((3, 3), dtype=complex)
    t3[1, 2] = 1
    return [
        ("commuting", np.diag([1.0, 0.5, -0.3]).astype(complex), np.diag([2.0, 1.0, 0.0]).astype(complex)),
        ("two-point", np.diag([1.0, -1.0]).astype(complex), e12),
        ("two-point-scaled", np.diag([1.0, -1.0]).astype(complex), 3 * e12),
        ("three-point", np.diag([1.0, 0.1, -0.1]).astype(complex), t3),
    ]


def suite_s5(corpus, cfg: SuiteConfig) -> list:
    def one(i, e):
        eps = entry_eps(e)
        out = [(f"entry{i}", B.check_comm_theta(e.map, [0, 1], eps, samples=cfg.samples, seed=cfg.seed + i)),
               (f"entry{i}", B.check_comm_theta(e.map, [0, 0, 1], eps, samples=cfg.samples, seed=cfg.seed + i))]
        h = apply(e.map, unit(e.map.dom))
        if h.norm() > 0 and h.is_hermitian():
            for c in ([0, 1], [0, 0, 1]):
                out.append((f"entry{i}", B.check_alg_comm(e.map, c, eps, samples=cfg.samples, seed=cfg.seed + i)))
        return out
    rows = _per_entry(corpus, cfg, one)
    for label, m, eps in center_fixture_maps(cfg.seed):
        mm = B.openness_index(m)
        for c in ([0, 1], [0, 0, 1], [0, 1, -0.5]):
            rows.append((label, B.check_phi_P_phi(m, c, eps, samples=cfg.samples, seed=cfg.seed, M=mm)))
            rows.append((label, B.check_hZ_comm(m, c, eps, samples=cfg.samples, seed=cfg.seed, M=mm)))
    for n in range(2, 17):
        a, b = G.gen_choi_pair(n)
        rows.append(("choi", B.combine(f"choi/n={n}", [
            B.make_report("choi/A-norm", abs(mc.op_norm(a) - (1 - 1 / n)), 1e-9),
            B.make_report("choi/B-norm", mc.op_norm(b), 1.0),
            B.make_report("choi/commutator", mc.op_norm(mc.commutator(a, b)), 2 / n)], n=n)))
    for label, s, t in sp_proj_fixtures():
        rows.append((f"sp-proj/{label}", B.check_sp_proj(s, t)))
    return rows


def bks_reports(seed: int, n: int = 500) -> list:
    rng = np.random.default_rng(seed)
    rows = []
    for alpha in (1 / 5, 1 / 3, 1 / 2):
        subs = []
        for _ in range(n):
            d = int(rng.integers(1, 6))
            ga = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
            a = ga @ ga.conj().T
            if rng.random() < 0.5:
                gb = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
                b = a + 10.0 ** rng.uniform(-6, 0) * (gb @ gb.conj().T)
            else:
                gb = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
                b = gb @ gb.conj().T
            subs.append(B.check_bks(a, b, alpha))
        rows.append(("bks", B.combine(f"bks/alpha={alpha:.4f}", subs, samples=n)))
    return rows


def openness_fixtures() -> list:
    rows = []
    ident = LinMap([1, 1, 1], [1, 1, 1], np.diag([1.0, 0.5, 0.25]).astype(complex))
    # h has distinct eigenvalues, projections are coordinate vectors
    rows.append(("openness", B.make_report("openness/diagonal", abs(B.openness_index(ident) - 4.0), 1e-9)))
    half = LinMap([1, 1], [1, 1], 0.5 * np.eye(2, dtype=complex))
    rows.append(("openness", B.make_report("openness/half-scaling", abs(B.openness_index(half) - 2.0), 1e-9)))
    return rows


def suite_s6(corpus, cfg: SuiteConfig, K: float) -> list:
    def one(i, e):
        psi, eps = sa_entry(e)
        pos = is_positive_entry(e)
        out = [(f"entry{i}", B.check_hereditary_distance(psi, eps, K, seed=cfg.seed + i)),
               (f"entry{i}", B.check_dichotomy(psi, eps, K, budget=cfg.budget, seed=cfg.seed + i))]
        if pos:
            out.append((f"entry{i}", B.check_hereditary_distance(psi, eps, K, seed=cfg.seed + i, positive=True)))
            out.append((f"entry{i}", B.check_dichotomy(psi, eps, K, positive=True)))
        return out
    return bks_reports(cfg.seed) + _per_entry(corpus, cfg, one) + openness_fixtures()


def subs_reports(seed: int, n: int = 100) -> list:
    rng = np.random.default_rng(seed)
    subs = []
    for _ in range(n):
        d = int(rng.integers(1, 7))
        g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        h = 0.5 * (g + g.conj().T)
        subs.append(D.subs_check(h, float(rng.uniform(1e-3, 2.0)), float(rng.uniform(0.0, 2.0))))
    return [("subs", B.combine("subs/random", subs, samples=n))]


def suite_s7(corpus, cfg: SuiteConfig, K: float) -> list:
    def one(i, e):
        psi, eps = sa_entry(e)
        pos = is_positive_entry(e)
        try:
            res = D.decompose(psi, eps, K, pos, cfg.theta, gamma=cfg.gamma, samples=cfg.samples,
                              seed=cfg.seed + i, budget=cfg.budget)
        except D.BetaExhausted as ex:
            return [(f"entry{i}", B.make_report("decompose/beta", 1.0, 0.0, error=str(ex)))]
        return [(f"entry{i}", D.verify_decomposition(res, psi, eps, K, pos, budget=cfg.budget, seed=cfg.seed + i))]
    return subs_reports(cfg.seed) + _per_entry(corpus, cfg, one)


def suite_s8(corpus, cfg: SuiteConfig, K: float) -> list:
    def one(i, e):
        pos = is_positive_entry(e)
        _, rep = D.pipeline_finite_dim(e.map, min(entry_eps(e), 1.0), K, sa_eps=e.sa_eps or 0.0,
                                       positive=pos, budget=cfg.budget, seed=cfg.seed + i, samples=cfg.samples)
        return [(f"entry{i}", rep)]
    return _per_entry(corpus, cfg, one)


def run_suite(name: str, corpus, cfg: SuiteConfig) -> list:
    needs_k = name in ("s6", "s7", "s8")
    K = None
    if needs_k:
        K = cfg.K if cfg.K is not None else default_K(0)
    fn = {"s2": suite_s2, "s3": suite_s3, "s5": suite_s5}.get(name)
    if fn is not None:
        return [(name, lab, r) for lab, r in fn(corpus, cfg)]
    fn = {"s6": suite_s6, "s7": suite_s7, "s8": suite_s8}.get(name)
    if fn is None:
        raise ValueError(f"unknown suite {name!r}")
    return [(name, lab, r) for lab, r in fn(corpus, cfg, K)]
