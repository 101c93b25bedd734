"""Corpus generators: exact order-zero maps, Jordan *-homomorphisms,
controlled perturbations, almost-commuting matrix pairs and random
ensembles, plus versioned JSON persistence."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import unitary_group

from . import matcore as mc
from .algebra import AlgElement, AlgebraShape, as_shape
from .linmap import LinMap, norm_upper, selfadjointify

FORMAT_VERSION = 1


class DimensionOverflow(ValueError):
    pass


class ContractViolated(RuntimeError):
    pass


class FormatError(ValueError):
    pass


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _unitary(n: int, rng) -> np.ndarray:
    if n == 1:
        return np.array([[np.exp(2j * np.pi * rng.random())]])
    return unitary_group.rvs(n, random_state=rng)


def _block_embed_map(dom: AlgebraShape, cod_n: int, parts, u: np.ndarray) -> LinMap:
    """``x -> U (sum_k parts_k(x)) U*`` with each part a diagonal block placement.

    ``parts`` is a list of ``(block_index, weight, transpose)`` where ``weight``
    is an ``m x m`` matrix and the block contributes ``kron(weight, x_i or x_i^T)``.
    """
    cols = []
    eye = np.eye(dom.dim, dtype=complex)
    for j in range(dom.dim):
        x = AlgElement.from_vec(dom, eye[j])
        big = np.zeros((cod_n, cod_n), dtype=complex)
        pos = 0
        for i, w, tr in parts:
            xi = x.blocks[i].T if tr else x.blocks[i]
            blk = np.kron(w, xi)
            k = blk.shape[0]
            big[pos:pos + k, pos:pos + k] = blk
            pos += k
        cols.append((u @ big @ mc.dagger(u)).ravel())
    return LinMap(dom, [cod_n], np.stack(cols, axis=1))


def _check_fit(dom: AlgebraShape, cod_n: int, multiplicities) -> None:
    if len(multiplicities) != len(dom.blocks):
        raise DimensionOverflow("one multiplicity per domain block is required")
    need = sum(int(m) * n for m, n in zip(multiplicities, dom.blocks))
    if need > cod_n:
        raise DimensionOverflow(f"embedding needs size {need} > codomain size {cod_n}")


def gen_order_zero(dom, cod_n: int, multiplicities, seed=0, *, h_range=(1e-3, 1.0),
                   central_h: bool = False, signed: bool = False, h_identity: bool = False) -> LinMap:
    """Exact order-zero map ``x -> h pi(x)`` into ``M_{cod_n}``.

    ``pi`` places ``m_i`` copies of block ``i`` on the diagonal and conjugates
    by a random unitary; ``h`` lives in the commutant of ``pi``.  Eigenvalues
    of ``h`` are log-uniform in ``h_range``.  ``central_h`` makes ``h`` a
    combination of the ``pi(1_i)`` so that ``C*(h)`` lies in the image of the
    centre; ``signed`` gives a self-adjoint but non-positive ``h``;
    ``h_identity`` forces ``h = pi(1)``.
    """
    dom = as_shape(dom)
    _check_fit(dom, cod_n, multiplicities)
    rng = _rng(seed)
    lo, hi = h_range
    parts = []
    for i, m in enumerate(multiplicities):
        m = int(m)
        if m == 0:
            continue
        if h_identity:
            w = np.eye(m, dtype=complex)
        elif central_h:
            w = np.exp(rng.uniform(np.log(lo), np.log(hi))) * np.eye(m, dtype=complex)
        else:
            ev = np.exp(rng.uniform(np.log(lo), np.log(hi), m))
            v = _unitary(m, rng)
            w = (v * ev) @ mc.dagger(v)
        if signed and not h_identity:
            w = w * rng.choice([-1.0, 1.0])
        parts.append((i, w, False))
    u = _unitary(cod_n, rng)
    return selfadjointify(_block_embed_map(dom, cod_n, parts, u))


def gen_jordan_hom(dom, cod_n: int, split, seed=0) -> LinMap:
    """Jordan *-homomorphism ``pi + transpose o pi'`` into ``M_{cod_n}``.

    ``split = (mult_hom, mult_antihom)`` gives the multiplicity of each domain
    block in the multiplicative and the transposed part.
    """
    dom = as_shape(dom)
    mh, ma = split
    total = [int(a) + int(b) for a, b in zip(mh, ma)]
    _check_fit(dom, cod_n, total)
    rng = _rng(seed)
    parts = []
    for i, m in enumerate(mh):
        if int(m):
            parts.append((i, np.eye(int(m), dtype=complex), False))
    for i, m in enumerate(ma):
        if int(m):
            parts.append((i, np.eye(int(m), dtype=complex), True))
    u = _unitary(cod_n, rng)
    return selfadjointify(_block_embed_map(dom, cod_n, parts, u))


def _random_kraus_map(dom: AlgebraShape, cod: AlgebraShape, rng, n_kraus: int = 2) -> LinMap:
    """Random completely positive map ``x -> sum_j K_j x K_j*`` (per codomain block)."""
    ds = dom.size
    ks = [[(rng.standard_normal((n, ds)) + 1j * rng.standard_normal((n, ds))) for _ in range(n_kraus)]
          for n in cod.blocks]
    cols = []
    eye = np.eye(dom.dim, dtype=complex)
    for j in range(dom.dim):
        xd = AlgElement.from_vec(dom, eye[j]).dense()
        blocks = [sum(k @ xd @ mc.dagger(k) for k in kb) for kb in ks]
        cols.append(AlgElement(cod, blocks).vec())
    return LinMap(dom, cod, np.stack(cols, axis=1))


def perturb(m: LinMap, magnitude: float, mode: str = "general", seed=0) -> tuple[LinMap, float]:
    """Add a random map of certified norm ``magnitude``.

    Returns the perturbed map and the slack ``2 t ||phi||_upper + t^2`` that
    bounds the increase of the order-zero defect.  Modes: ``general``,
    ``self-adjoint`` (keeps a self-adjoint map self-adjoint) and
    ``positive-preserving`` (adds a completely positive map).
    """
    if magnitude < 0:
        raise ValueError("magnitude must be nonnegative")
    if magnitude == 0:
        return LinMap(m.dom, m.cod, m.action.copy()), 0.0
    rng = _rng(seed)
    if mode == "positive-preserving":
        d = _random_kraus_map(m.dom, m.cod, rng)
    else:
        raw = rng.standard_normal(m.action.shape) + 1j * rng.standard_normal(m.action.shape)
        d = LinMap(m.dom, m.cod, raw)
        if mode == "self-adjoint":
            d = selfadjointify(d)
        elif mode != "general":
            raise ValueError(f"unknown perturbation mode {mode!r}")
    d = d * (magnitude / norm_upper(d))
    # re-certify after scaling; round-off may nudge the bound
    t = norm_upper(d)
    out = m + d
    if mode == "self-adjoint" and np.array_equal(m.action, selfadjointify(m).action):
        out = selfadjointify(out)
    return out, 2.0 * t * norm_upper(m) + t * t


def magnitude_for_slack(m: LinMap, target: float) -> float:
    """Perturbation size ``t`` with ``2 t ||phi||_upper + t^2 = target``."""
    n = norm_upper(m)
    return float(-n + np.sqrt(n * n + target))


def gen_choi_pair(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Almost-commuting pair ``A = diag((n-1-2k)/n)``, ``B`` the unilateral shift.

    ``||A|| = 1 - 1/n``, ``||B|| = 1`` and ``[A, B]`` is a weighted shift
    with all weights ``2/n``.  The three norm contracts are verified here.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    a = np.diag([(n - 1 - 2 * k) / n for k in range(n)]).astype(complex)
    b = np.diag(np.ones(n - 1), -1).astype(complex)
    tol = 1e-9
    if abs(mc.op_norm(a) - (1 - 1 / n)) > tol:
        raise ContractViolated("||A|| != 1 - 1/n")
    if mc.op_norm(b) > 1 + tol:
        raise ContractViolated("||B|| > 1")
    if mc.op_norm(mc.commutator(a, b)) > 2 / n + tol:
        raise ContractViolated("||[A,B]|| > 2/n")
    return a, b


# ---------------------------------------------------------------------------
# samplers

def sample_elements(shape, n: int, kind: str, rng) -> list[AlgElement]:
    """Unit-norm samples: ``positive``, ``hermitian`` or ``general``."""
    shape = as_shape(shape)
    rng = _rng(rng)
    out = []
    for _ in range(n):
        blocks = [rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k)) for k in shape.blocks]
        x = AlgElement(shape, blocks)
        if kind == "positive":
            x = x @ x.H
        elif kind == "hermitian":
            x = 0.5 * (x + x.H)
        elif kind != "general":
            raise ValueError(f"unknown sample kind {kind!r}")
        out.append(x / x.norm())
    return out


def sample_orthogonal_pairs(shape, n: int, kind: str, rng) -> list[tuple[AlgElement, AlgElement]]:
    """Orthogonal pairs built from a shared random eigenbasis.

    ``positive`` and ``hermitian`` pairs are diagonal in the basis with
    disjoint supports.  ``general`` pairs are ``x = p a p``, ``y = q b q``
    for complementary-support projections ``p, q`` and random ``a, b``,
    which gives all four vanishing products.
    """
    shape = as_shape(shape)
    rng = _rng(rng)
    out = []
    while len(out) < n:
        xs, ys = [], []
        us = [_unitary(k, rng) for k in shape.blocks]
        for k, u in zip(shape.blocks, us):
            lab = rng.integers(0, 3, size=k)
            if kind in ("positive", "hermitian"):
                s = rng.uniform(0.0, 1.0, k) if kind == "positive" else rng.uniform(-1.0, 1.0, k)
                t = rng.uniform(0.0, 1.0, k) if kind == "positive" else rng.uniform(-1.0, 1.0, k)
                xs.append((u * np.where(lab == 1, s, 0.0)) @ mc.dagger(u))
                ys.append((u * np.where(lab == 2, t, 0.0)) @ mc.dagger(u))
            elif kind == "general":
                p = (u * (lab == 1)) @ mc.dagger(u)
                q = (u * (lab == 2)) @ mc.dagger(u)
                a = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
                b = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
                xs.append(p @ a @ p)
                ys.append(q @ b @ q)
            else:
                raise ValueError(f"unknown pair kind {kind!r}")
        x, y = AlgElement(shape, xs), AlgElement(shape, ys)
        if x.norm() > 1e-6 and y.norm() > 1e-6:
            out.append((x / x.norm(), y / y.norm()))
    return out


# ---------------------------------------------------------------------------
# corpora

@dataclass
class CorpusEntry:
    map: LinMap
    planted_eps: float | None = None
    tags: list[str] = field(default_factory=list)
    sa_eps: float | None = None


@dataclass
class Corpus:
    seed: int
    entries: list[CorpusEntry]
    format_version: int = FORMAT_VERSION

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


# (domain blocks, codomain size, multiplicities)
STANDARD_SHAPES = [
    ([2], 4, [2]),
    ([2], 3, [1]),
    ([1, 1], 3, [1, 2]),
    ([1, 2], 5, [1, 2]),
    ([1, 1, 1], 4, [1, 1, 1]),
    ([3], 6, [2]),
    ([2, 2], 6, [1, 2]),
    ([1, 2], 4, [2, 1]),
]


@dataclass
class CorpusSpec:
    n_exact: int = 24
    n_perturbed: int = 200
    shapes: list = field(default_factory=lambda: list(STANDARD_SHAPES))
    eps_range: tuple = (1e-8, 1e-2)
    modes: tuple = ("self-adjoint", "positive-preserving", "general")


def _exact_entry(spec: CorpusSpec, i: int, rng) -> CorpusEntry:
    dom, cod_n, mult = spec.shapes[i % len(spec.shapes)]
    flavor = ("positive", "central", "signed")[(i // len(spec.shapes)) % 3]
    phi = gen_order_zero(dom, cod_n, mult, rng, central_h=flavor == "central", signed=flavor == "signed")
    tags = ["exact", "order-zero", flavor]
    if flavor != "signed":
        tags.append("positive")
    return CorpusEntry(phi, 0.0, tags, 0.0)


def _perturbed_entry(spec: CorpusSpec, i: int, rng) -> CorpusEntry:
    dom, cod_n, mult = spec.shapes[i % len(spec.shapes)]
    mode = spec.modes[(i // len(spec.shapes)) % len(spec.modes)]
    signed = mode == "self-adjoint" and rng.random() < 0.5
    base = gen_order_zero(dom, cod_n, mult, rng, central_h=rng.random() < 0.25, signed=signed)
    lo, hi = spec.eps_range
    target = float(np.exp(rng.uniform(np.log(lo), np.log(hi))))
    tau = magnitude_for_slack(base, target)
    phi, slack = perturb(base, tau, mode, rng)
    tags = ["perturbed", mode]
    if mode == "positive-preserving":
        tags.append("positive")
    sa = 0.0 if mode != "general" else 2.0 * tau * (1 + 1e-12)
    return CorpusEntry(phi, slack, tags, sa)


def gen_random_corpus(spec: CorpusSpec | None = None, seed: int = 0) -> Corpus:
    """Deterministic corpus: entry ``i`` draws from the ``i``-th spawned seed."""
    spec = spec or CorpusSpec()
    total = spec.n_exact + spec.n_perturbed
    seeds = np.random.SeedSequence(seed).spawn(total)
    entries = []
    for i in range(spec.n_exact):
        entries.append(_exact_entry(spec, i, np.random.default_rng(seeds[i])))
    for j in range(spec.n_perturbed):
        rng = np.random.default_rng(seeds[spec.n_exact + j])
        entries.append(_perturbed_entry(spec, j, rng))
    return Corpus(int(seed), entries)


def standard_corpus(seed: int = 0, n_perturbed: int = 200, n_exact: int = 24) -> Corpus:
    return gen_random_corpus(CorpusSpec(n_exact=n_exact, n_perturbed=n_perturbed), seed)


def _enc(a: np.ndarray) -> list:
    return np.stack([a.real, a.imag], axis=-1).tolist()


def _dec(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise FormatError("action must be a matrix of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def corpus_to_dict(c: Corpus) -> dict:
    return {
        "format_version": c.format_version,
        "seed": c.seed,
        "entries": [
            {
                "dom": list(e.map.dom.blocks),
                "cod": list(e.map.cod.blocks),
                "action": _enc(e.map.action),
                "planted_eps": e.planted_eps,
                "sa_eps": e.sa_eps,
                "tags": list(e.tags),
            }
            for e in c.entries
        ],
    }


def corpus_from_dict(d) -> Corpus:
    if not isinstance(d, dict):
        raise FormatError("corpus must be a JSON object")
    if d.get("format_version") != FORMAT_VERSION:
        raise FormatError(f"unsupported format_version {d.get('format_version')!r}")
    try:
        entries = []
        for e in d["entries"]:
            m = LinMap(e["dom"], e["cod"], _dec(e["action"]))
            entries.append(CorpusEntry(m, e.get("planted_eps"), list(e.get("tags", [])), e.get("sa_eps")))
        return Corpus(int(d["seed"]), entries, FORMAT_VERSION)
    except FormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed corpus: {exc}") from exc


def save_corpus(c: Corpus, path) -> None:
    Path(path).write_text(json.dumps(corpus_to_dict(c)))


def load_corpus(path) -> Corpus:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"not valid JSON: {exc}") from exc
    return corpus_from_dict(d)
