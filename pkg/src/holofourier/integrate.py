"""Quadrature over K and over G.

Haar conventions (all constants in the package are relative to these):

* torus factor: ``dg = dtheta dt`` for ``z = e^(t + i theta)``;
* SL2 factor: ``dg = sinh(2t)^2 dt dk1 dk2`` for ``g = k1 diag(e^t, e^-t) k2``
  with ``t >= 0`` and ``dk`` the Haar probability measure on SU(2).

SU(2) grids use Euler angles ``Rz(alpha) Ry(beta) Rz(gamma)``: ``alpha``
uniform on ``[0, 2pi)`` (``N`` nodes), ``gamma`` uniform on ``[0, 4pi)``
(``2N`` nodes) and Gauss-Legendre in ``cos(beta)`` (``N`` nodes), which
integrates every matrix coefficient of spin ``< N`` exactly.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InputError, NonFiniteError
from .groups import FactorKind, GroupElement, GroupSpec, euler_su2

CHUNK = 1 << 15


def pairwise_sum(x, axis: int = 0):
    """Sum along ``axis`` with a fixed binary tree (independent of chunking/workers)."""
    x = np.moveaxis(np.asarray(x), axis, 0)
    if x.shape[0] == 0:
        return np.zeros(x.shape[1:], dtype=x.dtype)
    while x.shape[0] > 1:
        if x.shape[0] % 2:
            x = np.concatenate([x, np.zeros_like(x[:1])])
        x = x[0::2] + x[1::2]
    return x[0]


def log_haar_jacobian(kind: FactorKind, t):
    """Log of the radial Haar density for one factor (angles integrated out)."""
    t = np.abs(np.asarray(t, dtype=float))
    if kind is FactorKind.TORUS:
        return np.full(t.shape, np.log(2 * np.pi))
    with np.errstate(divide="ignore"):
        # log sinh(2t)^2 = 2 (2t + log1p(-e^-4t) - log 2)
        return 2.0 * (2.0 * t + np.log1p(-np.exp(-4.0 * t)) - np.log(2.0))


def log_rep_norm2(kind: FactorKind, w: int, t):
    """``log ||pi_w(a_t)||_F^2`` for one factor."""
    t = np.asarray(t, dtype=float)
    if kind is FactorKind.TORUS:
        return 2.0 * w * t
    j = np.arange(w + 1)
    e = 2.0 * (w - 2 * j)[None, :] * np.abs(t).reshape(-1, 1)
    top = e.max(axis=1, keepdims=True)
    return (top[:, 0] + np.log(np.exp(e - top).sum(axis=1))).reshape(t.shape)


def gauss_legendre(n: int, lo: float, hi: float):
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


@dataclass(frozen=True, eq=False)
class GridConfig:
    """Resolution settings shared by the CLI and the library entry points."""

    resolution: int = 16
    radial_cut: float | None = None
    radial_nodes: int = 32

    @classmethod
    def from_json(cls, obj) -> "GridConfig":
        obj = dict(obj or {})
        unknown = set(obj) - {"resolution", "radial_cut", "radial_nodes"}
        if unknown:
            raise InputError(f"unknown grid keys {sorted(unknown)}")
        cfg = cls(**obj)
        if cfg.resolution < 2 or cfg.radial_nodes < 2:
            raise InputError("grid resolutions must be >= 2")
        return cfg

    def to_json(self) -> dict:
        return {"resolution": self.resolution, "radial_cut": self.radial_cut,
                "radial_nodes": self.radial_nodes}


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Nodes and positive weights for one of the domains ``K``, ``KxK``, ``G``, ``radial``.

    For ``G`` grids the weights already include the measure density, and
    ``radial_nodes``/``radial_weights`` hold the Cartan-coordinate rule the grid
    was built from: ``sum_r radial_weights[r] * F(a_t[r])`` equals
    ``sum_nodes weights * F(node)`` for every K-bi-invariant ``F``.
    """

    domain: str
    spec: GroupSpec
    nodes: object
    weights: np.ndarray
    measure: object = None
    radial_cut: float | None = None
    resolution: int | None = None
    radial_nodes: np.ndarray | None = None
    radial_weights: np.ndarray | None = None
    tail_estimate: float = 0.0
    warnings: tuple = field(default=())

    def __len__(self):
        return len(self.weights)

    def total_weight(self, chunk: int = CHUNK) -> float:
        n = len(self)
        parts = [pairwise_sum(np.asarray(self.weights[s:s + chunk])) for s in range(0, n, chunk)]
        return float(pairwise_sum(np.asarray(parts)))

    def to_csv(self, fh=None) -> str:
        """Node coordinates and weights as CSV; returns the text when ``fh`` is None."""
        buf = io.StringIO() if fh is None else fh
        writer = csv.writer(buf, lineterminator="\n")
        if self.domain == "radial":
            nodes = np.atleast_2d(self.nodes)
            writer.writerow([f"t{i + 1}" for i in range(nodes.shape[1])] + ["weight"])
            for row, w in zip(nodes, self.weights):
                writer.writerow([repr(float(v)) for v in row] + [repr(float(w))])
        else:
            elems = self.nodes if isinstance(self.nodes, tuple) else (materialize(self.nodes),)
            header = []
            for e_i, elem in enumerate(elems):
                for f_i, kind in enumerate(self.spec.factors, start=1):
                    tag = f"{'xy'[e_i] if len(elems) > 1 else ''}{f_i}"
                    if kind is FactorKind.TORUS:
                        header += [f"z{tag}_re", f"z{tag}_im"]
                    else:
                        header += [f"{n}{tag}_{p}" for n in "abcd" for p in ("re", "im")]
            writer.writerow(header + ["weight"])
            flat = []
            for elem in elems:
                for kind, c in zip(self.spec.factors, elem.coords):
                    c = c.reshape(len(self.weights), -1)
                    flat.append(np.stack([c.real, c.imag], axis=-1).reshape(len(self.weights), -1))
            table = np.concatenate(flat, axis=1)
            for row, w in zip(table, np.asarray(self.weights)):
                writer.writerow([repr(float(v)) for v in row] + [repr(float(w))])
        return buf.getvalue() if fh is None else ""


def _su2_rule(resolution: int, with_alpha: bool = True):
    n = resolution
    alpha = 2 * np.pi * np.arange(n) / n if with_alpha else np.zeros(1)
    x, wx = np.polynomial.legendre.leggauss(n)
    beta = np.arccos(x)
    gamma = 4 * np.pi * np.arange(2 * n) / (2 * n)
    A, B, G = np.meshgrid(alpha, beta, gamma, indexing="ij")
    W = np.broadcast_to((0.5 * wx)[None, :, None], A.shape) / (len(alpha) * 2 * n)
    return euler_su2(A.ravel(), B.ravel(), G.ravel()), W.ravel().copy()


def _compact_rule(kind: FactorKind, resolution: int, with_alpha: bool = True):
    if kind is FactorKind.TORUS:
        theta = 2 * np.pi * np.arange(resolution) / resolution
        return np.exp(1j * theta), np.full(resolution, 1.0 / resolution)
    return _su2_rule(resolution, with_alpha)


def _tensor(factors_weights):
    """Outer product of per-factor index sets; returns index arrays and weights."""
    sizes = [len(w) for w in factors_weights]
    idx = np.indices(sizes).reshape(len(sizes), -1)
    w = np.ones(idx.shape[1])
    for i, fw in enumerate(factors_weights):
        w = w * fw[idx[i]]
    return idx, w


def k_grid(spec: GroupSpec, resolution: int) -> QuadratureGrid:
    """Product quadrature for the normalized Haar measure on K."""
    if resolution < 2:
        raise InputError("resolution must be >= 2")
    rules = [_compact_rule(k, resolution) for k in spec.factors]
    idx, w = _tensor([r[1] for r in rules])
    coords = [r[0][idx[i]] for i, r in enumerate(rules)]
    return QuadratureGrid("K", spec, GroupElement(spec, coords, renormalize=False), w,
                          resolution=resolution)


def kk_grid(spec: GroupSpec, resolution: int) -> QuadratureGrid:
    """Product rule on ``K x K``; ``nodes`` is the pair ``(x, y)``."""
    kg = k_grid(spec, resolution)
    n = len(kg)
    i, j = np.divmod(np.arange(n * n), n)
    x = kg.nodes[i]
    y = kg.nodes[j]
    return QuadratureGrid("KxK", spec, (x, y), kg.weights[i] * kg.weights[j],
                          resolution=resolution)


def radial_grid(spec: GroupSpec, measure, radial_cut: float, radial_nodes: int = 32) -> QuadratureGrid:
    """Tensor Gauss-Legendre rule in Cartan coordinates with Haar Jacobian and density."""
    if radial_cut <= 0:
        raise InputError("radial_cut must be > 0")
    breaks = [] if measure is None else [b for b in measure.breakpoints(radial_cut) if b < radial_cut]
    edges = np.unique(np.concatenate([[0.0], breaks, [radial_cut]]))
    per = []
    for kind in spec.factors:
        segs = [(lo, hi) for lo, hi in zip(edges[:-1], edges[1:])]
        if kind is FactorKind.TORUS:
            segs = [(-hi, -lo) for lo, hi in reversed(segs)] + segs
        if len(segs) == 1 or (kind is FactorKind.TORUS and len(segs) == 2 and not breaks):
            segs = [(-radial_cut if kind is FactorKind.TORUS else 0.0, radial_cut)]
        parts = [gauss_legendre(radial_nodes, lo, hi) for lo, hi in segs]
        t = np.concatenate([p[0] for p in parts])
        w = np.concatenate([p[1] for p in parts])
        per.append((t, w * np.exp(log_haar_jacobian(kind, t))))
    idx, w = _tensor([p[1] for p in per])
    t = np.stack([per[i][0][idx[i]] for i in range(len(per))], axis=-1)
    if measure is not None:
        w = w * np.exp(measure.log_density_cartan(t))
    return QuadratureGrid("radial", spec, t, w, measure=measure, radial_cut=radial_cut)


class _ProductRule:
    """Tensor product of a joint Cartan rule with per-factor compact rules.

    Node ``n`` is addressed by unravelling ``n`` over the axes
    ``(radial, factor-1 pieces..., factor-2 pieces..., ...)`` in C order.
    """

    def __init__(self, spec, t, radial_weights, compact):
        self.spec = spec
        self.t = t
        self.radial_weights = radial_weights
        self.compact = compact
        self.shape = (len(radial_weights),) + tuple(len(p[1]) for pieces in compact for p in pieces)
        self.size = int(np.prod(self.shape, dtype=np.int64))

    def _index(self, n):
        return np.unravel_index(np.asarray(n, dtype=np.int64), self.shape)

    def weights(self, n):
        idx = self._index(n)
        w = self.radial_weights[idx[0]]
        ax = 1
        for pieces in self.compact:
            for p in pieces:
                w = w * p[1][idx[ax]]
                ax += 1
        return w

    def nodes(self, n):
        idx = self._index(n)
        t = self.t[idx[0]]
        coords = []
        ax = 1
        for f, kind in enumerate(self.spec.factors):
            tf = t[..., f]
            pieces = self.compact[f]
            if kind is FactorKind.TORUS:
                coords.append(np.exp(tf) * pieces[0][0][idx[ax]])
                ax += 1
            else:
                k1 = pieces[0][0][idx[ax]]
                k2 = pieces[1][0][idx[ax + 1]]
                ax += 2
                a = np.zeros(tf.shape + (2, 2), dtype=complex)
                a[..., 0, 0] = np.exp(tf)
                a[..., 1, 1] = np.exp(-tf)
                coords.append(k1 @ a @ k2)
        return GroupElement(self.spec, coords, renormalize=False)


class _Lazy:
    def __init__(self, rule: _ProductRule):
        self.rule = rule

    def __len__(self):
        return self.rule.size

    def _positions(self, key):
        if isinstance(key, slice):
            return np.arange(*key.indices(self.rule.size), dtype=np.int64)
        if np.isscalar(key):
            key = int(key)
            if key < 0:
                key += self.rule.size
            if not 0 <= key < self.rule.size:
                raise IndexError(key)
            return key
        return np.asarray(key, dtype=np.int64)


class LazyNodes(_Lazy):
    """Grid nodes generated on demand; slicing yields a batched GroupElement."""

    def __getitem__(self, key) -> GroupElement:
        return self.rule.nodes(self._positions(key))

    def materialize(self) -> GroupElement:
        return self[:]

    @property
    def coords(self):
        return self.materialize().coords

    @property
    def batch_shape(self):
        return (self.rule.size,)

    @property
    def size(self):
        return self.rule.size

    @property
    def spec(self):
        return self.rule.spec


class LazyWeights(_Lazy):
    """Grid weights computed on demand; behaves like a 1-D array under slicing."""

    def __getitem__(self, key):
        return self.rule.weights(self._positions(key))

    def __array__(self, dtype=None, copy=None):
        out = self[:]
        return out if dtype is None else out.astype(dtype)

    def sum(self):
        return float(pairwise_sum(np.asarray(self)))


def materialize(nodes) -> GroupElement:
    return nodes.materialize() if isinstance(nodes, LazyNodes) else nodes


def factor_resolutions(spec: GroupSpec, resolution) -> tuple:
    res = np.asarray(resolution, dtype=int)
    if res.ndim == 0:
        res = np.full(spec.n_factors, int(res))
    elif res.shape != (spec.n_factors,):
        raise InputError(f"resolution needs 1 or {spec.n_factors} entries, got {res.size}")
    if np.any(res < 2):
        raise InputError("resolution must be >= 2")
    return tuple(int(r) for r in res)


def g_grid(spec: GroupSpec, measure, radial_cut: float | None = None, resolution: int = 16,
           radial_nodes: int = 32, max_weight: int = 0, tail_tol: float = 1e-12) -> QuadratureGrid:
    """Quadrature for ``integral_G F(g) dmu(g)``.

    SL2 nodes are ``k1 a_t k2`` with ``k1`` from the full SU(2) rule and ``k2``
    with ``alpha = 0``: ``a_t`` commutes with ``Rz``, so the right factor only
    needs ``K / T``.  ``max_weight`` selects the label used for the truncation
    tail estimate; a tail above ``tail_tol`` is recorded in ``warnings``.
    """
    from .measures import default_radial_cut, radial_tail

    if measure.spec != spec:
        raise InputError("measure and grid group specs differ")
    if radial_cut is None:
        radial_cut = default_radial_cut(measure, max_weight, tail_tol)
    res = factor_resolutions(spec, resolution)
    rg = radial_grid(spec, measure, radial_cut, radial_nodes)
    compact = []
    for kind, r in zip(spec.factors, res):
        if kind is FactorKind.TORUS:
            compact.append([_compact_rule(kind, r)])
        else:
            compact.append([_compact_rule(kind, r), _compact_rule(kind, r, False)])
    rule = _ProductRule(spec, rg.nodes, rg.weights, compact)
    nodes, w = LazyNodes(rule), LazyWeights(rule)
    tail = radial_tail(measure, max_weight, radial_cut)
    warnings = ()
    if tail > tail_tol:
        warnings = (f"radial_cut={radial_cut} leaves relative tail {tail:.3e} for weight {max_weight}",)
    return QuadratureGrid("G", spec, nodes, w, measure=measure, radial_cut=radial_cut,
                          resolution=res, radial_nodes=rg.nodes, radial_weights=rg.weights,
                          tail_estimate=tail, warnings=warnings)


def chunked_sum(f: Callable, grid: QuadratureGrid, chunk: int = CHUNK):
    """``sum_n w_n f(nodes[n])`` for array-valued ``f`` (leading axis = nodes)."""
    partials = []
    n = len(grid)
    for start in range(0, n, chunk):
        sl = slice(start, min(start + chunk, n))
        nodes = (tuple(x[sl] for x in grid.nodes) if isinstance(grid.nodes, tuple)
                 else grid.nodes[sl])
        vals = np.asarray(f(nodes))
        bad = ~np.isfinite(vals)
        if bad.any():
            first = int(np.argwhere(bad.reshape(vals.shape[0], -1).any(axis=1))[0, 0])
            node = nodes[0][first] if isinstance(nodes, tuple) else nodes[first]
            raise NonFiniteError(f"non-finite integrand at node {start + first}: {node!r}")
        w = grid.weights[sl].reshape((-1,) + (1,) * (vals.ndim - 1))
        partials.append(pairwise_sum(vals * w))
    return pairwise_sum(np.stack(partials))


def integrate(f: Callable, grid: QuadratureGrid) -> complex:
    """Weighted sum of ``f`` over the grid nodes with pairwise summation."""
    return complex(chunked_sum(lambda g: np.broadcast_to(np.asarray(f(g), dtype=complex),
                                                           (len(g[0]) if isinstance(g, tuple) else len(g),)),
                               grid))
