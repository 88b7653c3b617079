"""Holomorphic Fourier transform, inversion sums, Plancherel evaluation, translations.

``f^(pi) = (1 / C_pi) int_G f(g) pi(g)^* dmu(g)``.  The constant ``C_pi`` is
taken from the Cartan-coordinate rule of the same grid that computes the
integral, so truncating the radial domain scales numerator and denominator
alike and the result stays independent of the measure.
"""
from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, NonFiniteError, SpecMismatchError
from .groups import FactorKind, GroupElement, GroupSpec, exp_lie, lie_basis, multiply, inverse
from .integrate import CHUNK, QuadratureGrid, g_grid, pairwise_sum
from .irreps import (IrrepLabel, InvariantOperator, enumerate_irreps, rep_matrices)
from .measures import (MeasureSpec, grid_log_normalization, measure_from_json,
                       normalization_entry)


def max_workers() -> int:
    """Worker cap from ``HOLOFOURIER_THREADS`` (default: up to 4 CPUs)."""
    env = os.environ.get("HOLOFOURIER_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise InputError(f"HOLOFOURIER_THREADS must be an integer, got {env!r}") from exc
        return max(1, n)
    return max(1, min(4, os.cpu_count() or 1))


def default_resolution(spec: GroupSpec, cutoff: int) -> tuple:
    """Per-factor compact resolution: exact for coefficients up to the cutoff."""
    return tuple(max(16, 4 * cutoff + 8) if k is FactorKind.TORUS else cutoff + 3
                 for k in spec.factors)


def default_grid(spec: GroupSpec, measure: MeasureSpec, cutoff: int) -> QuadratureGrid:
    return g_grid(spec, measure, resolution=default_resolution(spec, cutoff), max_weight=cutoff)


def evaluate_on_grid(f, grid: QuadratureGrid, chunk: int = CHUNK) -> np.ndarray:
    """``f`` at every grid node as a complex vector; non-finite values raise."""
    n = len(grid)
    out = np.empty(n, dtype=complex)
    for start in range(0, n, chunk):
        part = grid.nodes[start:start + chunk]
        out[start:start + part.size] = _chunk_values(f, part, start)
    return out


def _rotated(label, mats, basis):
    if basis is None or label not in basis:
        return mats
    u = basis[label]
    return np.conj(u).T @ mats @ u


def _shell_tail(entries) -> float:
    """Ratio test on ``sum d^2 ||f^||_F`` over the last three shells."""
    shells = {}
    for label, mat in entries.items():
        shells[label.shell] = shells.get(label.shell, 0.0) + label.dim ** 2 * float(np.linalg.norm(mat))
    if len(shells) < 3:
        return float("nan")
    s = np.array([shells[c] for c in sorted(shells)][-3:])
    if s[-1] == 0.0:
        return 0.0
    if np.any(s[:-1] == 0.0):
        return float("inf")
    ratio = float(np.max(s[1:] / s[:-1]))
    return float(s[-1] * ratio / (1 - ratio)) if ratio < 1 else float("inf")


@dataclass(frozen=True, eq=False)
class FourierData:
    """``f^(pi)`` for every label up to ``cutoff``.

    ``C`` holds the constants used as divisors (grid-consistent); ``C_closed``
    the independent reference values when available.  ``lam(label)`` gives the
    coefficient view ``lambda_ij = d^2 f^(pi)_ji``.
    """

    spec: GroupSpec
    measure: MeasureSpec
    cutoff: int
    entries: dict
    C: dict
    C_closed: dict = field(default_factory=dict)
    tail_estimate: float = float("nan")
    quadrature_tail: float = 0.0
    basis: dict | None = None
    grid_info: dict = field(default_factory=dict)

    def __post_init__(self):
        expected = enumerate_irreps(self.spec, self.cutoff)
        if set(expected) != set(self.entries):
            raise InputError("FourierData entries must cover exactly the labels up to the cutoff")
        ordered = {}
        for label in expected:
            mat = np.array(self.entries[label], dtype=complex)
            if mat.shape != (label.dim, label.dim):
                raise InputError(f"entry for {label} has shape {mat.shape}")
            if not np.all(np.isfinite(mat)):
                raise NonFiniteError(f"entry for {label} is not finite")
            mat.setflags(write=False)
            ordered[label] = mat
        object.__setattr__(self, "entries", ordered)

    @property
    def labels(self) -> list:
        return list(self.entries)

    def __getitem__(self, label) -> np.ndarray:
        if not isinstance(label, IrrepLabel):
            label = IrrepLabel(self.spec, tuple(np.atleast_1d(label)))
        return self.entries[label]

    def lam(self, label) -> np.ndarray:
        """Coefficients ``lambda_{pi,ij}`` of ``f = sum lambda_ij pi_ij``."""
        mat = self[label]
        d = mat.shape[0]
        return d * d * mat.T

    def frobenius(self) -> dict:
        return {label: float(np.linalg.norm(m)) for label, m in self.entries.items()}

    def to_json(self) -> dict:
        labels = []
        for label, mat in self.entries.items():
            labels.append({
                "weights": list(label.weights), "dim": label.dim,
                "re": mat.real.tolist(), "im": mat.imag.tolist(),
                "C": float(self.C[label]),
                "C_closed": None if label not in self.C_closed else float(self.C_closed[label]),
                "tail_estimate": float(self.quadrature_tail),
            })
        try:
            measure = self.measure.to_json()
        except InputError:
            measure = {"kind": "custom", "name": repr(self.measure)}
        return {"spec": self.spec.to_json(), "measure": measure, "cutoff": self.cutoff,
                "tail_estimate": _json_float(self.tail_estimate), "grid": self.grid_info,
                "labels": labels}

    @classmethod
    def from_json(cls, obj) -> "FourierData":
        try:
            spec = GroupSpec.from_json(obj["spec"])
            measure = measure_from_json(spec, obj["measure"])
            entries, C, C_closed = {}, {}, {}
            for item in obj["labels"]:
                label = IrrepLabel(spec, tuple(item["weights"]))
                entries[label] = np.array(item["re"], dtype=float) + 1j * np.array(item["im"], dtype=float)
                C[label] = float(item["C"])
                if item.get("C_closed") is not None:
                    C_closed[label] = float(item["C_closed"])
            tail = obj.get("tail_estimate")
            return cls(spec, measure, int(obj["cutoff"]), entries, C, C_closed,
                       float("nan") if tail is None else float(tail),
                       grid_info=obj.get("grid", {}))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(f"invalid FourierData document: {exc}") from exc

    def decay_csv(self) -> str:
        """Rows ``shell, label, weights, frobenius`` for coefficient-decay plots."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["shell", "label", "weights", "frobenius"])
        for label, mat in sorted(self.entries.items(), key=lambda kv: (kv[0].shell, kv[0].weights)):
            writer.writerow([label.shell, str(label), " ".join(map(str, label.weights)),
                             repr(float(np.linalg.norm(mat)))])
        return buf.getvalue()


def _json_float(x):
    x = float(x)
    return x if np.isfinite(x) else None


def _chunk_values(f, part, start):
    with np.errstate(all="ignore"):
        vals = np.broadcast_to(np.asarray(f(part), dtype=complex), (part.size,))
    bad = ~np.isfinite(vals)
    if bad.any():
        i = int(np.argmax(bad))
        raise NonFiniteError(f"integrand is non-finite at node {start + i}: {part[i]!r}")
    return vals


def _chunk_integrals(f, grid, labels, basis, start, chunk):
    part = grid.nodes[start:start + chunk]
    w = grid.weights[start:start + chunk] * _chunk_values(f, part, start)
    mats = rep_matrices(labels, part)
    out = {}
    for label in labels:
        m = _rotated(label, mats[label], basis)
        out[label] = pairwise_sum(w[:, None, None] * np.conj(np.swapaxes(m, -1, -2)))
    return out


def fourier(f, measure: MeasureSpec, cutoff: int, grid: QuadratureGrid | None = None,
            basis: dict | None = None, workers: int | None = None, chunk: int = CHUNK) -> FourierData:
    """Transform of ``f`` for every label with weights bounded by ``cutoff``.

    Node chunks are processed in parallel and reduced in a fixed order, so the
    result does not depend on the number of workers.  ``basis`` optionally maps
    labels to unitary matrices ``U``; the representation is then used in the
    rotated basis ``U^* pi U``.
    """
    spec = measure.spec
    if grid is None:
        grid = default_grid(spec, measure, cutoff)
    if grid.domain != "G" or grid.spec != spec:
        raise InputError("fourier needs a G-grid for the measure's group")
    if grid.measure is not None and grid.measure is not measure:
        try:
            same = grid.measure.to_json() == measure.to_json()
        except InputError:
            same = False
        if not same:
            raise InputError("grid was built for a different measure")
    labels = enumerate_irreps(spec, cutoff)
    workers = max_workers() if workers is None else workers
    starts = list(range(0, len(grid), chunk))

    def one(start):
        return _chunk_integrals(f, grid, labels, basis, start, chunk)

    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(one, starts))
    else:
        partials = [one(s) for s in starts]
    entries, C, C_closed = {}, {}, {}
    for label in labels:
        c = float(np.exp(grid_log_normalization(grid, label)))
        entries[label] = pairwise_sum(np.stack([p[label] for p in partials])) / c
        C[label] = c
        closed, _, _ = _closed_or_none(measure, label)
        if closed is not None:
            C_closed[label] = closed
    info = {"radial_cut": grid.radial_cut, "resolution": list(np.atleast_1d(grid.resolution).tolist()),
            "radial_nodes": int(len(grid.radial_nodes)) if grid.radial_nodes is not None else None,
            "n_nodes": len(grid), "warnings": list(grid.warnings)}
    return FourierData(spec, measure, cutoff, entries, C, C_closed, _shell_tail(entries),
                       grid.tail_estimate, basis, info)


def _closed_or_none(measure, label):
    from .measures import _underlying_gaussian

    if _underlying_gaussian(measure)[0] is None:
        return None, None, None
    return normalization_entry(measure, label)


def invert(F: FourierData, g: GroupElement):
    """Partial inversion sum ``sum d^2 tr(f^(pi) pi(g))`` and the stored tail estimate."""
    if g.spec != F.spec:
        raise SpecMismatchError("element and FourierData belong to different groups")
    mats = rep_matrices(F.labels, g)
    total = np.zeros(g.batch_shape, dtype=complex)
    for label, fhat in F.entries.items():
        pi = _rotated(label, mats[label], F.basis)
        total = total + label.dim ** 2 * np.einsum("ij,...ji->...", fhat, pi)
    return (complex(total) if total.ndim == 0 else total), F.tail_estimate


def plancherel_eval(F: FourierData) -> complex:
    """``sum d^2 tr f^(pi)``, the inversion sum at the identity."""
    return invert(F, GroupElement.identity(F.spec))[0]


class Translated:
    """``h -> f(h g)`` (``side='right'``) or ``h -> f(g^-1 h)`` (``side='left'``)."""

    def __init__(self, f, g: GroupElement, side: str = "right"):
        if side not in ("left", "right"):
            raise InputError("side must be 'left' or 'right'")
        if g.batch_shape:
            raise InputError("translate needs a single group element")
        self.f, self.g, self.side = f, g, side
        self._ginv = inverse(g)

    def __call__(self, h: GroupElement):
        if self.side == "right":
            return self.f(multiply(h, self.g))
        return self.f(multiply(self._ginv, h))


def translate(f, g: GroupElement, side: str = "right") -> Translated:
    return Translated(f, g, side)


def default_step(order: int) -> float:
    return {0: 0.0, 1: 1e-5, 2: 1e-4}.get(order, 1e-3)


class Differentiated:
    """``D f`` by nested central differences along one-parameter subgroups."""

    def __init__(self, D: InvariantOperator, f, step: float | None = None):
        self.D, self.f = D, f
        self.step = default_step(D.order) if step is None else step
        self._basis = lie_basis(D.spec)
        self._flows = {}

    def _flow(self, i, t):
        key = (i, t)
        if key not in self._flows:
            self._flows[key] = exp_lie(self._basis[i], t)
        return self._flows[key]

    def _mono(self, mono, g):
        if not mono:
            return np.asarray(self.f(g), dtype=complex)
        i, rest = mono[0], mono[1:]
        s = self.step
        if self.D.side == "left":
            plus, minus = multiply(g, self._flow(i, s)), multiply(g, self._flow(i, -s))
        else:
            plus, minus = multiply(self._flow(i, s), g), multiply(self._flow(i, -s), g)
        return (self._mono(rest, plus) - self._mono(rest, minus)) / (2 * s)

    def __call__(self, g: GroupElement):
        out = 0
        for c, mono in self.D.terms:
            out = out + c * self._mono(mono, g)
        return np.broadcast_to(np.asarray(out, dtype=complex), g.batch_shape)


def apply_operator(D: InvariantOperator, f, step: float | None = None) -> Differentiated:
    return Differentiated(D, f, step)


def gram_matrix(measure: MeasureSpec, cutoff: int, grid: QuadratureGrid | None = None,
                chunk: int = CHUNK):
    """Gram matrix ``<pi_ij, pi'_kl>_mu`` of all matrix elements up to ``cutoff``.

    Returns ``(index, gram, expected_diagonal)`` where ``index`` lists
    ``(label, i, j)`` and ``expected_diagonal`` is ``C / d^2`` with the
    closed-form ``C`` when available (grid-consistent otherwise).
    """
    spec = measure.spec
    if grid is None:
        grid = g_grid(spec, measure, resolution=default_resolution(spec, cutoff), max_weight=cutoff,
                      radial_nodes=64)
    labels = enumerate_irreps(spec, cutoff)
    index = [(lab, i, j) for lab in labels for i in range(lab.dim) for j in range(lab.dim)]
    partials = []
    for start in range(0, len(grid), chunk):
        part = grid.nodes[start:start + chunk]
        mats = rep_matrices(labels, part)
        cols = np.concatenate([mats[lab].reshape(part.size, -1) for lab in labels], axis=1)
        w = grid.weights[start:start + chunk]
        partials.append((cols * w[:, None]).T @ np.conj(cols))
    gram = pairwise_sum(np.stack(partials))
    expected = []
    for lab, _, _ in index:
        c, _, _ = _closed_or_none(measure, lab)
        if c is None:
            c = float(np.exp(grid_log_normalization(grid, lab)))
        expected.append(c / lab.dim ** 2)
    return index, gram, np.asarray(expected)


@dataclass
class OrthogonalityReport:
    index: list
    max_offdiag: float
    max_diag_error: float

    def to_json(self) -> dict:
        return {"n_functions": len(self.index), "max_offdiag": self.max_offdiag,
                "max_diag_error": self.max_diag_error}


def orthogonality_report(measure: MeasureSpec, cutoff: int, grid: QuadratureGrid | None = None):
    """Gram matrix scaled by the expected diagonal, compared with the identity."""
    index, gram, expected = gram_matrix(measure, cutoff, grid)
    s = 1.0 / np.sqrt(expected)
    scaled = gram * s[:, None] * s[None, :]
    off = np.abs(scaled - np.diag(np.diag(scaled)))
    return OrthogonalityReport(index, float(off.max(initial=0.0)),
                               float(np.max(np.abs(np.diag(scaled) - 1))) if len(index) else 0.0)
