"""Character expansions of class functions and spectral evolution ``d/dt f_t = D f_t``."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import ExponentialOverflowError, InputError, SpecMismatchError
from .groups import GroupElement, GroupSpec, multiply, sample_element
from .irreps import InvariantOperator, IrrepLabel, character, rep_operator
from .measures import MeasureSpec
from .integrate import QuadratureGrid
from .transform import FourierData, apply_operator, fourier, invert

OVERFLOW_LIMIT = 1e300


@dataclass(frozen=True)
class ClassCheck:
    passed: bool
    residual: float

    def __bool__(self):
        return self.passed


def is_class_function(f, spec: GroupSpec, samples: int = 32, tol: float = 1e-8, seed: int = 0,
                      radius: float = 1.0) -> ClassCheck:
    """Compare ``f(gh)`` and ``f(hg)`` on reproducible random pairs."""
    if samples < 1:
        raise InputError("samples must be >= 1")
    g = sample_element(spec, seed, radius, size=samples)
    h = sample_element(spec, seed + 1, radius, size=samples)
    a = np.asarray(f(multiply(g, h)), dtype=complex)
    b = np.asarray(f(multiply(h, g)), dtype=complex)
    residual = float(np.max(np.abs(a - b)))
    return ClassCheck(bool(residual <= tol), residual)


@dataclass(frozen=True, eq=False)
class ClassExpansion:
    """Coefficients ``a_pi`` with ``f = sum a_pi chi_pi``."""

    spec: GroupSpec
    cutoff: int
    entries: dict
    scalar_residual: dict
    reconstruction_residual: float
    class_residual: float
    transform: FourierData = field(repr=False, default=None)

    def __getitem__(self, label) -> complex:
        if not isinstance(label, IrrepLabel):
            label = IrrepLabel(self.spec, tuple(np.atleast_1d(label)))
        return self.entries[label]

    def evaluate(self, g: GroupElement):
        total = np.zeros(g.batch_shape, dtype=complex)
        for label, a in self.entries.items():
            total = total + a * character(label, g)
        return complex(total) if total.ndim == 0 else total

    def coefficient_sum(self) -> float:
        return float(sum(abs(a) * lab.dim for lab, a in self.entries.items()))

    def to_json(self) -> dict:
        return {"spec": self.spec.to_json(), "cutoff": self.cutoff,
                "reconstruction_residual": self.reconstruction_residual,
                "class_residual": self.class_residual,
                "labels": [{"weights": list(lab.weights), "dim": lab.dim,
                            "a": [a.real, a.imag], "scalar_residual": self.scalar_residual[lab]}
                           for lab, a in self.entries.items()]}


def class_expand(f, measure: MeasureSpec, cutoff: int, grid: QuadratureGrid | None = None,
                 tol: float = 1e-6, samples: int = 32, seed: int = 0) -> ClassExpansion:
    """``a_pi = (d / C) int f conj(chi_pi) dmu``, which equals ``d tr f^(pi)``."""
    check = is_class_function(f, measure.spec, samples, tol, seed)
    if not check.passed:
        raise InputError(f"function is not a class function (residual {check.residual:.3e} > {tol})")
    F = fourier(f, measure, cutoff, grid)
    entries, scalar = {}, {}
    for label, mat in F.entries.items():
        tr = complex(np.trace(mat))
        entries[label] = label.dim * tr
        scalar[label] = float(np.linalg.norm(mat - tr / label.dim * np.eye(label.dim)))
    exp = ClassExpansion(measure.spec, cutoff, entries, scalar, 0.0, check.residual, F)
    pts = sample_element(measure.spec, seed + 2, 1.0, size=samples)
    recon = float(np.max(np.abs(exp.evaluate(pts) - np.asarray(f(pts), dtype=complex))))
    object.__setattr__(exp, "reconstruction_residual", recon)
    return exp


def propagator(P: np.ndarray, t: float, label=None) -> np.ndarray:
    """``exp(t P)`` by scaling and squaring with Pade approximants."""
    if t == 0:
        return np.eye(P.shape[0], dtype=complex)
    with np.errstate(all="ignore"):
        E = expm(t * P)
    if not np.all(np.isfinite(E)) or np.max(np.abs(E), initial=0.0) > OVERFLOW_LIMIT:
        raise ExponentialOverflowError(f"exp(t pi(D)) overflows at t={t} for label {label}")
    return E


@dataclass(frozen=True, eq=False)
class EvolutionState:
    """``f_t = sum d^2 tr(exp(t pi(D)) f0^(pi) pi(g))`` for the stored times."""

    initial: FourierData
    operator: InvariantOperator
    times: tuple
    propagated: dict
    generators: dict

    def growth_rates(self) -> dict:
        """Largest real part of the spectrum of ``pi(D)`` per label."""
        return {lab: float(np.max(np.linalg.eigvals(P).real)) for lab, P in self.generators.items()}

    def matrices(self, t: float) -> dict:
        t = float(t)
        if t in self.propagated:
            return self.propagated[t]
        return {lab: propagator(self.generators[lab], t, lab) @ m
                for lab, m in self.initial.entries.items()}

    def fourier_at(self, t: float) -> FourierData:
        F = self.initial
        return FourierData(F.spec, F.measure, F.cutoff, self.matrices(t), F.C, F.C_closed,
                           F.tail_estimate, F.quadrature_tail, F.basis, F.grid_info)

    def evaluate(self, g: GroupElement, t: float):
        return invert(self.fourier_at(t), g)[0]

    def evaluator(self, t: float):
        F = self.fourier_at(t)
        return lambda g: invert(F, g)[0]


def evolve(f0, D: InvariantOperator, times, measure: MeasureSpec, cutoff: int,
           grid: QuadratureGrid | None = None, initial: FourierData | None = None) -> EvolutionState:
    """Spectral solution of ``d/dt f_t = D f_t`` for a left-invariant ``D``.

    ``initial`` may supply an already computed transform of ``f0``.
    """
    if D.side != "left":
        raise InputError("evolve requires a left-invariant operator (side='left')")
    if D.spec != measure.spec:
        raise SpecMismatchError("operator and measure belong to different groups")
    F = initial if initial is not None else fourier(f0, measure, cutoff, grid)
    gens = {lab: rep_operator(lab, D) for lab in F.labels}
    prop = {}
    for t in times:
        t = float(t)
        if t == 0:
            prop[t] = dict(F.entries)
        else:
            prop[t] = {lab: propagator(gens[lab], t, lab) @ m for lab, m in F.entries.items()}
    return EvolutionState(F, D, tuple(float(t) for t in times), prop, gens)


def evolve_check(state: EvolutionState, g: GroupElement, t: float, dt: float = 1e-4,
                 step: float | None = None):
    """``|d/dt f_t(g) - (D f_t)(g)|`` with central differences in time and space."""
    dfdt = (np.asarray(state.evaluate(g, t + dt)) - np.asarray(state.evaluate(g, t - dt))) / (2 * dt)
    Df = apply_operator(state.operator, state.evaluator(t), step)(g)
    res = np.abs(dfdt - Df)
    return float(res) if np.ndim(res) == 0 else res


def time_series_csv(state: EvolutionState, points: GroupElement, times=None, dt: float = 1e-4) -> str:
    """Rows ``t, point_id, re, im, residual`` for every stored time and point."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "point_id", "re", "im", "residual"])
    for t in (state.times if times is None else times):
        vals = np.atleast_1d(state.evaluate(points, t))
        res = np.atleast_1d(evolve_check(state, points, t, dt))
        for i, (v, r) in enumerate(zip(vals, res)):
            writer.writerow([repr(float(t)), i, repr(float(v.real)), repr(float(v.imag)), repr(float(r))])
    return buf.getvalue()


__all__ = ["ClassCheck", "ClassExpansion", "EvolutionState", "is_class_function", "class_expand",
           "evolve", "evolve_check", "propagator", "time_series_csv"]
