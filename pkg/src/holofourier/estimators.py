"""Estimator-style wrappers (``fit`` / ``transform`` / ``predict``) over the functional API.

Hyperparameters are set in ``__init__`` and exposed through ``get_params`` /
``set_params``; fitted state ends with an underscore.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .integrate import g_grid
from .irreps import InvariantOperator
from .measures import GaussianRadial, build_tame_measure, lemma_check, verify_admissible
from .spectral import class_expand, evolve
from .transform import default_resolution, fourier, invert, plancherel_eval
from .validation import check_cutoff, check_elements, check_group, check_holofn


def _grid(spec, measure, cutoff, resolution, radial_cut, radial_nodes):
    res = default_resolution(spec, cutoff) if resolution is None else resolution
    return g_grid(spec, measure, radial_cut=radial_cut, resolution=res,
                  radial_nodes=radial_nodes, max_weight=cutoff)


class HolomorphicFourier(BaseEstimator):
    """Fourier transform of one holomorphic function under a Gaussian radial measure.

    Parameters
    ----------
    group : str or GroupSpec
        For example ``"torus"``, ``"sl2"`` or ``"torus,sl2"``.
    tau : float
        Width of the Gaussian radial density.
    cutoff : int
        Largest absolute weight kept.
    resolution, radial_cut, radial_nodes
        Quadrature settings; ``None`` picks defaults from the cutoff.
    """

    def __init__(self, group="torus", tau=1.0, cutoff=8, resolution=None, radial_cut=None,
                 radial_nodes=32):
        self.group = group
        self.tau = tau
        self.cutoff = cutoff
        self.resolution = resolution
        self.radial_cut = radial_cut
        self.radial_nodes = radial_nodes

    def fit(self, f, y=None):
        spec = check_group(self.group)
        cutoff = check_cutoff(self.cutoff)
        self.spec_ = spec
        self.function_ = check_holofn(f, spec)
        self.measure_ = GaussianRadial(spec, self.tau)
        grid = _grid(spec, self.measure_, cutoff, self.resolution, self.radial_cut, self.radial_nodes)
        self.fourier_ = fourier(self.function_, self.measure_, cutoff, grid)
        return self

    def transform(self, X=None):
        """Flattened coefficient vector (labels in enumeration order, row-major entries)."""
        check_is_fitted(self, "fourier_")
        return np.concatenate([m.ravel() for m in self.fourier_.entries.values()])

    def predict(self, X):
        """Inversion partial sums at the elements ``X``."""
        check_is_fitted(self, "fourier_")
        value, _ = invert(self.fourier_, check_elements(X, self.spec_))
        return np.atleast_1d(value)

    def plancherel(self) -> complex:
        check_is_fitted(self, "fourier_")
        return plancherel_eval(self.fourier_)


class CharacterExpansion(BaseEstimator):
    """Coefficients of a class function in the characters ``chi_pi``."""

    def __init__(self, group="sl2", tau=1.0, cutoff=4, resolution=None, radial_cut=None,
                 radial_nodes=32, tol=1e-6):
        self.group = group
        self.tau = tau
        self.cutoff = cutoff
        self.resolution = resolution
        self.radial_cut = radial_cut
        self.radial_nodes = radial_nodes
        self.tol = tol

    def fit(self, f, y=None):
        spec = check_group(self.group)
        cutoff = check_cutoff(self.cutoff)
        self.spec_ = spec
        measure = GaussianRadial(spec, self.tau)
        grid = _grid(spec, measure, cutoff, self.resolution, self.radial_cut, self.radial_nodes)
        self.expansion_ = class_expand(check_holofn(f, spec), measure, cutoff, grid, tol=self.tol)
        self.coef_ = np.array(list(self.expansion_.entries.values()))
        self.labels_ = list(self.expansion_.entries)
        return self

    def predict(self, X):
        check_is_fitted(self, "expansion_")
        return np.atleast_1d(self.expansion_.evaluate(check_elements(X, self.spec_)))


class SpectralEvolution(BaseEstimator):
    """Spectral solution of ``d/dt f_t = D f_t`` from initial data ``f0``.

    ``operator`` is an :class:`InvariantOperator`, its JSON description, or
    ``"casimir"`` (first SL2 factor) / ``"laplacian"`` (sum of squared torus
    generators).
    """

    def __init__(self, group="torus", operator="laplacian", tau=1.0, cutoff=8, resolution=None,
                 radial_cut=None, radial_nodes=32):
        self.group = group
        self.operator = operator
        self.tau = tau
        self.cutoff = cutoff
        self.resolution = resolution
        self.radial_cut = radial_cut
        self.radial_nodes = radial_nodes

    def _operator(self, spec):
        op = self.operator
        if isinstance(op, InvariantOperator):
            return op
        if isinstance(op, dict):
            return InvariantOperator.from_json(spec, op)
        if op == "casimir":
            factor = [k.value for k in spec.factors].index("sl2")
            return InvariantOperator.casimir(spec, factor)
        if op == "laplacian":
            from .irreps import basis_offset
            terms = tuple((1.0, (basis_offset(spec, i),) * 2)
                          for i, k in enumerate(spec.factors) if k.value == "torus")
            return InvariantOperator(spec, terms)
        from .errors import InputError
        raise InputError(f"unknown operator {op!r}")

    def fit(self, f0, y=None):
        spec = check_group(self.group)
        cutoff = check_cutoff(self.cutoff)
        self.spec_ = spec
        measure = GaussianRadial(spec, self.tau)
        grid = _grid(spec, measure, cutoff, self.resolution, self.radial_cut, self.radial_nodes)
        self.operator_ = self._operator(spec)
        self.state_ = evolve(check_holofn(f0, spec), self.operator_, [0.0], measure, cutoff, grid)
        return self

    def predict(self, X, t=0.0):
        check_is_fitted(self, "state_")
        return np.atleast_1d(self.state_.evaluate(check_elements(X, self.spec_), t))


class TameMeasure(BaseEstimator):
    """Shell-step measure dominating a family of holomorphic functions."""

    def __init__(self, group="torus", horizon=6, h=1.0, resolution=6, verify_cutoff=None):
        self.group = group
        self.horizon = horizon
        self.h = h
        self.resolution = resolution
        self.verify_cutoff = verify_cutoff

    def fit(self, family, y=None):
        spec = check_group(self.group)
        self.spec_ = spec
        self.family_ = [check_holofn(f, spec) for f in family]
        self.measure_ = build_tame_measure(spec, self.family_, self.horizon, h=self.h,
                                           resolution=self.resolution)
        self.lemma_ = lemma_check(self.measure_)
        if self.verify_cutoff is not None:
            self.admissibility_ = verify_admissible(self.measure_, spec, check_cutoff(self.verify_cutoff))
        return self

    def transform(self, X):
        """Density of the fitted measure at the elements ``X``."""
        check_is_fitted(self, "measure_")
        return np.exp(self.measure_.log_density(check_elements(X, self.spec_)))
