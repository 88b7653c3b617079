"""Tame and K-admissible measures and their normalization constants.

Every measure here is ``density x Haar`` with the Haar normalization of
:mod:`holofourier.integrate`.  K-bi-invariant densities are evaluated through
Cartan coordinates ``t`` (shape ``(..., n_factors)``) by
``log_density_cartan``; logs are used throughout because the shell-step
densities produced by :func:`build_tame_measure` underflow double precision
long before they stop mattering.

Shells on product groups use the max-norm of the per-factor radial parts,
``K_n = {g : max_f radial_f(g) <= n h}``, so every ball is a product of
per-factor balls.
"""
from __future__ import annotations

import csv
import io
import threading
from dataclasses import dataclass, field
from math import ceil

import numpy as np
from scipy import special

from .errors import InputError, NonConvergentError
from .groups import (FactorKind, GroupElement, GroupSpec, cartan, multiply, radial,
                     sample_compact, sample_element)
from .integrate import (QuadratureGrid, gauss_legendre, kk_grid, log_haar_jacobian,
                        log_rep_norm2, materialize, pairwise_sum)
from .irreps import IrrepLabel, enumerate_irreps

PROFILE_LIMIT = 80.0
PROFILE_NODES = 16


class MeasureSpec:
    """Base class; subclasses define ``log_density_cartan`` or ``density``."""

    spec: GroupSpec
    bi_invariant = True

    def log_density_cartan(self, t):
        raise NotImplementedError

    def density(self, g: GroupElement):
        return np.exp(self.log_density_cartan(cartan(g)))

    def log_density(self, g: GroupElement):
        return self.log_density_cartan(cartan(g))

    def breakpoints(self, cut: float):
        """Radii at which the density may be discontinuous (none by default)."""
        return ()

    @property
    def profile_window(self) -> float:
        return 0.5

    def to_json(self) -> dict:
        raise InputError(f"{type(self).__name__} is not serializable")


def _per_factor(spec: GroupSpec, value, name) -> tuple:
    vals = np.broadcast_to(np.asarray(value, dtype=float), (spec.n_factors,))
    return tuple(float(v) for v in vals)


@dataclass(frozen=True)
class GaussianRadial(MeasureSpec):
    """Density ``prod_f exp(-t_f^2 / tau_f)``."""

    spec: GroupSpec
    tau: tuple

    def __post_init__(self):
        tau = _per_factor(self.spec, self.tau, "tau")
        if any(t <= 0 for t in tau):
            raise InputError("tau must be > 0")
        object.__setattr__(self, "tau", tau)

    def log_density_cartan(self, t):
        t = np.asarray(t, dtype=float)
        return -np.sum(t * t / np.asarray(self.tau), axis=-1)

    def log_normalization(self, label: IrrepLabel) -> float:
        total = 0.0
        for kind, w, tau in zip(self.spec.factors, label.weights, self.tau):
            if kind is FactorKind.TORUS:
                total += np.log(2 * np.pi) + 0.5 * np.log(np.pi * tau) + w * w * tau
            else:
                total += _log_sl2_gaussian(w, tau)
        return float(total)

    def to_json(self) -> dict:
        return {"kind": "gaussian", "tau": list(self.tau)}


def _log_half_gaussian(b, tau):
    """``log int_0^inf exp(b t - t^2/tau) dt``."""
    x = -0.5 * b * np.sqrt(tau)
    base = 0.5 * np.log(np.pi * tau) - np.log(2.0)
    if x > 0:
        return base + np.log(special.erfcx(x))
    return base + 0.25 * b * b * tau + np.log(special.erfc(x))


def _log_sl2_gaussian(m: int, tau: float) -> float:
    # sinh(2t)^2 = (e^{4t} + e^{-4t} - 2) / 4
    logs, coefs = [], []
    for j in range(m + 1):
        k = 2 * (m - 2 * j)
        for shift, c in ((4, 0.25), (-4, 0.25), (0, -0.5)):
            logs.append(_log_half_gaussian(k + shift, tau))
            coefs.append(c)
    val, sign = special.logsumexp(logs, b=coefs, return_sign=True)
    if sign <= 0:
        raise NonConvergentError("closed-form SL2 normalization lost all precision")
    return float(val)


def _log_ball_volume(kind: FactorKind, r: float) -> float:
    if r <= 0:
        return -np.inf
    if kind is FactorKind.TORUS:
        return float(np.log(4 * np.pi * r))
    if r < 20:
        return float(np.log(np.sinh(4 * r) / 8 - r / 2))
    return float(4 * r - np.log(16.0) + np.log1p(-8 * r * np.exp(-4 * r) - np.exp(-8 * r)))


def log_ball_volume(spec: GroupSpec, r: float) -> float:
    """Haar volume of ``{max_f radial_f <= r}``."""
    return sum(_log_ball_volume(k, r) for k in spec.factors)


def log_shell_volume(spec: GroupSpec, n: int, h: float) -> float:
    hi = log_ball_volume(spec, n * h)
    lo = log_ball_volume(spec, (n - 1) * h)
    if lo == -np.inf:
        return hi
    return float(hi + np.log1p(-np.exp(lo - hi)))


@dataclass(frozen=True)
class ShellStep(MeasureSpec):
    """Density ``a_n`` on the shell ``K_n minus K_(n-1)`` (shell width ``h``).

    ``log_a`` stores ``log a_1 .. log a_N``.  Further constants follow the
    recurrence ``a_n = min(a_(n-1), 2^-n / (M_(2n) vol_n))`` with the growth
    envelope ``log M_k = log_m + slope (k - k0) k / k0`` for ``k > k0``.
    """

    spec: GroupSpec
    h: float
    log_a: tuple
    log_m: float = 0.0
    slope: float = 0.0
    k0: int = 1
    info: dict = field(default=None, compare=False, hash=False, repr=False)

    def __post_init__(self):
        if self.h <= 0:
            raise InputError("shell width h must be > 0")
        la = tuple(float(x) for x in self.log_a)
        if not la:
            raise InputError("ShellStep needs at least one shell constant")
        if any(b > a + 1e-12 for a, b in zip(la, la[1:])):
            raise InputError("shell constants must be nonincreasing")
        object.__setattr__(self, "log_a", la)

    @property
    def profile_window(self) -> float:
        return self.h

    def breakpoints(self, cut: float):
        return tuple(self.h * np.arange(1, int(np.floor(cut / self.h)) + 1))

    def _extended(self, n_max: int) -> np.ndarray:
        la = list(self.log_a)
        cache = getattr(self, "_ext_cache", None)
        if cache is not None and len(cache) > n_max:
            return cache
        for n in range(len(la) + 1, n_max + 1):
            k = 2 * n
            log_m = self.log_m + self.slope * max(k - self.k0, 0) * k / self.k0
            cand = -n * np.log(2.0) - log_m - log_shell_volume(self.spec, n, self.h)
            la.append(min(la[-1], cand))
        arr = np.asarray([0.0] + la)
        object.__setattr__(self, "_ext_cache", arr)
        return arr

    def shell_index(self, t):
        r = np.max(np.abs(np.asarray(t, dtype=float)), axis=-1)
        return np.maximum(1, np.ceil(r / self.h - 1e-12)).astype(int)

    def log_density_cartan(self, t):
        n = self.shell_index(t)
        table = self._extended(int(np.max(n, initial=1)))
        return table[n]

    def a(self, n_max: int) -> np.ndarray:
        return np.exp(self._extended(n_max)[1:])

    def to_json(self) -> dict:
        return {"kind": "shellstep", "h": self.h, "a": [float(np.exp(x)) for x in self.log_a],
                "log_a": list(self.log_a),
                "envelope": {"log_m": self.log_m, "slope": self.slope, "k0": self.k0}}


@dataclass(frozen=True)
class ScaledMeasure(MeasureSpec):
    base: MeasureSpec
    c: float

    def __post_init__(self):
        if self.c <= 0:
            raise InputError("scale must be > 0")

    @property
    def spec(self):
        return self.base.spec

    @property
    def bi_invariant(self):
        return self.base.bi_invariant

    @property
    def profile_window(self):
        return self.base.profile_window

    def breakpoints(self, cut):
        return self.base.breakpoints(cut)

    def log_density_cartan(self, t):
        return self.base.log_density_cartan(t) + np.log(self.c)

    def density(self, g):
        return self.c * self.base.density(g)

    def to_json(self) -> dict:
        return {"kind": "scaled", "c": self.c, "base": self.base.to_json()}


class RadialDensity(MeasureSpec):
    """K-bi-invariant density given by ``log_rho(t)`` on Cartan coordinates."""

    def __init__(self, spec: GroupSpec, log_rho, name="radial"):
        self.spec = spec
        self._log_rho = log_rho
        self.name = name

    def log_density_cartan(self, t):
        return np.asarray(self._log_rho(np.asarray(t, dtype=float)), dtype=float)

    def __repr__(self):
        return f"RadialDensity({self.name})"


class PointDensity(MeasureSpec):
    """Density given pointwise on group elements; not assumed K-bi-invariant."""

    bi_invariant = False

    def __init__(self, spec: GroupSpec, density, name="pointwise"):
        self.spec = spec
        self._density = density
        self.name = name

    def density(self, g):
        return np.asarray(self._density(g), dtype=float)

    def log_density(self, g):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log(self.density(g))

    def log_density_cartan(self, t):
        return self.log_density(GroupElement.from_cartan(self.spec, t))

    def __repr__(self):
        return f"PointDensity({self.name})"


class KAveraged(MeasureSpec):
    """``mu(g) = int_K int_K nu(x g y) dx dy`` evaluated on a ``K x K`` grid."""

    def __init__(self, base: MeasureSpec, kgrid: QuadratureGrid, chunk: int = 32):
        if kgrid.domain != "KxK":
            raise InputError("k_average needs a K x K grid")
        self.base = base
        self.spec = base.spec
        self.kgrid = kgrid
        self.chunk = chunk

    def density(self, g):
        flat = g.ravel()
        x, y = self.kgrid.nodes
        q = len(self.kgrid)
        out = np.empty(flat.size)
        for start in range(0, flat.size, self.chunk):
            part = flat[start:start + self.chunk]
            n = part.size
            gi = part[np.repeat(np.arange(n), q)]
            xi = x[np.tile(np.arange(q), n)]
            yi = y[np.tile(np.arange(q), n)]
            moved = GroupElement(self.spec, [
                xc * gc * yc if kind is FactorKind.TORUS else xc @ gc @ yc
                for kind, xc, gc, yc in zip(self.spec.factors, xi.coords, gi.coords, yi.coords)],
                renormalize=False)
            vals = np.asarray(self.base.density(moved), dtype=float)
            vals = vals.reshape(n, q) * self.kgrid.weights[None, :]
            out[start:start + n] = pairwise_sum(vals, axis=1)
        return out.reshape(g.batch_shape)

    def log_density(self, g):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log(self.density(g))

    def log_density_cartan(self, t):
        return self.log_density(GroupElement.from_cartan(self.spec, t))

    def breakpoints(self, cut):
        return self.base.breakpoints(cut)

    def to_json(self) -> dict:
        return {"kind": "kavg", "resolution": self.kgrid.resolution, "base": self.base.to_json()}

    def __repr__(self):
        return f"KAveraged({self.base!r})"


def gaussian_radial(spec: GroupSpec, tau) -> GaussianRadial:
    return GaussianRadial(spec, tau)


def k_average(measure: MeasureSpec, kgrid: QuadratureGrid) -> KAveraged:
    return KAveraged(measure, kgrid)


def measure_from_json(spec: GroupSpec, obj) -> MeasureSpec:
    try:
        kind = obj["kind"]
        if kind == "gaussian":
            return GaussianRadial(spec, tuple(np.broadcast_to(obj["tau"], (spec.n_factors,))))
        if kind == "shellstep":
            la = obj.get("log_a")
            if la is None:
                la = [float(np.log(a)) for a in obj["a"]]
            env = obj.get("envelope", {})
            return ShellStep(spec, float(obj.get("h", 1.0)), tuple(la), env.get("log_m", 0.0),
                             env.get("slope", 0.0), env.get("k0", 1))
        if kind == "kavg":
            return KAveraged(measure_from_json(spec, obj["base"]),
                             kk_grid(spec, int(obj.get("resolution", 3))))
        if kind == "scaled":
            return ScaledMeasure(measure_from_json(spec, obj["base"]), float(obj["c"]))
    except (KeyError, TypeError) as exc:
        raise InputError(f"invalid measure {obj!r}: {exc}") from exc
    raise InputError(f"unknown measure kind {obj.get('kind')!r}")


# shell profiles ----------------------------------------------------------------

def _factor_cells(kind, w, edges, q):
    """Per-factor GL nodes over the windows between ``edges``.

    Returns ``(window index, t, log weight incl. Haar Jacobian and ||pi_w||^2)``.
    """
    win, ts, lw = [], [], []
    for j in range(1, len(edges)):
        sides = [(edges[j - 1], edges[j])]
        if kind is FactorKind.TORUS:
            sides.append((-edges[j], -edges[j - 1]))
        for lo, hi in sides:
            t, wt = gauss_legendre(q, lo, hi)
            win.append(np.full(q, j))
            ts.append(t)
            lw.append(np.log(wt) + log_haar_jacobian(kind, t) + log_rep_norm2(kind, w, t))
    return np.concatenate(win), np.concatenate(ts), np.concatenate(lw)


def shell_profile(measure: MeasureSpec, label: IrrepLabel, edges, q: int = PROFILE_NODES) -> np.ndarray:
    """``log int_{shell j} ||pi(g)||^2 dmu`` for the max-norm shells between ``edges``."""
    edges = np.asarray(edges, dtype=float)
    cells = [_factor_cells(k, w, edges, q) for k, w in zip(measure.spec.factors, label.weights)]
    sizes = [len(c[0]) for c in cells]
    idx = np.indices(sizes).reshape(len(sizes), -1)
    shell = np.max(np.stack([cells[f][0][idx[f]] for f in range(len(cells))]), axis=0)
    t = np.stack([cells[f][1][idx[f]] for f in range(len(cells))], axis=-1)
    logs = sum(cells[f][2][idx[f]] for f in range(len(cells)))
    logs = logs + measure.log_density_cartan(t)
    out = np.full(len(edges) - 1, -np.inf)
    order = np.argsort(shell, kind="stable")
    shell, logs = shell[order], logs[order]
    bounds = np.searchsorted(shell, np.arange(1, len(edges) + 1))
    for j in range(len(edges) - 1):
        seg = logs[bounds[j]:bounds[j + 1]]
        if seg.size:
            out[j] = special.logsumexp(seg)
    return out


def _profile_edges(measure, limit=PROFILE_LIMIT):
    step = measure.profile_window
    return step * np.arange(int(ceil(limit / step)) + 1)


def _tail_from_profile(profile):
    finite = profile[np.isfinite(profile)]
    if finite.size == 0:
        return -np.inf, np.inf
    log_total = special.logsumexp(finite)
    last = profile[-3:]
    if not np.all(np.isfinite(last)):
        return log_total, 0.0
    ratio = np.exp(np.max(np.diff(last)))
    if ratio >= 1:
        return log_total, np.inf
    if ratio == 0:
        return log_total, 0.0
    log_tail = last[-1] + np.log(ratio) - np.log1p(-ratio)
    return log_total, float(np.exp(log_tail - log_total))


def log_normalization_profile(measure, label, limit=PROFILE_LIMIT):
    """``(log C, relative tail estimate)`` from the shell profile."""
    profile = shell_profile(measure, label, _profile_edges(measure, limit))
    return _tail_from_profile(profile)


def _heavy_labels(spec, max_weight):
    out = []
    for sign in (1, -1):
        w = [sign * max_weight if k is FactorKind.TORUS else max_weight for k in spec.factors]
        out.append(IrrepLabel(spec, tuple(w)))
    return out


def radial_tail(measure: MeasureSpec, max_weight: int, cut: float) -> float:
    """Fraction of ``C`` for the heaviest labels lying outside ``max radial <= cut``."""
    step = measure.profile_window
    edges = np.unique(np.concatenate([_profile_edges(measure), [cut]]))
    worst = 0.0
    for label in _heavy_labels(measure.spec, max_weight):
        prof = shell_profile(measure, label, edges)
        log_total, tail_rel = _tail_from_profile(prof)
        if not np.isfinite(tail_rel):
            return np.inf
        inside = edges[1:] <= cut + 1e-12
        outside = prof[~inside]
        log_out = special.logsumexp(outside) if outside.size else -np.inf
        frac = float(np.exp(log_out - log_total)) + tail_rel
        worst = max(worst, frac)
    del step
    return worst


def default_radial_cut(measure: MeasureSpec, max_weight: int = 0, tol: float = 1e-12) -> float:
    """Smallest profile edge whose outside share of ``C`` is below ``tol``."""
    edges = _profile_edges(measure)
    best = None
    for label in _heavy_labels(measure.spec, max_weight):
        prof = shell_profile(measure, label, edges)
        log_total, tail_rel = _tail_from_profile(prof)
        if not np.isfinite(tail_rel):
            raise NonConvergentError(f"measure is not admissible for weight {max_weight}")
        rev = np.logaddexp.accumulate(prof[::-1])[::-1]  # log of mass from shell j onwards
        share = np.exp(np.append(rev[1:], -np.inf) - log_total) + tail_rel
        ok = np.nonzero(share <= tol)[0]
        cut = edges[ok[0] + 1] if ok.size else edges[-1]
        best = cut if best is None else max(best, cut)
    return float(best)


# normalization -------------------------------------------------------------------

def _underlying_gaussian(measure):
    scale = 0.0
    while isinstance(measure, ScaledMeasure):
        scale += np.log(measure.c)
        measure = measure.base
    return (measure, scale) if isinstance(measure, GaussianRadial) else (None, 0.0)


def grid_log_normalization(grid: QuadratureGrid, label: IrrepLabel) -> float:
    """``log C`` from the Cartan-coordinate rule of a ``G`` or ``radial`` grid."""
    t = grid.radial_nodes if grid.domain == "G" else grid.nodes
    w = grid.radial_weights if grid.domain == "G" else grid.weights
    logs = sum(log_rep_norm2(k, wt, t[:, f])
               for f, (k, wt) in enumerate(zip(label.spec.factors, label.weights)))
    top = np.max(logs)
    return float(top + np.log(pairwise_sum(w * np.exp(logs - top))))


def normalization_entry(measure: MeasureSpec, label: IrrepLabel, grid: QuadratureGrid | None = None,
                        tol: float = 1e-10):
    """``(C, method, tail_estimate)`` for one label."""
    if grid is not None:
        return float(np.exp(grid_log_normalization(grid, label))), "quadrature", grid.tail_estimate
    gauss, log_scale = _underlying_gaussian(measure)
    if gauss is not None:
        return float(np.exp(gauss.log_normalization(label) + log_scale)), "closed-form", 0.0
    log_c, tail = log_normalization_profile(measure, label)
    if not tail <= tol:
        raise NonConvergentError(
            f"C for label {label} does not converge (tail estimate {tail:.3e}); "
            "measure is not admissible for this label")
    return float(np.exp(log_c)), "quadrature", tail


def normalization(measure: MeasureSpec, label: IrrepLabel, grid: QuadratureGrid | None = None,
                  tol: float = 1e-10) -> float:
    """``C_{pi,mu} = int_G ||pi(g)||^2 dmu(g)`` via the radial reduction.

    With ``grid`` the radial rule of that grid is used (the value the grid
    itself would produce); otherwise the closed form for Gaussian densities or
    the shell-profile quadrature with a tail test.
    """
    return normalization_entry(measure, label, grid, tol)[0]


class NormalizationTable:
    """Cache of ``C_{pi,mu}`` per label; safe for concurrent use."""

    def __init__(self, measure: MeasureSpec, grid: QuadratureGrid | None = None):
        self.measure = measure
        self.grid = grid
        self._entries = {}
        self._lock = threading.Lock()

    def __getitem__(self, label: IrrepLabel) -> float:
        return self.entry(label)[0]

    def entry(self, label):
        with self._lock:
            hit = self._entries.get(label)
        if hit is not None:
            return hit
        value = normalization_entry(self.measure, label, self.grid)
        with self._lock:
            return self._entries.setdefault(label, value)

    def __contains__(self, label):
        with self._lock:
            return label in self._entries

    def __len__(self):
        with self._lock:
            return len(self._entries)

    def labels(self):
        with self._lock:
            return list(self._entries)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["label", "weights", "C", "method", "tail_estimate"])
        with self._lock:
            items = list(self._entries.items())
        for label, (c, method, tail) in items:
            writer.writerow([str(label), " ".join(map(str, label.weights)), repr(c), method,
                             repr(float(tail))])
        return buf.getvalue()


# admissibility -------------------------------------------------------------------------

@dataclass
class AdmissibilityReport:
    invariance_residual: float
    entries: list
    tol: float
    invariance_tol: float

    @property
    def passed(self) -> bool:
        return self.invariance_residual <= self.invariance_tol and all(e["finite"] for e in self.entries)

    def failures(self):
        return [e for e in self.entries if not e["finite"]]

    def to_json(self) -> dict:
        return {"passed": self.passed, "invariance_residual": self.invariance_residual,
                "tol": self.tol, "invariance_tol": self.invariance_tol, "labels": self.entries}


def invariance_residual(measure: MeasureSpec, samples: int = 64, seed: int = 0, radius: float = 2.0) -> float:
    """Max relative change of the density under ``g -> k1 g k2`` on random samples."""
    rng = np.random.default_rng(seed)
    g = sample_element(measure.spec, seed, radius, size=samples)
    k1 = sample_compact(measure.spec, rng, (samples,))
    k2 = sample_compact(measure.spec, rng, (samples,))
    moved = multiply(multiply(k1, g), k2)
    if measure.bi_invariant and not isinstance(measure, KAveraged):
        with np.errstate(invalid="ignore"):
            diff = measure.log_density(moved) - measure.log_density(g)
        return float(np.max(np.abs(np.expm1(diff))))
    a = measure.density(moved)
    b = measure.density(g)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


def verify_admissible(measure: MeasureSpec, spec: GroupSpec, cutoff: int, tol: float = 1e-8,
                      invariance_tol: float = 1e-8, samples: int = 64) -> AdmissibilityReport:
    """Check K-bi-invariance and finiteness of ``C_{pi,mu}`` up to ``cutoff``."""
    if measure.spec != spec:
        raise InputError("measure belongs to a different group")
    residual = invariance_residual(measure, samples)
    entries = []
    for label in enumerate_irreps(spec, cutoff):
        log_c, tail = log_normalization_profile(measure, label)
        entries.append({"weights": list(label.weights), "log_C": float(log_c),
                        "tail_estimate": float(tail), "finite": bool(tail <= tol)})
    return AdmissibilityReport(residual, entries, tol, invariance_tol)


# tame measure construction ----------------------------------------------------------------

def sampling_nodes(spec: GroupSpec, radius: float, resolution: int = 8, n_radial: int = 64,
                   seed: int = 0) -> GroupElement:
    """Product of Cartan radii (including ``radius``) and compact samples."""
    from .integrate import k_grid

    per = []
    for kind in spec.factors:
        t = np.linspace(0.0, radius, n_radial)
        if kind is FactorKind.TORUS:
            t = np.concatenate([-t[:0:-1], t])
        per.append(t)
    idx = np.indices([len(p) for p in per]).reshape(len(per), -1)
    t = np.stack([per[f][idx[f]] for f in range(len(per))], axis=-1)
    a = GroupElement.from_cartan(spec, t)
    kg = k_grid(spec, resolution)
    n, q = len(t), len(kg)
    i, j = np.repeat(np.arange(n), q), np.tile(np.arange(q), n)
    k1 = kg.nodes[j]
    # the left rule already covers each circle; SL2 factors get an independent
    # random right factor per node so that k1 a k2 spreads over the orbit
    rand = sample_compact(spec, np.random.default_rng(seed), (n * q,))
    k2 = GroupElement(spec, [np.ones(n * q, dtype=complex) if kind is FactorKind.TORUS else c
                             for kind, c in zip(spec.factors, rand.coords)], renormalize=False)
    return multiply(multiply(k1, a[i]), k2)


def build_tame_measure(spec: GroupSpec, family, horizon: int, grid=None, h: float = 1.0,
                       resolution: int = 6) -> ShellStep:
    """Shell-step density dominating every family member (the tame-measure lemma).

    ``M_n`` is the max of ``|f_k|^2`` for ``k <= n`` over the nodes lying in
    ``K_n``; ``a_n = min(a_(n-1), 2^-n / (M_(2n) vol(K_n minus K_(n-1))))`` with
    ``a_0 = 1``.  ``grid`` may be a :class:`QuadratureGrid` or a
    :class:`GroupElement` batch of sample nodes; it must reach radial
    ``2 * horizon * h``.
    """
    from .errors import NonFiniteError

    if not family:
        raise InputError("family must be nonempty")
    if horizon < 1:
        raise InputError("horizon must be >= 1")
    k_max = 2 * horizon
    if grid is None:
        nodes = sampling_nodes(spec, k_max * h, resolution)
    elif isinstance(grid, QuadratureGrid):
        nodes = materialize(grid.nodes)
    else:
        nodes = grid
    r = np.max(radial(nodes), axis=-1)
    if r.max() < k_max * h - 1e-9:
        raise InputError(f"sampling grid reaches radial {r.max():.3f} < {k_max * h}")
    shell = np.maximum(1, np.ceil(r / h - 1e-9)).astype(int)
    log_abs2 = []
    for k, f in enumerate(family, start=1):
        with np.errstate(over="ignore", invalid="ignore"):
            try:
                vals = np.broadcast_to(np.asarray(f(nodes), dtype=complex), r.shape)
            except NonFiniteError as exc:
                raise InputError(f"family member {k} is not evaluable on the grid: {exc}") from exc
        if not np.all(np.isfinite(vals)):
            raise InputError(f"family member {k} is not evaluable on the grid (non-finite values)")
        with np.errstate(divide="ignore"):
            log_abs2.append(2.0 * np.log(np.abs(vals)))
    log_abs2 = np.stack(log_abs2)
    # per-shell maxima of each member, then cumulative over shells
    per_shell = np.full((len(family), k_max + 1), -np.inf)
    for n in range(1, k_max + 1):
        mask = shell == n
        if mask.any():
            per_shell[:, n] = log_abs2[:, mask].max(axis=1)
    ball = np.maximum.accumulate(per_shell, axis=1)
    log_m = np.full(k_max + 1, -np.inf)
    for n in range(1, k_max + 1):
        log_m[n] = ball[:min(n, len(family)), n].max()
    log_vol = np.array([log_shell_volume(spec, n, h) for n in range(1, horizon + 1)])
    log_a = []
    prev = 0.0
    for n in range(1, horizon + 1):
        cand = -n * np.log(2.0) - log_m[2 * n] - log_vol[n - 1]
        prev = min(prev, cand)
        log_a.append(prev)
    slope = max(float(log_m[k_max] - log_m[k_max - 1]), 0.0) if np.isfinite(log_m[k_max - 1]) else 0.0
    info = {"h": h, "horizon": horizon, "log_M": [float(x) for x in log_m[1:]],
            "log_shell_volume": [float(x) for x in log_vol], "n_nodes": int(r.size),
            "max_radial": float(r.max())}
    return ShellStep(spec, h, tuple(log_a), float(log_m[k_max]), slope, k_max, info)


def lemma_check(measure: ShellStep) -> dict:
    """Per-shell check of ``a_n M_(2n) vol_n <= 2^-n`` on the stored data."""
    info = measure.info
    if info is None:
        raise InputError("measure carries no construction data")
    horizon = info["horizon"]
    log_m = np.asarray(info["log_M"])
    terms = []
    for n in range(1, horizon + 1):
        log_term = measure.log_a[n - 1] + log_m[2 * n - 1] + info["log_shell_volume"][n - 1]
        terms.append(float(log_term + n * np.log(2.0)))  # log of term / 2^-n
    return {"log_ratio_to_bound": terms, "holds": bool(max(terms) <= 1e-9),
            "sum_terms": float(np.sum(np.exp(np.asarray(terms) - np.log(2.0) * np.arange(1, horizon + 1)))),
            "bound": float(1 - 2.0 ** -horizon)}


def family_integrals(measure: ShellStep, family, grid: QuadratureGrid) -> list:
    """``int |f|^2 dmu`` inside the horizon ball plus the ``sum 2^-n`` tail bound."""
    from .integrate import chunked_sum

    horizon = measure.info["horizon"]
    tail_bound = 2.0 ** -horizon
    out = []
    log_m = np.asarray(measure.info["log_M"])
    log_vol = measure.info["log_shell_volume"]
    for k, f in enumerate(family, start=1):
        inner = float(np.real(chunked_sum(lambda g: np.abs(np.asarray(f(g), dtype=complex)) ** 2, grid)))
        # shells before k are bounded by a_n * max|f_k|^2 * vol_n <= a_n * M_(2 max(n,k)) * vol_n
        head = 0.0
        for n in range(1, min(k, horizon + 1)):
            head += np.exp(measure.log_a[n - 1] + log_m[min(2 * max(n, k), len(log_m)) - 1] + log_vol[n - 1])
        bound = head + sum(2.0 ** -n for n in range(max(k, 1), horizon + 1)) + tail_bound
        out.append({"member": k, "integral_inside_horizon": inner, "bound": float(bound),
                    "finite": bool(np.isfinite(inner) and inner <= bound * (1 + 1e-6))})
    return out
