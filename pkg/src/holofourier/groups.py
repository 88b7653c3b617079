"""Complex reductive groups built from ``C*`` and ``SL(2,C)`` factors.

A :class:`GroupElement` may hold a *batch* of elements: torus coordinates are
complex arrays of the batch shape and SL2 coordinates are arrays of shape
``batch + (2, 2)``.  All operations broadcast over the batch, which is how the
quadrature code evaluates functions on many nodes at once.

Coordinates used throughout the package:

* radial part ``s``: ``|log|z||`` on a torus factor, ``log`` of the largest
  singular value on an SL2 factor.  It is K-bi-invariant and subadditive.
* Cartan coordinate ``t``: the signed ``log|z|`` on a torus factor and ``s`` on
  an SL2 factor, so that ``g = k1 . a_t . k2`` with ``a_t = e^t`` (torus) or
  ``diag(e^t, e^-t)``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InputError, SpecMismatchError

EPS_DET = 1e-12


class FactorKind(str, enum.Enum):
    TORUS = "torus"
    SL2 = "sl2"


@dataclass(frozen=True)
class GroupSpec:
    """Ordered product of torus and SL2 factors."""

    factors: tuple

    def __post_init__(self):
        if not self.factors:
            raise InputError("a group needs at least one factor")
        try:
            kinds = tuple(FactorKind(f) for f in self.factors)
        except ValueError as exc:
            raise InputError(f"unknown group factor: {exc}") from exc
        object.__setattr__(self, "factors", kinds)

    @classmethod
    def of(cls, *names) -> "GroupSpec":
        return cls(tuple(names))

    @property
    def n_factors(self) -> int:
        return len(self.factors)

    @property
    def complex_dimension(self) -> int:
        return sum(1 if f is FactorKind.TORUS else 3 for f in self.factors)

    @property
    def lie_basis_size(self) -> int:
        return self.complex_dimension

    def is_abelian(self) -> bool:
        return all(f is FactorKind.TORUS for f in self.factors)

    def to_json(self) -> dict:
        return {"factors": [f.value for f in self.factors]}

    @classmethod
    def from_json(cls, obj) -> "GroupSpec":
        try:
            return cls(tuple(obj["factors"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"invalid group spec {obj!r}: {exc}") from exc

    def __str__(self):
        return " x ".join("C*" if f is FactorKind.TORUS else "SL(2,C)" for f in self.factors)


def _as_complex(x):
    return np.asarray(x, dtype=complex)


def _renormalize(m):
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    if np.any(np.abs(det) <= EPS_DET):
        raise InputError("SL2 coordinate is singular; cannot renormalize to det 1")
    return m / np.sqrt(det)[..., None, None]


class GroupElement:
    """An element (or batch of elements) of the group described by ``spec``.

    SL2 coordinates are renormalized to determinant one on construction.
    Instances are immutable.
    """

    __slots__ = ("spec", "coords", "batch_shape")

    def __init__(self, spec: GroupSpec, coords: Sequence, renormalize: bool = True):
        if len(coords) != spec.n_factors:
            raise SpecMismatchError(
                f"expected {spec.n_factors} coordinates for {spec}, got {len(coords)}")
        out = []
        batch = None
        for kind, c in zip(spec.factors, coords):
            c = _as_complex(c)
            if kind is FactorKind.TORUS:
                if np.any(c == 0):
                    raise InputError("torus coordinate must be nonzero")
                shape = c.shape
            else:
                if c.shape[-2:] != (2, 2):
                    raise InputError(f"SL2 coordinate must be 2x2, got shape {c.shape}")
                if renormalize:
                    c = _renormalize(c)
                shape = c.shape[:-2]
            if batch is None:
                batch = shape
            elif shape != batch:
                raise InputError(f"inconsistent batch shapes {batch} and {shape}")
            c = np.array(c, dtype=complex)
            c.setflags(write=False)
            out.append(c)
        object.__setattr__(self, "spec", spec)
        object.__setattr__(self, "coords", tuple(out))
        object.__setattr__(self, "batch_shape", batch)

    def __setattr__(self, name, value):
        raise AttributeError("GroupElement is immutable")

    # construction helpers -------------------------------------------------
    @classmethod
    def identity(cls, spec: GroupSpec, shape=()) -> "GroupElement":
        coords = []
        for kind in spec.factors:
            if kind is FactorKind.TORUS:
                coords.append(np.ones(shape, dtype=complex))
            else:
                coords.append(np.broadcast_to(np.eye(2, dtype=complex), tuple(shape) + (2, 2)))
        return cls(spec, coords, renormalize=False)

    @classmethod
    def from_cartan(cls, spec: GroupSpec, t) -> "GroupElement":
        """The element ``a_t``; ``t`` has shape ``batch + (n_factors,)``."""
        t = np.asarray(t, dtype=float)
        coords = []
        for i, kind in enumerate(spec.factors):
            ti = t[..., i]
            if kind is FactorKind.TORUS:
                coords.append(np.exp(ti).astype(complex))
            else:
                m = np.zeros(ti.shape + (2, 2), dtype=complex)
                m[..., 0, 0] = np.exp(ti)
                m[..., 1, 1] = np.exp(-ti)
                coords.append(m)
        return cls(spec, coords, renormalize=False)

    @classmethod
    def stack(cls, elements: Sequence["GroupElement"]) -> "GroupElement":
        spec = elements[0].spec
        for e in elements:
            _check_same(spec, e.spec)
        coords = [np.stack([e.coords[i] for e in elements]) for i in range(spec.n_factors)]
        return cls(spec, coords, renormalize=False)

    @property
    def size(self) -> int:
        return int(np.prod(self.batch_shape, dtype=int))

    def __len__(self):
        if not self.batch_shape:
            raise TypeError("unbatched GroupElement has no len()")
        return self.batch_shape[0]

    def __getitem__(self, idx) -> "GroupElement":
        if not self.batch_shape:
            raise TypeError("unbatched GroupElement is not indexable")
        # batch axes lead, so plain indexing leaves the 2x2 tail intact
        return GroupElement(self.spec, [c[idx] for c in self.coords], renormalize=False)

    def reshape(self, shape) -> "GroupElement":
        shape = tuple(shape)
        coords = [c.reshape(shape) if k is FactorKind.TORUS else c.reshape(shape + (2, 2))
                  for k, c in zip(self.spec.factors, self.coords)]
        return GroupElement(self.spec, coords, renormalize=False)

    def ravel(self) -> "GroupElement":
        return self.reshape((self.size,))

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return multiply(self, other)

    def inv(self) -> "GroupElement":
        return inverse(self)

    def __repr__(self):
        if self.batch_shape:
            return f"GroupElement({self.spec}, batch_shape={self.batch_shape})"
        return f"GroupElement({self.spec}, {[c.tolist() for c in self.coords]})"

    # serialization ---------------------------------------------------------
    def to_json(self):
        if self.batch_shape:
            return [self[i].to_json() for i in range(len(self))]
        out = []
        for kind, c in zip(self.spec.factors, self.coords):
            if kind is FactorKind.TORUS:
                out.append({"z": [float(c.real), float(c.imag)]})
            else:
                out.append({"m": [[[float(v.real), float(v.imag)] for v in row] for row in c]})
        return {"coords": out}

    @classmethod
    def from_json(cls, spec: GroupSpec, obj) -> "GroupElement":
        if isinstance(obj, list):
            return cls.stack([cls.from_json(spec, o) for o in obj])
        try:
            raw = obj["coords"]
            coords = []
            for kind, c in zip(spec.factors, raw):
                if kind is FactorKind.TORUS:
                    coords.append(_json_complex(c["z"]))
                else:
                    coords.append(np.array([[_json_complex(v) for v in row] for row in c["m"]]))
        except (KeyError, TypeError, IndexError) as exc:
            raise InputError(f"invalid group element {obj!r}: {exc}") from exc
        return cls(spec, coords)


def _json_complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(float(v[0]), float(v[1]))
    return complex(v)


def _check_same(a: GroupSpec, b: GroupSpec):
    if a != b:
        raise SpecMismatchError(f"group spec mismatch: {a} vs {b}")


def multiply(g: GroupElement, h: GroupElement) -> GroupElement:
    _check_same(g.spec, h.spec)
    coords = []
    for kind, a, b in zip(g.spec.factors, g.coords, h.coords):
        coords.append(a * b if kind is FactorKind.TORUS else a @ b)
    return GroupElement(g.spec, coords, renormalize=True)


def inverse(g: GroupElement) -> GroupElement:
    coords = []
    for kind, c in zip(g.spec.factors, g.coords):
        if kind is FactorKind.TORUS:
            coords.append(1.0 / c)
        else:
            adj = np.empty_like(c)
            adj[..., 0, 0] = c[..., 1, 1]
            adj[..., 1, 1] = c[..., 0, 0]
            adj[..., 0, 1] = -c[..., 0, 1]
            adj[..., 1, 0] = -c[..., 1, 0]
            coords.append(adj)
    return GroupElement(g.spec, coords, renormalize=False)


def _sl2_s(m):
    # F - 2 = |a - conj d|^2 + |b + conj c|^2 for det 1, avoiding cancellation near K
    a, b, c, d = m[..., 0, 0], m[..., 0, 1], m[..., 1, 0], m[..., 1, 1]
    delta = np.abs(a - np.conj(d)) ** 2 + np.abs(b + np.conj(c)) ** 2
    return 0.5 * np.log1p(0.5 * delta + np.sqrt(delta + 0.25 * delta * delta))


def cartan(g: GroupElement) -> np.ndarray:
    """Cartan coordinates, shape ``batch + (n_factors,)``."""
    parts = []
    for kind, c in zip(g.spec.factors, g.coords):
        parts.append(np.log(np.abs(c)) if kind is FactorKind.TORUS else _sl2_s(c))
    return np.stack(parts, axis=-1)


def radial(g: GroupElement) -> np.ndarray:
    """Radial part per factor, shape ``batch + (n_factors,)``; all entries >= 0."""
    return np.abs(cartan(g))


def polar_split(g: GroupElement):
    """Return ``(k, p)`` with ``g = k p``, ``k`` in the maximal compact and ``p`` positive."""
    ks, ps = [], []
    for kind, c in zip(g.spec.factors, g.coords):
        if kind is FactorKind.TORUS:
            r = np.abs(c)
            ks.append(c / r)
            ps.append(r.astype(complex))
        else:
            u, sig, vh = np.linalg.svd(c)
            ks.append(u @ vh)
            v = np.conj(np.swapaxes(vh, -1, -2))
            ps.append((v * sig[..., None, :]) @ vh)
    return (GroupElement(g.spec, ks, renormalize=False),
            GroupElement(g.spec, ps, renormalize=False))


# SU(2) helpers ---------------------------------------------------------------

def euler_su2(alpha, beta, gamma) -> np.ndarray:
    """``Rz(alpha) Ry(beta) Rz(gamma)`` with ``Rz(phi) = diag(e^{-i phi/2}, e^{i phi/2})``."""
    alpha, beta, gamma = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (alpha, beta, gamma)))
    cb, sb = np.cos(beta / 2), np.sin(beta / 2)
    ep = np.exp(-0.5j * (alpha + gamma))
    em = np.exp(-0.5j * (alpha - gamma))
    m = np.empty(alpha.shape + (2, 2), dtype=complex)
    m[..., 0, 0] = ep * cb
    m[..., 0, 1] = -em * sb
    m[..., 1, 0] = np.conj(em) * sb
    m[..., 1, 1] = np.conj(ep) * cb
    return m


def random_su2(rng: np.random.Generator, shape=()) -> np.ndarray:
    q = rng.standard_normal(tuple(shape) + (4,))
    q /= np.linalg.norm(q, axis=-1, keepdims=True)
    alpha = q[..., 0] + 1j * q[..., 1]
    beta = q[..., 2] + 1j * q[..., 3]
    m = np.empty(tuple(shape) + (2, 2), dtype=complex)
    m[..., 0, 0] = alpha
    m[..., 0, 1] = -np.conj(beta)
    m[..., 1, 0] = beta
    m[..., 1, 1] = np.conj(alpha)
    return m


def sample_compact(spec: GroupSpec, rng: np.random.Generator, shape=()) -> GroupElement:
    coords = []
    for kind in spec.factors:
        if kind is FactorKind.TORUS:
            coords.append(np.exp(1j * rng.uniform(0.0, 2 * np.pi, shape)))
        else:
            coords.append(random_su2(rng, shape))
    return GroupElement(spec, coords, renormalize=False)


def sample_element(spec: GroupSpec, seed: int, radius: float = 1.0, size=None) -> GroupElement:
    """Reproducible random element(s) with every radial component ``<= radius``.

    Torus factors draw ``log|z|`` uniformly from ``[-radius, radius]``; SL2
    factors draw ``k1 diag(e^s, e^-s) k2`` with Haar-random ``k1, k2`` and ``s``
    uniform in ``[0, radius]``.
    """
    if radius < 0:
        raise InputError("radius must be nonnegative")
    rng = np.random.default_rng(seed)
    shape = () if size is None else ((size,) if np.isscalar(size) else tuple(size))
    coords = []
    for kind in spec.factors:
        if kind is FactorKind.TORUS:
            t = rng.uniform(-radius, radius, shape)
            coords.append(np.exp(t + 1j * rng.uniform(0.0, 2 * np.pi, shape)))
        else:
            k1 = random_su2(rng, shape)
            k2 = random_su2(rng, shape)
            s = rng.uniform(0.0, radius, shape)
            a = np.zeros(shape + (2, 2), dtype=complex)
            a[..., 0, 0] = np.exp(s)
            a[..., 1, 1] = np.exp(-s)
            coords.append(k1 @ a @ k2)
    return GroupElement(spec, coords, renormalize=True)


# Lie algebra -----------------------------------------------------------------

_H = np.array([[1, 0], [0, -1]], dtype=complex)
_E = np.array([[0, 1], [0, 0]], dtype=complex)
_F = np.array([[0, 0], [1, 0]], dtype=complex)
SL2_BASIS = (("H", _H), ("E", _E), ("F", _F))


class LieAlgElement:
    """Element of the Lie algebra.

    Torus parts are the complex coefficient of ``z d/dz``; SL2 parts are
    traceless 2x2 complex matrices.
    """

    __slots__ = ("spec", "parts")

    def __init__(self, spec: GroupSpec, parts: Sequence):
        if len(parts) != spec.n_factors:
            raise SpecMismatchError("wrong number of Lie algebra components")
        out = []
        for kind, p in zip(spec.factors, parts):
            if kind is FactorKind.TORUS:
                out.append(complex(p))
            else:
                p = np.array(p, dtype=complex)
                if p.shape != (2, 2):
                    raise InputError("SL2 Lie algebra part must be 2x2")
                if abs(np.trace(p)) > EPS_DET:
                    raise InputError("SL2 Lie algebra part must be traceless")
                p.setflags(write=False)
                out.append(p)
        object.__setattr__(self, "spec", spec)
        object.__setattr__(self, "parts", tuple(out))

    def __setattr__(self, name, value):
        raise AttributeError("LieAlgElement is immutable")

    def __mul__(self, c) -> "LieAlgElement":
        return LieAlgElement(self.spec, [c * p for p in self.parts])

    __rmul__ = __mul__

    def __add__(self, other: "LieAlgElement") -> "LieAlgElement":
        _check_same(self.spec, other.spec)
        return LieAlgElement(self.spec, [a + b for a, b in zip(self.parts, other.parts)])

    def __repr__(self):
        return f"LieAlgElement({self.spec}, {self.parts!r})"


def lie_basis(spec: GroupSpec) -> list:
    """Global basis: one generator per torus factor, then ``H, E, F`` per SL2 factor."""
    basis = []
    zero = [0.0 if k is FactorKind.TORUS else np.zeros((2, 2)) for k in spec.factors]
    for i, kind in enumerate(spec.factors):
        if kind is FactorKind.TORUS:
            parts = list(zero)
            parts[i] = 1.0
            basis.append(LieAlgElement(spec, parts))
        else:
            for _, mat in SL2_BASIS:
                parts = list(zero)
                parts[i] = mat
                basis.append(LieAlgElement(spec, parts))
    return basis


def lie_basis_names(spec: GroupSpec) -> list:
    names = []
    for i, kind in enumerate(spec.factors, start=1):
        if kind is FactorKind.TORUS:
            names.append(f"Z{i}")
        else:
            names.extend(f"{n}{i}" for n, _ in SL2_BASIS)
    return names


def exp_lie(X: LieAlgElement, t: float = 1.0) -> GroupElement:
    """``exp(tX)``; closed form ``cosh(mu) I + sinh(mu)/mu X`` for traceless 2x2."""
    coords = []
    for kind, p in zip(X.spec.factors, X.parts):
        if kind is FactorKind.TORUS:
            coords.append(np.exp(t * p))
        else:
            y = t * p
            mu = np.lib.scimath.sqrt(y[0, 0] ** 2 + y[0, 1] * y[1, 0])
            shc = 1.0 + mu * mu / 6.0 if abs(mu) < 1e-8 else np.sinh(mu) / mu
            coords.append(np.cosh(mu) * np.eye(2) + shc * y)
    return GroupElement(X.spec, coords, renormalize=True)
