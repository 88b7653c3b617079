"""Holomorphic irreducible representations of torus x SL2 products.

Conventions
-----------
* A torus factor with weight ``n`` acts by ``z -> z**n``.
* An SL2 factor with weight ``m`` acts on ``Sym^m C^2``.  The basis vector
  ``e_j`` (``j = 0..m``) is ``sqrt(C(m, j)) * u1**(m-j) * u2**j`` where
  ``u1, u2`` is the standard basis of ``C^2``.  This basis is orthonormal for
  the inner product that makes the restriction to SU(2) unitary, and the
  weight-1 representation is the identity map ``g -> g``.
* Multi-factor representations are Kronecker products in factor order
  (row-major: the first factor's index varies slowest).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from .errors import InputError, SpecMismatchError
from .groups import (FactorKind, GroupElement, GroupSpec, LieAlgElement, inverse,
                     lie_basis, SL2_BASIS)


@dataclass(frozen=True, order=False)
class IrrepLabel:
    spec: GroupSpec
    weights: tuple

    def __post_init__(self):
        w = tuple(int(x) for x in self.weights)
        if len(w) != self.spec.n_factors:
            raise SpecMismatchError(f"label needs {self.spec.n_factors} weights, got {len(w)}")
        for kind, x in zip(self.spec.factors, w):
            if kind is FactorKind.SL2 and x < 0:
                raise InputError("SL2 weights must be nonnegative")
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        d = 1
        for kind, x in zip(self.spec.factors, self.weights):
            if kind is FactorKind.SL2:
                d *= x + 1
        return d

    @property
    def shell(self) -> int:
        """Largest absolute weight; the cutoff at which the label first appears."""
        return max(abs(x) for x in self.weights)

    def is_trivial(self) -> bool:
        return all(x == 0 for x in self.weights)

    def to_json(self) -> dict:
        return {"weights": list(self.weights)}

    @classmethod
    def from_json(cls, spec: GroupSpec, obj) -> "IrrepLabel":
        return cls(spec, tuple(obj["weights"]))

    def __str__(self):
        return "(" + ",".join(str(x) for x in self.weights) + ")"


def enumerate_irreps(spec: GroupSpec, cutoff: int) -> list:
    """All labels with every weight bounded by ``cutoff`` in absolute value.

    Order is lexicographic in factor order; torus weights run ``-cutoff..cutoff``
    and SL2 weights ``0..cutoff``.
    """
    if cutoff < 0:
        raise InputError("cutoff must be >= 0")
    ranges = [range(-cutoff, cutoff + 1) if k is FactorKind.TORUS else range(cutoff + 1)
              for k in spec.factors]
    return [IrrepLabel(spec, w) for w in itertools.product(*ranges)]


@lru_cache(maxsize=None)
def _sym_scale(m: int):
    s = np.sqrt(np.array([comb(m, j) for j in range(m + 1)], dtype=float))
    return s[None, :] / s[:, None]


def sym_power(m: int, mats: np.ndarray) -> np.ndarray:
    """Matrix of ``Sym^m`` in the orthonormal monomial basis; ``mats`` is ``(..., 2, 2)``."""
    mats = np.asarray(mats, dtype=complex)
    batch = mats.shape[:-2]
    if m == 0:
        return np.ones(batch + (1, 1), dtype=complex)
    a, b, c, d = mats[..., 0, 0], mats[..., 0, 1], mats[..., 1, 0], mats[..., 1, 1]
    pa = [np.ones(batch, dtype=complex)]
    pb, pc, pd = list(pa), list(pa), list(pa)
    for _ in range(m):
        pa.append(pa[-1] * a)
        pb.append(pb[-1] * b)
        pc.append(pc[-1] * c)
        pd.append(pd[-1] * d)
    out = np.zeros(batch + (m + 1, m + 1), dtype=complex)
    # column j: (a u1 + c u2)^(m-j) (b u1 + d u2)^j expanded in u1^(m-i) u2^i
    for j in range(m + 1):
        for k in range(m - j + 1):
            left = comb(m - j, k) * pa[m - j - k] * pc[k]
            for l in range(j + 1):
                out[..., k + l, j] += left * (comb(j, l) * pb[j - l] * pd[l])
    return out * _sym_scale(m)


def sym_power_lie(m: int, x: np.ndarray) -> np.ndarray:
    """Derived representation of ``Sym^m`` at the 2x2 matrix ``x``."""
    x = np.asarray(x, dtype=complex)
    out = np.zeros((m + 1, m + 1), dtype=complex)
    for j in range(m + 1):
        out[j, j] = (m - j) * x[0, 0] + j * x[1, 1]
        if j < m:
            out[j + 1, j] = (m - j) * x[1, 0]
        if j > 0:
            out[j - 1, j] = j * x[0, 1]
    return out * _sym_scale(m)


def batched_kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    batch = np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    (p, q), (r, s) = a.shape[-2:], b.shape[-2:]
    out = a[..., :, None, :, None] * b[..., None, :, None, :]
    return out.reshape(batch + (p * r, q * s))


def _factor_matrix(kind, w, coord):
    if kind is FactorKind.TORUS:
        return (coord ** w if w >= 0 else (1.0 / coord) ** (-w))[..., None, None]
    return sym_power(w, coord)


def _check_label(label: IrrepLabel, g: GroupElement):
    if label.spec != g.spec:
        raise SpecMismatchError(f"label for {label.spec} evaluated on {g.spec}")


def rep_matrix(label: IrrepLabel, g: GroupElement) -> np.ndarray:
    """``pi(g)`` as a ``batch + (d, d)`` complex array."""
    _check_label(label, g)
    out = None
    for kind, w, coord in zip(label.spec.factors, label.weights, g.coords):
        m = _factor_matrix(kind, w, coord)
        out = m if out is None else batched_kron(out, m)
    return out


def rep_matrices(labels, g: GroupElement) -> dict:
    """``rep_matrix`` for many labels, sharing per-factor work."""
    cache = {}
    out = {}
    for label in labels:
        _check_label(label, g)
        mat = None
        for i, (kind, w) in enumerate(zip(label.spec.factors, label.weights)):
            key = (i, w)
            if key not in cache:
                cache[key] = _factor_matrix(kind, w, g.coords[i])
            mat = cache[key] if mat is None else batched_kron(mat, cache[key])
        out[label] = mat
    return out


def contragredient_matrix(label: IrrepLabel, g: GroupElement) -> np.ndarray:
    """``pi(g^-1)^T``."""
    return np.swapaxes(rep_matrix(label, inverse(g)), -1, -2)


def character(label: IrrepLabel, g: GroupElement):
    return np.trace(rep_matrix(label, g), axis1=-2, axis2=-1)


def rep_lie(label: IrrepLabel, X: LieAlgElement) -> np.ndarray:
    """Derived representation ``pi(X) = d/dt pi(exp tX)`` at ``t = 0``."""
    if label.spec != X.spec:
        raise SpecMismatchError("label and Lie algebra element belong to different groups")
    blocks = []
    for kind, w, p in zip(label.spec.factors, label.weights, X.parts):
        if kind is FactorKind.TORUS:
            blocks.append(np.array([[w * p]], dtype=complex))
        else:
            blocks.append(sym_power_lie(w, p))
    dims = [b.shape[0] for b in blocks]
    out = np.zeros((label.dim, label.dim), dtype=complex)
    for i, blk in enumerate(blocks):
        term = np.ones((1, 1), dtype=complex)
        for j, d in enumerate(dims):
            term = np.kron(term, blk if i == j else np.eye(d))
        out += term
    return out


@dataclass(frozen=True)
class InvariantOperator:
    """Invariant differential operator as a sum of ordered monomials.

    ``terms`` is a tuple of ``(coefficient, monomial)``; a monomial is a tuple of
    indices into :func:`~holofourier.groups.lie_basis`.  The monomial
    ``(i1, i2, ..., ir)`` is the composition ``X_i1 o X_i2 o ... o X_ir`` where,
    for ``side='left'`` (left-invariant), ``(X f)(g) = d/dt f(g exp(tX))`` and,
    for ``side='right'``, ``(X f)(g) = d/dt f(exp(tX) g)``.  The empty monomial
    is the identity operator.  Monomials are used as given, not symmetrized.
    """

    spec: GroupSpec
    terms: tuple
    side: str = "left"

    def __post_init__(self):
        if self.side not in ("left", "right"):
            raise InputError("side must be 'left' or 'right'")
        n = self.spec.lie_basis_size
        terms = []
        for c, mono in self.terms:
            mono = tuple(int(i) for i in mono)
            if any(i < 0 or i >= n for i in mono):
                raise InputError(f"monomial {mono} uses basis indices outside 0..{n - 1}")
            terms.append((complex(c), mono))
        object.__setattr__(self, "terms", tuple(terms))

    @property
    def order(self) -> int:
        return max((len(m) for _, m in self.terms), default=0)

    @classmethod
    def zero(cls, spec: GroupSpec, side="left"):
        return cls(spec, (), side)

    @classmethod
    def identity(cls, spec: GroupSpec, side="left"):
        return cls(spec, ((1.0, ()),), side)

    @classmethod
    def monomial(cls, spec: GroupSpec, indices, coefficient=1.0, side="left"):
        return cls(spec, ((coefficient, tuple(indices)),), side)

    @classmethod
    def casimir(cls, spec: GroupSpec, factor: int = 0, side="left"):
        """``H^2/2 + EF + FE`` on the SL2 factor at position ``factor``."""
        if spec.factors[factor] is not FactorKind.SL2:
            raise InputError("Casimir requires an SL2 factor")
        base = basis_offset(spec, factor)
        h, e, f = base, base + 1, base + 2
        return cls(spec, ((0.5, (h, h)), (1.0, (e, f)), (1.0, (f, e))), side)

    def to_json(self) -> dict:
        return {"side": self.side,
                "terms": [{"c": [c.real, c.imag], "mono": list(m)} for c, m in self.terms]}

    @classmethod
    def from_json(cls, spec: GroupSpec, obj) -> "InvariantOperator":
        try:
            terms = []
            for t in obj["terms"]:
                c = t["c"]
                c = complex(c[0], c[1]) if isinstance(c, (list, tuple)) else complex(c)
                terms.append((c, tuple(t["mono"])))
            return cls(spec, tuple(terms), obj.get("side", "left"))
        except (KeyError, TypeError) as exc:
            raise InputError(f"invalid operator description: {exc}") from exc


def basis_offset(spec: GroupSpec, factor: int) -> int:
    return sum(1 if k is FactorKind.TORUS else 3 for k in spec.factors[:factor])


def rep_operator(label: IrrepLabel, D: InvariantOperator) -> np.ndarray:
    """``pi(D)``, chosen so that ``(Df)^ = pi(D) f^`` (left) or ``f^ pi(D)`` (right).

    For a left monomial ``(i1..ir)`` this is ``pi(X_i1) ... pi(X_ir)``; for a
    right monomial the product is taken in reverse order.
    """
    if label.spec != D.spec:
        raise SpecMismatchError("label and operator belong to different groups")
    basis = lie_basis(label.spec)
    lie_mats = {}
    out = np.zeros((label.dim, label.dim), dtype=complex)
    for c, mono in D.terms:
        order = mono if D.side == "left" else tuple(reversed(mono))
        term = np.eye(label.dim, dtype=complex)
        for i in order:
            if i not in lie_mats:
                lie_mats[i] = rep_lie(label, basis[i])
            term = term @ lie_mats[i]
        out += c * term
    return out


__all__ = ["IrrepLabel", "InvariantOperator", "enumerate_irreps", "rep_matrix", "rep_matrices",
           "contragredient_matrix", "character", "rep_lie", "rep_operator", "sym_power",
           "sym_power_lie", "batched_kron", "basis_offset", "SL2_BASIS"]
