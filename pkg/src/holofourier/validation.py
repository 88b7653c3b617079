"""Input coercion and validation shared by the estimators and the CLI."""
from __future__ import annotations

import numbers

import numpy as np

from .errors import InputError, SpecMismatchError
from .expr import as_holofn
from .groups import FactorKind, GroupElement, GroupSpec
from .measures import MeasureSpec, measure_from_json


def check_group(group) -> GroupSpec:
    """Accept a GroupSpec, a factor name list, ``"torus,sl2"`` or a JSON dict."""
    if isinstance(group, GroupSpec):
        return group
    if isinstance(group, str):
        names = [s.strip() for s in group.replace("x", ",").split(",") if s.strip()]
        return GroupSpec.of(*names)
    if isinstance(group, dict):
        return GroupSpec.from_json(group)
    if isinstance(group, (list, tuple)):
        return GroupSpec.of(*group)
    raise InputError(f"cannot interpret {group!r} as a group")


def check_cutoff(cutoff) -> int:
    if isinstance(cutoff, bool) or not isinstance(cutoff, numbers.Integral) or cutoff < 0:
        raise InputError(f"cutoff must be a nonnegative integer, got {cutoff!r}")
    return int(cutoff)


def check_elements(X, spec: GroupSpec) -> GroupElement:
    """Coerce ``X`` into a batched GroupElement of ``spec``.

    Besides GroupElement instances this accepts, for all-torus groups, a
    complex array of shape ``(n,)`` (one factor) or ``(n, n_factors)``, and
    for a single SL2 factor an array of shape ``(n, 2, 2)``.
    """
    if isinstance(X, GroupElement):
        if X.spec != spec:
            raise SpecMismatchError(f"elements of {X.spec} passed for {spec}")
        return X if X.batch_shape else X.reshape((1,))
    arr = np.asarray(X, dtype=complex)
    if all(k is FactorKind.TORUS for k in spec.factors):
        if spec.n_factors == 1 and arr.ndim <= 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2 or arr.shape[1] != spec.n_factors:
            raise InputError(f"expected shape (n, {spec.n_factors}) for {spec}, got {arr.shape}")
        return GroupElement(spec, [arr[:, i] for i in range(spec.n_factors)])
    if spec.n_factors == 1:
        if arr.ndim == 2:
            arr = arr[None]
        if arr.ndim != 3 or arr.shape[1:] != (2, 2):
            raise InputError(f"expected shape (n, 2, 2) for {spec}, got {arr.shape}")
        return GroupElement(spec, [arr])
    raise InputError(f"pass GroupElement instances for mixed group {spec}")


def check_holofn(f, spec: GroupSpec):
    return as_holofn(f, spec)


def check_measure(measure, spec: GroupSpec) -> MeasureSpec:
    if isinstance(measure, MeasureSpec):
        if measure.spec != spec:
            raise SpecMismatchError("measure belongs to a different group")
        return measure
    if isinstance(measure, dict):
        return measure_from_json(spec, measure)
    raise InputError(f"cannot interpret {measure!r} as a measure")
