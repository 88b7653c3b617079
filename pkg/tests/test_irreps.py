import itertools
from functools import reduce

import numpy as np
import pytest
from hypothesis import given, strategies as st

from holofourier import (GroupElement, GroupSpec, InputError, InvariantOperator, IrrepLabel, character,
                         enumerate_irreps, exp_lie, inverse, lie_basis, multiply, rep_lie, rep_matrix,
                         rep_operator, sample_element)
from holofourier.groups import random_su2
from holofourier.irreps import contragredient_matrix, rep_matrices

seeds = st.integers(0, 10_000)


def tensor_power_oracle(m, g):
    """Sym^m(g) as g^{(x)m} restricted to normalized symmetric tensors."""
    if m == 0:
        return np.ones((1, 1), dtype=complex)
    e = np.eye(2)
    basis = []
    for j in range(m + 1):
        v = np.zeros(2 ** m, dtype=complex)
        for pos in set(itertools.permutations([0] * (m - j) + [1] * j)):
            v += reduce(np.kron, [e[p] for p in pos])
        basis.append(v / np.linalg.norm(v))
    V = np.stack(basis, axis=1)
    big = reduce(np.kron, [g] * m)
    return V.conj().T @ big @ V


@pytest.mark.parametrize("m", [0, 1, 2, 3, 4])
def test_sym_power_matches_tensor_oracle(sl2, m):
    g = sample_element(sl2, m, 1.0)
    assert np.allclose(rep_matrix(IrrepLabel(sl2, (m,)), g), tensor_power_oracle(m, g.coords[0]),
                       atol=1e-12)


def test_enumeration_order_and_count(mixed):
    labels = enumerate_irreps(mixed, 2)
    assert len(labels) == 5 * 3
    assert labels[0].weights == (-2, 0) and labels[-1].weights == (2, 2)
    assert [lab.weights for lab in labels] == sorted(lab.weights for lab in labels)
    assert IrrepLabel(mixed, (1, 3)).dim == 4
    assert str(IrrepLabel(mixed, (-1, 2))) == "(-1,2)"


def test_label_validation(sl2, mixed):
    with pytest.raises(InputError):
        IrrepLabel(sl2, (-1,))
    with pytest.raises(InputError):
        IrrepLabel(mixed, (1,))
    with pytest.raises(InputError):
        enumerate_irreps(sl2, -1)


@pytest.mark.parametrize("names", [("torus",), ("sl2",), ("torus", "sl2"), ("sl2", "sl2")])
@given(seed=seeds)
def test_homomorphism(names, seed):
    spec = GroupSpec.of(*names)
    g, h = sample_element(spec, seed, 1.0), sample_element(spec, seed + 7, 1.0)
    for lab in enumerate_irreps(spec, 2):
        lhs = rep_matrix(lab, multiply(g, h))
        rhs = rep_matrix(lab, g) @ rep_matrix(lab, h)
        assert np.allclose(lhs, rhs, atol=1e-9 * (1 + np.abs(rhs).max()))


@given(seed=seeds)
def test_unitary_on_maximal_compact(seed):
    spec = GroupSpec.of("torus", "sl2")
    rng = np.random.default_rng(seed)
    k = GroupElement(spec, [np.exp(2j * np.pi * rng.random()), random_su2(rng)])
    for lab in enumerate_irreps(spec, 3):
        u = rep_matrix(lab, k)
        assert np.allclose(u @ u.conj().T, np.eye(lab.dim), atol=1e-12)


def test_character_is_trace_and_class_function(sl2):
    g, h = sample_element(sl2, 1, 1.0, size=5), sample_element(sl2, 2, 1.0, size=5)
    for lab in enumerate_irreps(sl2, 3):
        assert np.allclose(character(lab, multiply(g, h)), character(lab, multiply(h, g)))
        assert np.allclose(character(lab, g), np.trace(rep_matrix(lab, g), axis1=-2, axis2=-1))


def test_character_on_cartan(sl2):
    s = 0.4
    a = GroupElement.from_cartan(sl2, [s])
    for m in range(5):
        expected = sum(np.exp((m - 2 * j) * s) for j in range(m + 1))
        assert np.isclose(character(IrrepLabel(sl2, (m,)), a), expected)


def test_contragredient(mixed):
    g = sample_element(mixed, 3, 1.0)
    lab = IrrepLabel(mixed, (2, 2))
    assert np.allclose(contragredient_matrix(lab, g).T @ rep_matrix(lab, g), np.eye(lab.dim))


def test_rep_matrices_batch_matches_single(mixed):
    g = sample_element(mixed, 4, 1.0, size=3)
    labels = enumerate_irreps(mixed, 2)
    many = rep_matrices(labels, g)
    for lab in labels:
        assert np.array_equal(many[lab], rep_matrix(lab, g))


@pytest.mark.parametrize("names", [("torus",), ("sl2",), ("torus", "sl2")])
def test_rep_lie_is_derivative(names):
    spec = GroupSpec.of(*names)
    eps = 1e-6
    for X in lie_basis(spec):
        for lab in enumerate_irreps(spec, 2):
            fd = (rep_matrix(lab, exp_lie(X, eps)) - rep_matrix(lab, exp_lie(X, -eps))) / (2 * eps)
            assert np.allclose(fd, rep_lie(lab, X), atol=1e-7)


@pytest.mark.parametrize("m", range(5))
def test_casimir_eigenvalue(sl2, m):
    lab = IrrepLabel(sl2, (m,))
    P = rep_operator(lab, InvariantOperator.casimir(sl2))
    assert np.allclose(P, (m * m / 2 + m) * np.eye(m + 1), atol=1e-12)


def test_right_operator_reverses_product(sl2):
    lab = IrrepLabel(sl2, (2,))
    X = lie_basis(sl2)
    left = rep_operator(lab, InvariantOperator.monomial(sl2, (1, 2)))
    right = rep_operator(lab, InvariantOperator.monomial(sl2, (1, 2), side="right"))
    assert np.allclose(left, rep_lie(lab, X[1]) @ rep_lie(lab, X[2]))
    assert np.allclose(right, rep_lie(lab, X[2]) @ rep_lie(lab, X[1]))


def test_operator_json_roundtrip(mixed):
    D = InvariantOperator(mixed, ((2.0, (0, 0)), (1j, (1, 3)), (0.5, ())), side="right")
    assert InvariantOperator.from_json(mixed, D.to_json()) == D
    assert D.order == 2
    with pytest.raises(InputError):
        InvariantOperator.monomial(mixed, (9,))
    with pytest.raises(InputError):
        InvariantOperator.from_json(mixed, {"terms": [{"mono": [0]}]})


def test_inverse_gives_inverse_matrix(sl2):
    g = sample_element(sl2, 9, 1.0)
    lab = IrrepLabel(sl2, (3,))
    assert np.allclose(rep_matrix(lab, inverse(g)) @ rep_matrix(lab, g), np.eye(4), atol=1e-10)
