import numpy as np
import pytest

from holofourier import (ExponentialOverflowError, GaussianRadial, GroupElement, HoloFn, InputError,
                         InvariantOperator, IrrepLabel, character, class_expand, evolve, evolve_check,
                         g_grid, is_class_function, sample_element)
from holofourier.spectral import propagator, time_series_csv
from holofourier.transform import default_resolution


def _setup(spec, cutoff):
    mu = GaussianRadial(spec, 1.0)
    return mu, g_grid(spec, mu, resolution=default_resolution(spec, cutoff), max_weight=cutoff)


def test_class_function_detection(sl2):
    assert is_class_function(HoloFn("tr1^3", sl2), sl2).passed
    check = is_class_function(HoloFn("a1", sl2), sl2)
    assert not check and check.residual > 1e-3


def test_class_expand_recovers_characters(sl2):
    mu, grid = _setup(sl2, 3)
    chi = {m: IrrepLabel(sl2, (m,)) for m in range(4)}
    f = lambda g: 2 * character(chi[1], g) - 0.5j * character(chi[3], g)
    exp = class_expand(f, mu, 3, grid)
    assert np.isclose(exp[1], 2.0, atol=1e-10)
    assert np.isclose(exp[3], -0.5j, atol=1e-10)
    assert abs(exp[0]) < 1e-10 and abs(exp[2]) < 1e-10
    assert max(exp.scalar_residual.values()) < 1e-10
    assert exp.reconstruction_residual < 1e-9
    assert exp.to_json()["labels"][1]["a"] == pytest.approx([2.0, 0.0], abs=1e-10)


def test_class_expand_rejects_non_class(sl2):
    mu, grid = _setup(sl2, 1)
    with pytest.raises(InputError):
        class_expand(HoloFn("b1", sl2), mu, 1, grid)


def test_torus_heat_flow(torus):
    mu, grid = _setup(torus, 3)
    D = InvariantOperator(torus, ((1.0, (0, 0)),))
    state = evolve(HoloFn("z1 + 2*z1^-2", torus), D, [0.0, 0.5], mu, 3, grid)
    g = sample_element(torus, 0, 1.0, size=4)
    z = g.coords[0]
    for t in (0.0, 0.5, 0.3):
        assert np.allclose(state.evaluate(g, t), np.exp(t) * z + 2 * np.exp(4 * t) * z ** -2, atol=1e-10)
    assert max(state.growth_rates().values()) == pytest.approx(9.0)


@pytest.mark.parametrize("m", [1, 2])
def test_casimir_flow_scales_characters(sl2, m):
    mu, grid = _setup(sl2, 2)
    lab = IrrepLabel(sl2, (m,))
    state = evolve(lambda g: character(lab, g), InvariantOperator.casimir(sl2), [0.4], mu, 2, grid)
    g = sample_element(sl2, 5, 1.0, size=3)
    assert np.allclose(state.evaluate(g, 0.4), np.exp(0.4 * (m * m / 2 + m)) * character(lab, g),
                       rtol=1e-10)


def test_pde_residual(sl2):
    mu, grid = _setup(sl2, 2)
    D = InvariantOperator(sl2, ((1.0, (1,)), (0.5, (0, 0))))
    state = evolve(HoloFn("a1^2 + c1", sl2), D, [0.2], mu, 2, grid)
    g = sample_element(sl2, 2, 1.0, size=5)
    assert np.max(evolve_check(state, g, 0.2)) < 1e-4


def test_evolve_rejects_right_operator(torus):
    mu, grid = _setup(torus, 1)
    D = InvariantOperator(torus, ((1.0, (0,)),), side="right")
    with pytest.raises(InputError):
        evolve(HoloFn("z1", torus), D, [0.1], mu, 1, grid)


def test_propagator_overflow_names_label():
    with pytest.raises(ExponentialOverflowError, match=r"\(7\)"):
        propagator(np.array([[800.0]]), 1.0, label="(7)")
    assert np.allclose(propagator(np.array([[0.0, 1.0], [0.0, 0.0]]), 2.0), [[1, 2], [0, 1]])


def test_time_series_csv(torus):
    mu, grid = _setup(torus, 1)
    state = evolve(HoloFn("z1", torus), InvariantOperator(torus, ((1.0, (0, 0)),)), [0.0, 1.0], mu, 1, grid)
    text = time_series_csv(state, GroupElement(torus, [np.array([1.0, 2.0])]))
    lines = text.splitlines()
    assert lines[0] == "t,point_id,re,im,residual"
    assert len(lines) == 5
    t, pid, re, im, res = lines[3].split(",")
    assert float(t) == 1.0 and pid == "0" and np.isclose(float(re), np.e)
