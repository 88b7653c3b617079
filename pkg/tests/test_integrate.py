import numpy as np
import pytest
from scipy.integrate import quad

from holofourier import (GaussianRadial, GridConfig, GroupElement, InputError, IrrepLabel,
                         g_grid, integrate, k_grid, kk_grid, radial_grid,
                         rep_matrix)
from holofourier.errors import NonFiniteError
from holofourier.integrate import factor_resolutions, materialize, pairwise_sum


def test_pairwise_sum_matches_sum(rng):
    x = rng.normal(size=(1001, 3))
    assert np.allclose(pairwise_sum(x), x.sum(axis=0))
    assert pairwise_sum(np.zeros((0, 2))).shape == (2,)


@pytest.mark.parametrize("m", range(4))
def test_su2_rule_schur_orthogonality(sl2, m):
    kg = k_grid(sl2, 6)
    assert np.isclose(kg.weights.sum(), 1.0)
    lab = IrrepLabel(sl2, (m,))
    P = rep_matrix(lab, kg.nodes).reshape(len(kg), -1)
    gram = (P * kg.weights[:, None]).T @ P.conj()
    assert np.allclose(gram, np.eye((m + 1) ** 2) / (m + 1), atol=1e-13)


def test_torus_rule_orthogonality(torus):
    kg = k_grid(torus, 8)
    z = kg.nodes.coords[0]
    for n in range(-7, 8):
        assert np.isclose(np.sum(kg.weights * z ** n), float(n == 0), atol=1e-14)


def test_kk_grid_mass(mixed):
    g = kk_grid(mixed, 3)
    assert len(g) == len(k_grid(mixed, 3)) ** 2
    assert np.isclose(g.weights.sum(), 1.0)


def test_k_grid_rejects_low_resolution(sl2):
    with pytest.raises(InputError):
        k_grid(sl2, 1)


@pytest.mark.parametrize("cut", [1.0, 3.0])
def test_torus_grid_mass_against_quad(torus, cut):
    mu = GaussianRadial(torus, 1.0)
    grid = g_grid(torus, mu, radial_cut=cut, resolution=8)
    ref = quad(lambda t: 2 * np.pi * np.exp(-t * t), -cut, cut)[0]
    assert np.isclose(grid.total_weight(), ref, rtol=1e-12)


@pytest.mark.parametrize("tau", [0.5, 1.0, 2.0])
def test_sl2_grid_mass_against_quad(sl2, tau):
    mu = GaussianRadial(sl2, tau)
    grid = g_grid(sl2, mu, resolution=4)
    ref = quad(lambda t: np.exp(2 * np.log(np.sinh(2 * t)) - t * t / tau), 0, 60, limit=200)[0]
    assert np.isclose(grid.total_weight(), ref, rtol=1e-10)


def test_radial_rule_matches_grid_for_bi_invariant(sl2):
    mu = GaussianRadial(sl2, 1.0)
    grid = g_grid(sl2, mu, radial_cut=3.0, resolution=4, radial_nodes=16)
    lab = IrrepLabel(sl2, (2,))
    f = lambda g: np.sum(np.abs(rep_matrix(lab, g)) ** 2, axis=(-2, -1))
    direct = integrate(f, grid)
    t = grid.radial_nodes
    a = GroupElement.from_cartan(sl2, t)
    assert np.isclose(direct, np.sum(grid.radial_weights * f(a)), rtol=1e-12)


def test_alpha_reduced_right_factor_matches_full_rule(sl2):
    """The k2 rule without alpha integrates non-invariant integrands exactly."""
    mu = GaussianRadial(sl2, 1.0)
    res = 4
    grid = g_grid(sl2, mu, radial_cut=2.0, resolution=res, radial_nodes=12)
    rg = radial_grid(sl2, mu, 2.0, 12)
    kg = k_grid(sl2, res)
    lab = IrrepLabel(sl2, (2,))
    f = lambda g: rep_matrix(lab, g)[..., 0, 1] * np.conj(rep_matrix(lab, g)[..., 1, 1]) + 0.3 * g.coords[0][..., 0, 0] ** 2

    full = 0.0
    a = GroupElement.from_cartan(sl2, rg.nodes)
    k = kg.nodes.coords[0]
    for i in range(len(rg)):
        mid = k @ a.coords[0][i]
        for j in range(len(kg)):
            g = GroupElement(sl2, [mid @ k[j]], renormalize=False)
            full += rg.weights[i] * kg.weights[j] * np.sum(kg.weights * f(g))
    assert np.isclose(integrate(f, grid), full, rtol=1e-11, atol=1e-11)


def test_lazy_nodes_match_materialized(mixed):
    mu = GaussianRadial(mixed, 1.0)
    grid = g_grid(mixed, mu, radial_cut=1.0, resolution=(4, 3), radial_nodes=4)
    full = materialize(grid.nodes)
    part = grid.nodes[17:29]
    for a, b in zip(full.coords, part.coords):
        assert np.array_equal(a[17:29], b)
    assert np.isclose(grid.weights.sum(), grid.total_weight())
    assert len(grid) == (4 * 4) * 4 * (3 * 3 * 6) * (1 * 3 * 6)


def test_factor_resolutions(mixed):
    assert factor_resolutions(mixed, 5) == (5, 5)
    assert factor_resolutions(mixed, (8, 3)) == (8, 3)
    with pytest.raises(InputError):
        factor_resolutions(mixed, (8,))


def test_product_grid_integrates_matrix_coefficients(mixed):
    mu = GaussianRadial(mixed, 1.0)
    grid = g_grid(mixed, mu, resolution=(8, 3), radial_nodes=32, max_weight=1)
    lab = IrrepLabel(mixed, (1, 1))
    f = lambda g: np.abs(rep_matrix(lab, g)[..., 0, 1]) ** 2
    C = np.exp(mu.log_normalization(lab))
    assert np.isclose(integrate(f, grid).real, C / lab.dim ** 2, rtol=1e-6)


def test_shell_breakpoints_split_segments(torus):
    from holofourier.measures import ShellStep
    m = ShellStep(torus, 0.5, (0.0, -1.0, -3.0), 0.0, 0.0, 6)
    rg = radial_grid(torus, m, 1.5, 4)
    assert len(rg) == 2 * 3 * 4


def test_nonfinite_integrand_reported(torus):
    grid = g_grid(torus, GaussianRadial(torus, 1.0), radial_cut=1.0, resolution=4, radial_nodes=4)
    with pytest.raises(NonFiniteError):
        integrate(lambda g: np.full(len(g), np.nan), grid)


def test_grid_config_validation():
    assert GridConfig.from_json({"resolution": 8}).resolution == 8
    with pytest.raises(InputError):
        GridConfig.from_json({"nodes": 3})
    with pytest.raises(InputError):
        GridConfig.from_json({"resolution": 1})


def test_grid_csv_header(torus):
    grid = g_grid(torus, GaussianRadial(torus, 1.0), radial_cut=1.0, resolution=4, radial_nodes=2)
    lines = grid.to_csv().splitlines()
    assert lines[0] == "z1_re,z1_im,weight"
    assert len(lines) == 1 + len(grid)


def test_default_cut_tail_is_small(sl2):
    grid = g_grid(sl2, GaussianRadial(sl2, 1.0), resolution=4, max_weight=3)
    assert grid.tail_estimate <= 1e-12 and not grid.warnings
    short = g_grid(sl2, GaussianRadial(sl2, 1.0), radial_cut=2.0, resolution=4, max_weight=3)
    assert short.warnings
