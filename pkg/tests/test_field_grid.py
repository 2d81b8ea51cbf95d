import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ou_schro import gauss_calc as gc
from ou_schro.field_grid import (
    Field,
    dft_at,
    dft_lattice,
    gauge_phi_of_psi,
    gauge_psi_of_phi,
    lp_norm,
    make_grid,
    plain_l2_norm,
    read_csv,
    relative_l2_error,
    sample,
    weighted_l2_gamma_norm,
    write_csv,
)
from ou_schro.gauss_calc import GaussianExponential as G

PI = math.pi


def test_make_grid_examples():
    assert make_grid(1, 16, 8).spacing == 1.0
    assert make_grid(2, 64, 8).size == 4096
    with pytest.raises(ValueError, match="even"):
        make_grid(1, 15, 8)


@pytest.mark.parametrize("args", [(0, 16, 1), (4, 16, 1), (1, 16, 0), (1, 8, 1), (3, 512, 1)])
def test_make_grid_rejects(args):
    with pytest.raises(ValueError):
        make_grid(*args)


def test_axis_layout():
    g = make_grid(2, 16, 4)
    ax = g.axis()
    assert ax[0] == -4 and abs(ax[-1] - (4 - g.spacing)) < 1e-15
    pts = g.points()
    # last axis fastest
    assert pts[1, 0] == pts[0, 0] and pts[1, 1] > pts[0, 1]


def test_field_invariants():
    g = make_grid(1, 16, 4)
    with pytest.raises(ValueError):
        Field(g, np.zeros(15))
    with pytest.raises(FloatingPointError):
        Field(g, np.full(16, np.nan))
    f = Field(g, np.ones(16))
    with pytest.raises(ValueError):
        f.values[0] = 2


def test_sample_examples():
    g = make_grid(1, 128, 12)
    assert np.all(sample(lambda x: np.ones(len(x)), g).values == 1)
    x = g.axis()
    assert np.allclose(sample(G.radial(1, 1.0), g).values, np.exp(-x ** 2), rtol=1e-15, atol=0)
    chirped = sample(G.radial(1, 1 - 1j), g).values
    assert np.max(np.abs(np.abs(chirped) - np.exp(-x ** 2))) < 1e-15
    with pytest.raises(FloatingPointError):
        sample(G.radial(1, -20.0), g)


def test_gauge_examples():
    g = make_grid(1, 128, 12)
    psi = gauge_psi_of_phi(sample(lambda x: np.ones(len(x)), g))
    assert np.max(np.abs(psi.values - np.exp(-g.axis() ** 2 / 4))) < 1e-15
    f = sample(G.radial(1, 0.125), g)
    back = gauge_psi_of_phi(gauge_phi_of_psi(f))
    assert relative_l2_error(back, f) < 1e-13
    with pytest.raises(OverflowError):
        gauge_phi_of_psi(sample(lambda x: np.ones(len(x)), make_grid(1, 64, 60)))


def test_dft_examples():
    f = sample(G.radial(1, PI), make_grid(1, 256, 10))
    assert abs(dft_at(f, [0.0])[0] - 1) < 1e-10
    h = sample(G.radial(1, 0.25), make_grid(1, 256, 10))
    assert abs(dft_at(h, [0.5])[0] - math.sqrt(4 * PI) * math.exp(-PI ** 2)) < 1e-8
    z = Field(make_grid(1, 32, 4), np.zeros(32))
    assert np.all(dft_at(z, [0.0, 0.3]) == 0)


def test_dft_lattice_matches_pointwise():
    g = make_grid(2, 32, 5)
    f = sample(G(2, 0.7 - 0.2j, (0.1, -0.3j), 0), g)
    ax = [np.linspace(-0.5, 0.5, 5), np.linspace(-0.2, 0.4, 3)]
    mesh = np.stack([m.ravel() for m in np.meshgrid(*ax, indexing="ij")], axis=-1)
    assert np.max(np.abs(dft_lattice(f, ax) - dft_at(f, mesh))) < 1e-13


def test_dft_random_targets_vs_closed_form():
    rng = np.random.default_rng(7)
    grid = make_grid(1, 256, 12)
    # imaginary b keeps |g| centered, so the box edge sees the decay-rate tail
    for a in (0.125, 0.5 - 0.3j, 1 + 2j, 3.0):
        g = G(1, a, (0.3j,), 0.1)
        targets = rng.uniform(-1.5, 1.5, size=32)
        num = dft_at(sample(g, grid), targets)
        ref = gc.fourier_gaussian(g)(targets[:, None])
        assert relative_l2_error(Field(make_grid(1, 32, 1), num), ref) < 1e-8


def test_gamma_norm_examples():
    g = make_grid(1, 512, 12)
    one = sample(lambda x: np.ones(len(x)), g)
    assert abs(weighted_l2_gamma_norm(one, 0).value - (2 * PI) ** 0.25) < 1e-8
    phi = G.radial(1, 0.5)
    w = 0.4
    res = weighted_l2_gamma_norm(sample(phi, g), w)
    weighted = G.radial(1, phi.a - w)
    assert abs(res.value - gc.gamma_l2_norm(weighted)) < 1e-8 and not res.truncation_unsafe
    assert weighted_l2_gamma_norm(sample(phi, g), 0.75).truncation_unsafe


def test_gamma_norm_equals_flat_norm_of_psi():
    g = make_grid(1, 512, 12)
    f = sample(G.radial(1, 0.3 + 0.4j), g)
    lhs = weighted_l2_gamma_norm(f, 0).value
    assert abs(lhs - plain_l2_norm(gauge_psi_of_phi(f))) < 1e-10 * lhs


def test_lp_norm_examples():
    f = sample(G.radial(1, 1.0), make_grid(1, 512, 12))
    assert abs(lp_norm(f, 2) - (PI / 2) ** 0.25) < 1e-8
    assert lp_norm(f, math.inf) == 1
    assert abs(lp_norm(f, 1) - math.sqrt(PI)) < 1e-8
    with pytest.raises(ValueError):
        lp_norm(f, 0.5)


def test_csv_round_trip(tmp_path):
    g = make_grid(2, 16, 3)
    f = sample(G(2, 0.4 - 0.3j, (0.1j, 0.2), 0.05), g)
    path = tmp_path / "f.csv"
    write_csv(f, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "x1,x2,re,im" and len(lines) == g.size + 1
    assert np.array_equal(read_csv(path, g).values, f.values)


@settings(max_examples=25, deadline=None)
@given(st.complex_numbers(max_magnitude=3), st.complex_numbers(max_magnitude=3))
def test_dft_linear(alpha, beta):
    grid = make_grid(1, 64, 6)
    f = sample(G.radial(1, 1 + 1j), grid)
    g = sample(G(1, 0.5, (0.3,), 0), grid)
    t = np.linspace(-1, 1, 7)
    lhs = dft_at(alpha * f + beta * g, t)
    rhs = alpha * dft_at(f, t) + beta * dft_at(g, t)
    scale = max(1e-300, float(np.max(np.abs(rhs))), abs(alpha) + abs(beta))
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * scale


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 2.0), st.floats(-2.0, 2.0))
def test_gauge_round_trip(re_a, im_a):
    f = sample(G.radial(1, complex(re_a, im_a)), make_grid(1, 128, 8))
    assert relative_l2_error(gauge_phi_of_psi(gauge_psi_of_phi(f)), f) < 1e-13
