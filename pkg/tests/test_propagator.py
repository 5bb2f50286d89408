import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import analytic

from threadscf import ScalarField, make_grid
from threadscf.domain import DIRICHLET
from threadscf.errors import ConfigError, DivergenceError, GridError, ZeroPartitionError
from threadscf.propagator import (
    ContourSchedule,
    build_propagator,
    compose,
    density_single,
    diagonal,
    evolve_slice,
    log_partition_function,
    partition_function,
)
from threadscf.scf import PotentialSpec, external_potential


def zero_field(grid):
    return ScalarField(grid, np.zeros(grid.shape))


def test_slice_uniform_decay(periodic_line):
    g = periodic_line
    q = ScalarField(g, np.ones(g.shape))
    w = ScalarField(g, np.ones(g.shape))
    out = evolve_slice(q, w, 0.1)
    assert np.allclose(out.values, math.exp(-0.1), atol=1e-12)
    assert abs(out.values[0] - 0.904837) < 1e-6


def test_slice_gaussian_variance_grows(periodic_line):
    g = periodic_line
    x = g.axes[0]
    q = ScalarField(g, np.exp(-x**2 / 2) / math.sqrt(2 * math.pi))
    out = evolve_slice(q, zero_field(g), 0.5).values
    mass = np.sum(out * g.weights)
    var = np.sum(out * g.weights * x**2) / mass
    assert var == pytest.approx(1.5, abs=1e-10)
    assert mass == pytest.approx(1.0, abs=1e-12)


def test_slice_zero_step_is_identity(periodic_line):
    q = ScalarField(periodic_line, np.cos(periodic_line.axes[0]) ** 2)
    assert evolve_slice(q, zero_field(periodic_line), 0.0) is q
    with pytest.raises(ConfigError):
        evolve_slice(q, zero_field(periodic_line), -0.1)


def test_slice_grid_mismatch(periodic_line):
    other = make_grid("cartesian-1d", 20.0, 256)
    with pytest.raises(GridError):
        evolve_slice(zero_field(periodic_line), zero_field(other), 0.1)


def test_schedule_invariants():
    s = ContourSchedule(2.0, 400)
    assert s.ds * s.slices == pytest.approx(2.0)
    assert ContourSchedule.default(0.1).slices == 64
    assert ContourSchedule.default(1.0).slices == 200
    with pytest.raises(ConfigError):
        ContourSchedule(1.0, 8)
    with pytest.raises(ConfigError):
        ContourSchedule(-1.0, 64)


def test_stiff_fields_get_more_slices(harmonic_line):
    # spread of x**2/2 on [-10, 10] is 50
    s = ContourSchedule.for_field(harmonic_line.values, 1.0)
    assert s.slices >= 50 / 0.005


def test_free_kernel_diagonal(periodic_line):
    p = build_propagator(zero_field(periodic_line), 1.0)
    d = diagonal(p).values
    assert np.max(np.abs(d - 0.398942)) <= 1e-4
    assert np.max(np.abs(d - analytic.heat_kernel_diagonal(1.0))) <= 1e-10


def test_harmonic_kernel_matches_mehler(harmonic_line):
    p = build_propagator(harmonic_line, 1.0)
    x = harmonic_line.grid.axes[0]
    assert abs(diagonal(p).at(0.0) - 0.368013) <= 1e-3
    ref = analytic.mehler(x[:, None], x[None, :], 1.0)
    assert np.max(np.abs(p.values - ref)) <= 1e-6


def test_kernel_symmetric_and_positive(harmonic_line):
    p = build_propagator(harmonic_line, 1.0)
    k = p.values
    assert np.max(np.abs(k - k.T)) / np.max(k) <= 1e-8
    assert np.min(k) >= 0


def test_divergence_is_reported():
    g = make_grid("cartesian-1d", 10.0, 32)
    w = ScalarField(g, np.full(g.shape, -1e5))
    with pytest.raises(DivergenceError):
        build_propagator(w, ContourSchedule(1.0, 16))


def test_two_dimensional_kernels_refused():
    g = make_grid("cartesian-2d", 10.0, 16)
    with pytest.raises(GridError):
        build_propagator(zero_field(g), 1.0)


def test_compose_free(periodic_line):
    p = build_propagator(zero_field(periodic_line), 1.0)
    d = diagonal(compose(p, p)).values
    assert np.max(np.abs(d - 0.282095)) <= 1e-4


def test_compose_with_short_contour(harmonic_line):
    p = build_propagator(harmonic_line, 1.0)
    eps = build_propagator(harmonic_line, ContourSchedule(1e-9, 16))
    assert np.max(np.abs(compose(p, eps).values - p.values)) / np.max(p.values) <= 1e-6


def test_compose_harmonic_partition(harmonic_line):
    p = build_propagator(harmonic_line, 1.0)
    p2 = compose(p, p)
    assert p2.beta == 2.0
    assert abs(partition_function(p2) - 0.425459) <= 1e-3
    assert abs(partition_function(p2) - analytic.harmonic_q(2.0)) <= 1e-6
    direct = build_propagator(harmonic_line, 2.0)
    assert np.max(np.abs(diagonal(p2).values - diagonal(direct).values)) <= 1e-6


def test_compose_grid_mismatch(harmonic_line, periodic_line):
    a = build_propagator(harmonic_line, 0.5)
    b = build_propagator(zero_field(periodic_line), 0.5)
    with pytest.raises(GridError):
        compose(a, b)


def test_partition_functions():
    harm = external_potential(PotentialSpec("harmonic"), make_grid("cartesian-1d", 20.0, 256))
    assert abs(partition_function(build_propagator(harm, 1.0)) - 0.959508) <= 1e-3
    box = zero_field(make_grid("cartesian-1d", 1.0, 128, DIRICHLET))
    qbox = partition_function(build_propagator(box, 1.0))
    assert abs(qbox / 0.007192 - 1) <= 0.02
    assert abs(qbox / analytic.box_q(1.0, 1.0) - 1) <= 1e-6
    free = zero_field(make_grid("cartesian-1d", 10.0, 128))
    assert abs(partition_function(build_propagator(free, 1.0)) - 3.98942) <= 1e-3


def test_large_beta_does_not_overflow():
    g = make_grid("radial-3d", 20.0, 128)
    w = external_potential(PotentialSpec("coulomb-radial", Z=1), g)
    p = build_propagator(w, 2000.0)
    # Q ~ exp(beta/2) is far beyond double range
    assert log_partition_function(p) == pytest.approx(1000.0, rel=1e-2)
    assert np.all(np.isfinite(p.kernel))


def test_density_normalization(harmonic_line):
    p = build_propagator(harmonic_line, 1.0)
    for n_part in (1, 2, 3.5):
        assert abs(density_single(p, n_part).integrate() - n_part) <= 1e-10
    with pytest.raises(ConfigError):
        density_single(p, 0.5)


def test_density_ground_state_limits(harmonic_line):
    p = build_propagator(harmonic_line, 20.0)
    assert abs(density_single(p, 1).at(0.0) - 0.564190) <= 1e-3
    g = make_grid("radial-3d", 20.0, 512)
    w = external_potential(PotentialSpec("coulomb-radial", Z=1), g)
    n1 = density_single(build_propagator(w, 40.0), 1).at(1.0)
    assert abs(n1 / 0.043064 - 1) <= 1e-2


def test_zero_partition_is_reported():
    g = make_grid("cartesian-1d", 10.0, 32)
    w = ScalarField(g, np.full(g.shape, 800.0))
    with pytest.raises(ZeroPartitionError):
        density_single(build_propagator(w, 1.0), 1)


def test_second_order_convergence(harmonic_line):
    x = harmonic_line.grid.axes[0]
    ref = analytic.mehler(x, x, 1.0)
    errs = [np.max(np.abs(np.diagonal(build_propagator(
        harmonic_line, ContourSchedule(1.0, s)).values) - ref)) for s in (64, 128, 256)]
    for a, b in zip(errs, errs[1:]):
        assert 3.5 <= a / b <= 4.5


def test_uncertainty_product(periodic_line):
    # free kernel column: spatial spread sqrt(beta/m), mode spread sqrt(m/beta)
    g = periodic_line
    beta = 1.0
    p = build_propagator(zero_field(g), beta)
    col = p.values[:, g.size // 2]
    x = g.axes[0]
    w = col * g.weights
    sx = math.sqrt(np.sum(w * x**2) / np.sum(w))
    modes = np.abs(np.fft.fft(col))
    k = g.wavenumbers(0)
    sk = math.sqrt(np.sum(modes * k**2) / np.sum(modes))
    assert sx == pytest.approx(math.sqrt(beta), rel=1e-6)
    assert abs(sx * sk - 1) <= 1e-3


@settings(max_examples=15, deadline=None)
@given(coeffs=st.lists(st.floats(-2.0, 2.0), min_size=3, max_size=3),
       beta=st.floats(0.15, 3.0))
def test_symmetry_and_positivity_for_smooth_fields(coeffs, beta):
    # beta * kmax**2 / 2 > 20 keeps the grid ringing below the clipping floor
    g = make_grid("cartesian-1d", 12.0, 64, DIRICHLET)
    x = g.axes[0]
    a, b, c = coeffs
    w = ScalarField(g, a * np.cos(x) + b * np.sin(x / 2) + c * np.exp(-x**2))
    k = build_propagator(w, beta).kernel
    assert np.max(np.abs(k - k.T)) <= 1e-8 * np.max(k)
    assert np.min(k) >= 0


def test_underresolved_kernel_rings_visibly():
    g = make_grid("cartesian-1d", 12.0, 64, DIRICHLET)
    k = build_propagator(zero_field(g), 0.02).kernel
    assert np.min(k) < -1e-6 * np.max(k)
