import math
from dataclasses import replace

import numpy as np
import pytest
from oracles import analytic

from threadscf import ScalarField, make_grid
from threadscf.domain import DIRICHLET
from threadscf.errors import ConfigError
from threadscf.propagator import build_propagator, diagonal
from threadscf.scf import (
    PotentialSpec,
    SCFConfig,
    conformational_free_energy,
    external_potential,
    forbidden_interval,
    forbidden_region_decay,
    hartree_potential,
    scf_solve,
)
from threadscf.spectral import solve_kohn_sham


@pytest.fixture(scope="module")
def hydrogen():
    g = make_grid("radial-3d", 20.0, 512)
    return scf_solve(SCFConfig(n_particles=1, beta=40.0), PotentialSpec("coulomb-radial"), g)


@pytest.fixture(scope="module")
def helium():
    g = make_grid("radial-3d", 10.0, 512)
    cfg = SCFConfig(n_particles=2, beta=40.0, backend="spectral")
    return scf_solve(cfg, PotentialSpec("coulomb-radial", Z=2), g)


def test_external_potentials():
    line = make_grid("cartesian-1d", 10.0, 64, DIRICHLET)
    step = external_potential(PotentialSpec("step-barrier", height=1.0, start=0.0), line)
    x = line.axes[0]
    assert np.all(step.values[x < 0] == 0) and np.all(step.values[x > 0] == 1)
    per = make_grid("cartesian-1d", 8.0, 64)
    harm = external_potential(PotentialSpec("harmonic"), per)
    assert harm.at(2.0) == pytest.approx(2.0)
    rad = make_grid("radial-3d", 10.0, 64)
    coul = external_potential(PotentialSpec("coulomb-radial", Z=1), rad)
    assert np.allclose(coul.values, -1 / rad.axes[0])
    well = external_potential(PotentialSpec("finite-well", depth=1, half_width=1), line)
    assert np.all(well.values[np.abs(x) < 1] == -1) and np.all(well.values[np.abs(x) > 1] == 0)
    soft = external_potential(PotentialSpec("soft-coulomb-1d", Z=1, softening=1), per)
    assert soft.at(0.0) == pytest.approx(-1.0)
    tab = external_potential(PotentialSpec("tabulated", values=tuple(range(64))), line)
    assert tab.values[10] == 10


def test_potential_validation():
    with pytest.raises(ConfigError):
        PotentialSpec("coulomb-radial", Z=0)
    with pytest.raises(ConfigError):
        PotentialSpec("gravity")
    with pytest.raises(ConfigError):
        PotentialSpec("step-barrier", height=-1)
    line = make_grid("cartesian-1d", 4.0, 32, DIRICHLET)
    with pytest.raises(ConfigError):
        external_potential(PotentialSpec("step-barrier", height=1, start=5.0), line)
    with pytest.raises(ConfigError):
        external_potential(PotentialSpec("finite-well", depth=1, half_width=3), line)
    with pytest.raises(ConfigError):
        external_potential(PotentialSpec("coulomb-radial"), line)


def test_hartree_of_hydrogen_density():
    g = make_grid("radial-3d", 20.0, 512)
    r = g.axes[0]
    vh = hartree_potential(ScalarField(g, analytic.hydrogen_density(r)))
    assert np.max(np.abs(vh.values - analytic.hydrogen_hartree(r))) <= 1e-4
    assert abs(vh.values[0] - 1.0) <= 1e-3
    assert abs(vh.at(5.0) - 0.19999) <= 1e-4
    assert abs(10.0 * vh.at(10.0) - 1.0) <= 1e-3


def test_hartree_linear_and_checked():
    g = make_grid("radial-3d", 10.0, 64)
    assert np.allclose(hartree_potential(ScalarField(g, np.zeros(64))).values, 0)
    with pytest.raises(ValueError):
        hartree_potential(ScalarField(g, -np.ones(64)))
    line = make_grid("cartesian-1d", 20.0, 128)
    x = line.axes[0]
    n = ScalarField(line, np.exp(-x**2) / math.sqrt(math.pi))
    v = hartree_potential(n, softening=1.0)
    # far away the soft kernel sees a point charge
    assert v.at(9.0) == pytest.approx(1 / math.sqrt(81 + 1), rel=2e-2)


def test_hydrogen_scf(hydrogen):
    assert hydrogen.converged and hydrogen.iterations == 1
    assert abs(hydrogen.energy.total + 0.5) <= 1e-3
    assert abs(hydrogen.density.integrate() - 1) <= 1e-8
    r = hydrogen.grid.axes[0]
    exact = analytic.hydrogen_density(r)
    assert np.max(np.abs(hydrogen.density.values - exact)) / exact.max() <= 1e-2
    # no Hartree for a single particle, so the total is the ideal term alone
    assert hydrogen.energy.total == pytest.approx(-hydrogen.log_q / 40.0)
    assert hydrogen.energy.hartree == 0.0


def test_helium_matches_hartree_fock(helium):
    from oracles.helium_rhf import helium_energy
    ref = helium_energy()
    assert abs(ref + 2.8617) <= 5e-5
    assert helium.converged
    assert abs(helium.energy.total - ref) <= 5e-3
    assert abs(helium.density.integrate() - 2) <= 1e-8
    assert helium.residuals[-1] <= helium.config.tolerance


def test_helium_residuals_monotone(helium):
    res = helium.residuals[5:]
    assert all(b < a for a, b in zip(res, res[1:]))


def test_breakdown_adds_up(helium):
    e = helium.energy
    parts = e.conformational + e.translational + e.external + e.hartree
    assert parts == pytest.approx(e.total, abs=1e-12)
    assert e.hartree > 0 and e.external < 0


def test_single_particle_in_box_converges_at_once():
    g = make_grid("cartesian-1d", 1.0, 64, DIRICHLET)
    for mixing in (0.05, 0.5, 1.0):
        st = scf_solve(SCFConfig(beta=1.0, mixing=mixing), PotentialSpec("box"), g)
        assert st.iterations == 1 and st.converged


def test_nonconvergence_is_flagged():
    g = make_grid("radial-3d", 10.0, 128)
    cfg = SCFConfig(n_particles=2, beta=20.0, max_iterations=3, backend="spectral")
    with pytest.warns(RuntimeWarning):
        st = scf_solve(cfg, PotentialSpec("coulomb-radial", Z=2), g)
    assert not st.converged and st.iterations == 3


def test_config_validation():
    for bad in ({"mixing": 0}, {"mixing": 1.5}, {"tolerance": 0}, {"max_iterations": 0},
                {"backend": "magic"}, {"pauli": "fermi"}, {"n_particles": 0},
                {"exchange_sign": 2}, {"exchange_sign": 1, "n_particles": 1}):
        with pytest.raises(ConfigError):
            SCFConfig(**bad)


def test_backends_agree():
    cases = [
        (make_grid("radial-3d", 20.0, 256), PotentialSpec("coulomb-radial"), 1),
        (make_grid("cartesian-1d", 20.0, 256, DIRICHLET),
         PotentialSpec("finite-well", depth=1, half_width=1), 1),
        (make_grid("cartesian-1d", 30.0, 128), PotentialSpec("soft-coulomb-1d", Z=2), 2),
    ]
    for grid, spec, npart in cases:
        cfg = SCFConfig(n_particles=npart, beta=20.0)
        a = scf_solve(cfg, spec, grid)
        b = scf_solve(replace(cfg, backend="spectral"), spec, grid)
        assert np.max(np.abs(a.density.values - b.density.values)) <= 1e-3


def test_conformational_uniform_free_thread(periodic_line):
    g = periodic_line
    beta = 2.0
    w = ScalarField(g, np.zeros(g.shape))
    p = build_propagator(w, beta)
    n = ScalarField(g, np.full(g.shape, 3 / g.measure))
    f = conformational_free_energy(n, diagonal(p), w, beta)
    expected = -(3 / beta) * math.log(1 / math.sqrt(2 * math.pi * beta))
    assert abs(f - expected) <= 1e-3


def test_conformational_requires_positive_ring_weight(periodic_line):
    g = periodic_line
    n = ScalarField(g, np.ones(g.shape))
    q = ScalarField(g, np.zeros(g.shape))
    with pytest.raises(ValueError):
        conformational_free_energy(n, q, q, 1.0)


def test_conformational_tends_to_kinetic_energy_at_low_temperature():
    # F_conf = <T> - (1/beta) int n ln n + O(exp(-beta gap)); the entropy term
    # fades as 1/beta
    g = make_grid("radial-3d", 20.0, 512)
    hyd = scf_solve(SCFConfig(beta=400.0), PotentialSpec("coulomb-radial"), g)
    assert abs(hyd.energy.conformational - 0.5) <= 2e-2
    line = make_grid("cartesian-1d", 20.0, 256)
    osc = scf_solve(SCFConfig(beta=200.0), PotentialSpec("harmonic"), line)
    assert abs(osc.energy.conformational - 0.25) <= 1e-2
    n = osc.density.values
    entropy = -np.sum(line.weights * n * np.log(n, where=n > 0, out=np.zeros_like(n))) / 200.0
    assert osc.energy.conformational == pytest.approx(0.25 + entropy, abs=1e-6)


def test_atomic_stability(hydrogen):
    fine = scf_solve(SCFConfig(beta=40.0), PotentialSpec("coulomb-radial"),
                     make_grid("radial-3d", 20.0, 1024))
    r = hydrogen.grid.axes[0]
    on_coarse = np.interp(r, fine.grid.axes[0], fine.density.values)
    assert np.max(np.abs(on_coarse - hydrogen.density.values)) < 1e-2
    # a 2x narrower copy of the converged density, with the field that binds it
    g = hydrogen.grid
    narrow = ScalarField(g, 8 * np.interp(2 * r, r, hydrogen.density.values, right=0.0))
    w_narrow = ScalarField(g, 4 * np.interp(2 * r, r, hydrogen.field.values))
    q_narrow = diagonal(build_propagator(w_narrow, 40.0))
    q = diagonal(build_propagator(hydrogen.field, 40.0))
    f0 = conformational_free_energy(hydrogen.density, q, hydrogen.field, 40.0)
    f1 = conformational_free_energy(narrow, q_narrow, w_narrow, 40.0)
    assert f1 > f0


def test_finite_well_decay():
    spec = PotentialSpec("finite-well", depth=1.0, half_width=1.0)
    g = make_grid("cartesian-1d", 20.0, 256, DIRICHLET)
    st = scf_solve(SCFConfig(beta=40.0), spec, g)
    target = 2 * analytic.finite_well_kappa(1.0, 1.0)
    assert target == pytest.approx(2.20, abs=5e-3)
    rate = forbidden_region_decay(st.density, spec)
    assert abs(rate / target - 1) <= 0.02
    x = g.axes[0]
    assert np.min(st.density.values[np.abs(x) > 1]) > 0


def test_step_barrier_decay():
    spec = PotentialSpec("step-barrier", height=1.0, start=0.0)
    g = make_grid("cartesian-1d", 20.0, 512, DIRICHLET)
    # the left region is wide, so the first gap is small; go cold enough to isolate the ground state
    st = scf_solve(SCFConfig(beta=400.0), spec, g)
    eps0 = analytic.step_box_ground(1.0, 20.0, 0.0)
    ks = solve_kohn_sham(st.field, 1).energies[0]
    assert ks == pytest.approx(eps0, rel=1e-3)
    rate = forbidden_region_decay(st.density, spec)
    assert abs(rate / (2 * math.sqrt(2 * (1.0 - eps0))) - 1) <= 0.02
    assert np.min(st.density.values[g.axes[0] > 0]) > 0


def test_decay_preconditions():
    g = make_grid("cartesian-1d", 20.0, 128, DIRICHLET)
    n = ScalarField(g, np.exp(-np.abs(g.axes[0])))
    with pytest.raises(ValueError):
        forbidden_interval(PotentialSpec("box"), g)
    with pytest.raises(ValueError):
        forbidden_region_decay(n, (30.0, 40.0))
    zero = ScalarField(g, np.where(g.axes[0] > 2, 0.0, 1.0))
    with pytest.raises(ValueError):
        forbidden_region_decay(zero, (3.0, 9.0))
    assert forbidden_region_decay(n, (1.0, 9.0)) == pytest.approx(1.0, rel=1e-6)
