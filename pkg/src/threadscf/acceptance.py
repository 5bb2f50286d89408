"""Bundled acceptance checks, runnable from ``threadscf check`` or pytest.

Each check builds its scenario from scratch, compares with closed-form or
independently computed reference values, and reports pass/fail with the
measured numbers. Reference constants that need a separate calculation
(helium Hartree-Fock, the finite-well decay constant) are stored here and
re-derived by the test suite's oracles.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from . import exchange, propagator, scf, spectral
from .domain import ComplexField, ScalarField, make_grid
from .dynamics import (
    DoubleSlitScenario,
    WavepacketState,
    _Stepper,
    fringe_spacing,
    init_gaussian_packet,
    observables,
    run_double_slit,
)

# restricted Hartree-Fock limit for helium
HELIUM_HF = -2.8616800
# 2 kappa of the even ground state, V0 = 1, a = 1
FINITE_WELL_2KAPPA = 2.1979951480626974
SUN_TEMPERATURE = 5778.0


@dataclass
class Outcome:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float
    limit: float

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        slow = "" if self.seconds <= self.limit else f" [over {self.limit:.0f} s budget]"
        return (f"[{status}] {self.number:2d} {self.name}: {self.detail} "
                f"({self.seconds:.1f} s){slow}")


def _mehler(x, y, beta):
    s, c = math.sinh(beta), math.cosh(beta)
    return np.sqrt(1 / (2 * np.pi * s)) * np.exp(-((x**2 + y**2) * c - 2 * x * y) / (2 * s))


def _harmonic_q(beta):
    return 1 / (2 * math.sinh(beta / 2))


def _field(kind, **params):
    """Bundled test fields at desk scale."""
    if kind == "hydrogen":
        grid = make_grid("radial-3d", 20.0, 256)
        return scf.external_potential(scf.PotentialSpec("coulomb-radial", Z=1), grid)
    if kind == "harmonic":
        grid = make_grid("cartesian-1d", 20.0, 256)
        return scf.external_potential(scf.PotentialSpec("harmonic"), grid)
    if kind == "box":
        grid = make_grid("cartesian-1d", 1.0, 128, "dirichlet-zero")
        return scf.external_potential(scf.PotentialSpec("box"), grid)
    if kind == "finite-well":
        grid = make_grid("cartesian-1d", 20.0, 256, "dirichlet-zero")
        return scf.external_potential(scf.PotentialSpec("finite-well", depth=1, half_width=1),
                                      grid)
    if kind == "step-barrier":
        grid = make_grid("cartesian-1d", 20.0, 256, "dirichlet-zero")
        return scf.external_potential(scf.PotentialSpec("step-barrier", height=1, start=0),
                                      grid)
    if kind == "soft-coulomb":
        grid = make_grid("cartesian-1d", 40.0, 256)
        return scf.external_potential(scf.PotentialSpec("soft-coulomb-1d", Z=1), grid)
    raise KeyError(kind)


BUNDLED_FIELDS = ("harmonic", "box", "finite-well", "hydrogen", "step-barrier", "soft-coulomb")


def hydrogen_state(points=512, extent=20.0, beta=40.0):
    grid = make_grid("radial-3d", extent, points)
    return scf.scf_solve(scf.SCFConfig(n_particles=1, beta=beta),
                         scf.PotentialSpec("coulomb-radial", Z=1), grid)


def helium_config(beta=40.0, backend="propagator"):
    # the cusp needs a finer spacing than hydrogen for 5e-3 in the total energy
    grid = make_grid("radial-3d", 10.0, 512)
    cfg = scf.SCFConfig(n_particles=2, beta=beta, backend=backend)
    return cfg, scf.PotentialSpec("coulomb-radial", Z=2), grid


def check_hydrogen():
    st = hydrogen_state()
    r = st.grid.axes[0]
    exact = np.exp(-2 * r) / np.pi
    dens_err = float(np.max(np.abs(st.density.values - exact)) / np.max(exact))
    e = st.energy.total
    ok = abs(e + 0.5) <= 1e-3 and dens_err <= 1e-2
    return ok, f"E = {e:.6f} (target -0.5 +/- 1e-3), density sup error {dens_err:.2e} (<= 1e-2)"


def check_helium():
    st = scf.scf_solve(*helium_config())
    e = st.energy.total
    ok = abs(e - HELIUM_HF) <= 5e-3 and st.converged
    return ok, (f"E = {e:.6f} vs Hartree-Fock {HELIUM_HF:.6f}, diff {e - HELIUM_HF:+.2e} "
                f"(<= 5e-3), {st.iterations} iterations")


def check_sun_sweep():
    cfg, spec, grid = helium_config()
    row = exchange.exchange_correction_sweep(cfg, spec, grid, [SUN_TEMPERATURE])[0]
    ok = row.relative_change < 1e-5
    return ok, f"beta = {row.beta:.3f}, relative binding-energy change {row.relative_change:.2e} (< 1e-5)"


def _kernel_gap(p, ref):
    return float(np.max(np.abs(p.values - ref.values)) / np.max(np.abs(ref.values)))


def check_duality(slices=2**16):
    worst, worst_tr, parts = 0.0, 0.0, []
    for kind in ("harmonic", "box", "finite-well", "hydrogen"):
        w = _field(kind)
        p = propagator.build_propagator(w, propagator.ContourSchedule(1.0, slices))
        spec = spectral.solve_kohn_sham(w, w.grid.size)
        ref = spectral.reconstruct_propagator(spec, 1.0)
        gap = _kernel_gap(p, ref)
        tr = abs(propagator.partition_function(p) / spectral.partition_sum(spec, 1.0) - 1)
        worst, worst_tr = max(worst, gap), max(worst_tr, tr)
        parts.append(f"{kind} {gap:.1e}")
    ok = worst <= 1e-5 and worst_tr <= 1e-3
    return ok, f"kernel gaps {', '.join(parts)} (<= 1e-5); worst trace error {worst_tr:.1e} (<= 1e-3)"


def check_semigroup():
    worst, parts = 0.0, []
    for kind in BUNDLED_FIELDS:
        w = _field(kind)
        sched = propagator.ContourSchedule.for_field(w.values, 1.0)
        p1 = propagator.build_propagator(w, sched)
        p2 = propagator.build_propagator(w, propagator.ContourSchedule(2.0, 2 * sched.slices))
        gap = _kernel_gap(propagator.compose(p1, p1), p2)
        worst = max(worst, gap)
        parts.append(f"{kind} {gap:.1e}")
    return worst <= 1e-6, f"compose vs build(2 beta): {', '.join(parts)} (<= 1e-6)"


def check_pairs():
    w = _field("harmonic")
    p = propagator.build_propagator(w, 1.0)
    sym = exchange.pair_partition(p, 1).q2_sym
    anti = exchange.pair_partition(p, -1).q2_anti
    n0 = exchange.density_with_exchange(p, 2, 1).at(0.0)
    q1, q2 = _harmonic_q(1.0), _harmonic_q(2.0)
    ref_sym, ref_anti = q1**2 + q2, q1**2 - q2
    ref_n0 = 2 * (_mehler(0, 0, 1.0) * q1 + _mehler(0, 0, 2.0)) / ref_sym
    ok = abs(sym - ref_sym) <= 1e-3 and abs(anti - ref_anti) <= 1e-3 and abs(n0 - ref_n0) <= 2e-3
    return ok, (f"Q2 sym {sym:.6f} (ref {ref_sym:.6f}), anti {anti:.6f} (ref {ref_anti:.6f}), "
                f"n(0) {n0:.6f} (ref {ref_n0:.6f})")


def check_saturation():
    w = _field("harmonic")
    p = propagator.build_propagator(w, 20.0)
    stats = exchange.pair_partition(p, 1)
    ring = propagator.density_single(p, 2).values
    ex = exchange.density_with_exchange(p, 2, 1).values
    dens_gap = float(np.max(np.abs(ex - ring)))
    ok = abs(stats.ratio - 1) <= 1e-6 and stats.anti_fraction <= 1e-6 and dens_gap <= 1e-6
    return ok, (f"Q(2b)/Q(b)^2 - 1 = {stats.ratio - 1:.1e}, anti fraction {stats.anti_fraction:.1e}, "
                f"exchange vs ring density {dens_gap:.1e} (all <= 1e-6)")


def check_conformational():
    h = hydrogen_state()
    grid = make_grid("cartesian-1d", 20.0, 256)
    osc = scf.scf_solve(scf.SCFConfig(beta=20.0), scf.PotentialSpec("harmonic"), grid)
    fh, fo = h.energy.conformational, osc.energy.conformational
    ok = abs(fh - 0.5) <= 2e-2 and abs(fo - 0.25) <= 1e-2
    return ok, f"F_conf hydrogen {fh:.4f} (0.5 +/- 2e-2), harmonic {fo:.4f} (0.25 +/- 1e-2)"


def check_tunnelling():
    spec = scf.PotentialSpec("finite-well", depth=1.0, half_width=1.0)
    grid = make_grid("cartesian-1d", 20.0, 256, "dirichlet-zero")
    st = scf.scf_solve(scf.SCFConfig(beta=40.0), spec, grid)
    rate = scf.forbidden_region_decay(st.density, spec)
    x = grid.axes[0]
    barrier_min = float(np.min(st.density.values[np.abs(x) > 1.0]))
    err = rate / FINITE_WELL_2KAPPA - 1
    ok = abs(err) <= 0.02 and barrier_min > 0
    return ok, (f"decay {rate:.4f} vs 2 kappa {FINITE_WELL_2KAPPA:.4f} ({err:+.2%}, within 2%), "
                f"min barrier density {barrier_min:.1e} > 0")


def _coherent(x, t, x0):
    q, p = x0 * math.cos(t), -x0 * math.sin(t)
    return np.pi**-0.25 * np.exp(-((x - q) ** 2) / 2 + 1j * (p * (x - q / 2) - t / 2))


def check_dynamics():
    grid = make_grid("cartesian-1d", 40.0, 256)
    x = grid.axes[0]
    harm = scf.external_potential(scf.PotentialSpec("harmonic"), grid)
    # unitarity over 1e4 steps
    step = _Stepper(grid, harm.values, 0.002, 1.0)
    psi = _coherent(x, 0.0, 2.0)
    for _ in range(10_000):
        psi = step(psi)
    drift = abs(float(np.sum(grid.weights * np.abs(psi) ** 2)) - 1)
    # free spreading
    free = ScalarField(grid, np.zeros(grid.shape))
    step = _Stepper(grid, free.values, 0.002, 1.0)
    psi = init_gaussian_packet(grid, 0.0, 0.0, 1.0).psi.values
    for _ in range(1000):
        psi = step(psi)
    width = observables(WavepacketState(ComplexField(grid, psi), 2.0)).width[0]
    # stationary state from the eigen-route
    phi0 = spectral.solve_kohn_sham(harm, 1).states[0]
    step = _Stepper(grid, harm.values, 0.002, 1.0)
    psi, ref, stat = phi0.astype(complex), phi0**2, 0.0
    for i in range(1, 5001):
        psi = step(psi)
        if i % 50 == 0:
            stat = max(stat, float(np.max(np.abs(np.abs(psi) ** 2 - ref))))
    ok = drift <= 1e-10 and abs(width - math.sqrt(2)) <= 1e-3 and stat <= 1e-6
    return ok, (f"norm drift {drift:.1e} (<= 1e-10), width {width:.6f} (sqrt 2 +/- 1e-3), "
                f"stationary drift {stat:.1e} (<= 1e-6)")


def check_double_slit(scenario: DoubleSlitScenario | None = None):
    sc = scenario or DoubleSlitScenario()
    spacing = fringe_spacing(run_double_slit(sc))
    single = replace(sc, slit=replace(sc.slit, open="upper"))
    control = fringe_spacing(run_double_slit(single))
    target = sc.fraunhofer_spacing
    rel = math.nan if spacing is None else spacing / target - 1
    ok = spacing is not None and abs(rel) <= 0.05 and control is None
    shown = "none" if spacing is None else f"{spacing:.3f}"
    return ok, (f"fringe spacing {shown} vs {target:.3f} ({rel:+.1%}, within 5%); "
                f"single slit: {'no fringes' if control is None else f'{control:.3f}'}")


def _mehler_diag_error(slices, beta=1.0):
    w = _field("harmonic")
    p = propagator.build_propagator(w, propagator.ContourSchedule(beta, slices))
    x = w.grid.axes[0]
    return float(np.max(np.abs(np.diagonal(p.values) - _mehler(x, x, beta))))


def _coherent_error(dt, t_end=2.0):
    grid = make_grid("cartesian-1d", 40.0, 256)
    x = grid.axes[0]
    harm = scf.external_potential(scf.PotentialSpec("harmonic"), grid)
    step = _Stepper(grid, harm.values, dt, 1.0)
    psi = _coherent(x, 0.0, 2.0)
    for _ in range(int(round(t_end / dt))):
        psi = step(psi)
    return float(np.max(np.abs(psi - _coherent(x, t_end, 2.0))))


def check_orders():
    r_prop = _mehler_diag_error(64) / _mehler_diag_error(128)
    r_dyn = _coherent_error(0.05) / _coherent_error(0.025)
    ok = 3.5 <= r_prop <= 4.5 and 3.5 <= r_dyn <= 4.5
    return ok, f"error ratio on halving: propagator {r_prop:.3f}, dynamics {r_dyn:.3f} (in [3.5, 4.5])"


CRITERIA = {
    1: ("hydrogen exactness", check_hydrogen, 10),
    2: ("helium Hartree-Fock agreement", check_helium, 60),
    3: ("helium at the solar surface temperature", check_sun_sweep, 120),
    4: ("propagator / eigen-sum duality", check_duality, 30),
    5: ("semigroup and cross-path identity", check_semigroup, 30),
    6: ("pair statistics closed forms", check_pairs, 10),
    7: ("saturation and fermionic collapse", check_saturation, 10),
    8: ("conformational free energy vs kinetic energy", check_conformational, 10),
    9: ("tunnelling decay", check_tunnelling, 10),
    10: ("dynamics suite", check_dynamics, 60),
    11: ("double slit", check_double_slit, 600),
    12: ("convergence orders", check_orders, 60),
}


def run_criterion(number) -> Outcome:
    name, func, limit = CRITERIA[number]
    start = time.perf_counter()
    passed, detail = func()
    return Outcome(number, name, bool(passed), detail, time.perf_counter() - start, limit)


def run_all(only=None, echo=None):
    outcomes = []
    for number in sorted(only or CRITERIA):
        out = run_criterion(number)
        if echo is not None:
            echo(out.line())
        outcomes.append(out)
    return outcomes


__all__ = ["CRITERIA", "Outcome", "run_all", "run_criterion"]
