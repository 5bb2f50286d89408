"""Command-line front end: one scenario per invocation, deterministic files out.

    threadscf scf --config hydrogen.json --out results/h
    threadscf validate --config hydrogen.json
    threadscf check

Exit status is 0 on success, 2 for configuration errors, 3 for numerical
failures. Failures also print a JSON error record on stderr.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import asdict
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np
import scipy.fft

from . import exchange, propagator, scf, spectral
from .config import SCENARIOS, DoubleSlitBlock, ScenarioConfig, load_config
from .domain import ScalarField
from .dynamics import (
    DoubleSlit,
    DoubleSlitScenario,
    DynamicsRun,
    fringe_spacing,
    init_gaussian_packet,
    propagate,
)
from .errors import ConfigError, NumericalError

log = logging.getLogger("threadscf")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _version():
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "unknown"


def _fmt(v):
    return format(float(v), ".12g")


class Outputs:
    """Writes CSV/JSON files into one directory and remembers their checksums."""

    def __init__(self, directory, formats=("csv", "json")):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.formats = set(formats)
        self.files = {}

    def _record(self, path):
        self.files[path.name] = hashlib.sha256(path.read_bytes()).hexdigest()

    def table(self, name, header, columns):
        if "csv" not in self.formats:
            return
        path = self.dir / name
        rows = zip(*[np.ravel(c) for c in columns])
        with path.open("w") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
        self._record(path)

    def field(self, name, f: ScalarField, label="value"):
        grid = f.grid
        if grid.ndim == 1:
            axis = "r" if grid.radial else "x"
            self.table(name, [axis, label], [grid.axes[0], f.values])
        else:
            x, y = grid.coords
            self.table(name, ["x", "y", label], [x, y, f.values])

    def json(self, name, payload):
        if "json" not in self.formats:
            return
        path = self.dir / name
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        self._record(path)


def _scf_config(cfg: ScenarioConfig, beta=None, **overrides):
    ph, nu = cfg.physics, cfg.numerics
    return scf.SCFConfig(
        n_particles=ph.n_particles, beta=beta or ph.resolved_beta() or 1.0,
        mixing=nu.mixing, tolerance=nu.tolerance, max_iterations=nu.max_iterations,
        backend=ph.backend, include_hartree=ph.include_hartree, pauli=ph.pauli,
        softening=ph.softening, slices=nu.slices, mass=ph.mass, **overrides)


def _schedule(cfg, w, beta):
    if cfg.numerics.slices:
        return propagator.ContourSchedule(beta, cfg.numerics.slices)
    return propagator.ContourSchedule.for_field(w.values, beta)


def _run_static(cfg, out):
    grid = cfg.grid.build()
    w = scf.external_potential(cfg.potential.build(), grid)
    beta = cfg.physics.resolved_beta()
    sched = _schedule(cfg, w, beta)
    p = propagator.build_propagator(w, sched, cfg.physics.mass)
    n = propagator.density_single(p, cfg.physics.n_particles)
    out.field("density.csv", n, "density")
    out.field("ring_weight.csv", propagator.diagonal(p), "q")
    out.field("field.csv", w, "w")
    results = {"beta": beta, "slices": sched.slices,
               "partition_function": propagator.partition_function(p),
               "log_partition_function": propagator.log_partition_function(p)}
    checks = {}
    if grid.ndim == 1:
        spec = spectral.solve_kohn_sham(w, grid.size, cfg.physics.mass)
        ref = spectral.reconstruct_propagator(spec, beta)
        gap = float(np.max(np.abs(p.values - ref.values)) / np.max(ref.values))
        results["eigenvalues"] = spec.energies[: cfg.numerics.states].tolist()
        results["duality_error"] = gap
        checks["duality"] = gap <= 1e-5
    return results, checks


def _run_scf(cfg, out):
    grid = cfg.grid.build()
    state = scf.scf_solve(_scf_config(cfg), cfg.potential.build(), grid)
    out.field("density.csv", state.density, "density")
    out.field("field.csv", state.field, "w")
    out.table("residuals.csv", ["iteration", "residual"],
              [np.arange(1, len(state.residuals) + 1), state.residuals])
    results = {"beta": state.config.beta, "iterations": state.iterations,
               "converged": state.converged, "log_partition_function": state.log_q,
               "energy": state.energy.as_dict(),
               "particles": float(state.density.integrate())}
    return results, {"converged": state.converged}


def _run_pairs(cfg, out):
    grid = cfg.grid.build()
    w = scf.external_potential(cfg.potential.build(), grid)
    beta = cfg.physics.resolved_beta()
    sign = cfg.physics.sign
    p = propagator.build_propagator(w, _schedule(cfg, w, beta), cfg.physics.mass)
    stats = exchange.pair_partition(p, sign)
    results = {"beta": beta, "sign": sign, "Q": stats.q, "Q_2beta": stats.q2beta,
               "Q2_sym": stats.q2_sym, "Q2_anti": stats.q2_anti, "Q2": stats.q2,
               "ratio": stats.ratio}
    npart = max(cfg.physics.n_particles, 2)
    n = exchange.density_with_exchange(p, npart, sign)
    out.field("density_exchange.csv", n, "density")
    out.field("density_ring.csv", propagator.density_single(p, npart), "density")
    if cfg.physics.betas:
        rows = exchange.saturation_diagnostics(w, cfg.physics.betas)
        out.table("saturation.csv", ["beta", "q_ratio", "density_ratio", "anti_fraction"],
                  [[getattr(r, k) for r in rows]
                   for k in ("beta", "q_ratio", "density_ratio", "anti_fraction")])
    return results, {}


def _run_sweep(cfg, out):
    grid = cfg.grid.build()
    rows = exchange.exchange_correction_sweep(
        _scf_config(cfg), cfg.potential.build(), grid, cfg.physics.temperatures,
        cfg.physics.reference_energy, cfg.physics.sign)
    keys = ("temperature", "beta", "ring_energy", "exchange_energy", "relative_change")
    out.table("sweep.csv", list(keys), [[getattr(r, k) for r in rows] for k in keys])
    return {"rows": [asdict(r) for r in rows]}, {}


def _run_dynamics(cfg, out):
    grid = cfg.grid.build()
    pk = cfg.packet
    if pk is None:
        raise ConfigError("dynamics needs a packet block")
    w = scf.external_potential(cfg.potential.build(), grid)
    nu = cfg.numerics
    run = DynamicsRun(w, nu.dt, int(round(nu.duration / nu.dt)), nu.cadence,
                      pk.screen, cfg.physics.mass, pk.absorb)
    state = init_gaussian_packet(grid, pk.center, pk.momentum, pk.width)
    res = propagate(run, state)
    cols = [[o.t for o in res.series], [o.norm for o in res.series]]
    header = ["t", "norm"]
    for ax in range(grid.ndim):
        header += [f"mean_{ax}", f"width_{ax}"]
        cols += [[o.mean[ax] for o in res.series], [o.width[ax] for o in res.series]]
    header.append("energy")
    cols.append([o.energy for o in res.series])
    out.table("observables.csv", header, cols)
    out.field("density.csv", ScalarField(grid, np.abs(res.state.psi.values) ** 2), "density")
    if res.screen is not None:
        out.table("screen.csv", ["y", "value"], [res.screen.coords, res.screen.values])
    last = res.series[-1]
    return {"t": last.t, "norm": last.norm, "energy": last.energy,
            "mean": list(last.mean), "width": list(last.width)}, {}


def _run_double_slit(cfg, out):
    b = cfg.double_slit or DoubleSlitBlock()
    slit = DoubleSlit(b.wall_x, b.thickness, b.separation, b.slit_width,
                      b.screen_distance, b.height, b.open)
    sc = DoubleSlitScenario(slit, b.extent, b.points, b.momentum, b.start_x,
                            tuple(b.width), b.dt, b.duration, cfg.physics.mass)
    res = propagate(sc.run(), sc.initial_state())
    out.table("screen.csv", ["y", "value"], [res.screen.coords, res.screen.values])
    spacing = fringe_spacing(res.screen)
    expected = sc.fraunhofer_spacing
    results = {"fringe_spacing": spacing, "fraunhofer_spacing": expected,
               "absorbed": res.absorbed}
    checks = {}
    if b.open == "both":
        checks["fringe_spacing"] = spacing is not None and abs(spacing / expected - 1) <= 0.05
    else:
        checks["no_fringes"] = spacing is None
    return results, checks


RUNNERS = {
    "static": _run_static,
    "scf": _run_scf,
    "pairs": _run_pairs,
    "sweep": _run_sweep,
    "dynamics": _run_dynamics,
    "double-slit": _run_double_slit,
}


def run_scenario(cfg: ScenarioConfig, out_dir=None) -> dict:
    """Run ``cfg`` and write its data files plus ``manifest.json`` into ``out_dir``."""
    out_dir = out_dir or cfg.output.directory or f"out-{cfg.scenario}"
    out = Outputs(out_dir, cfg.output.formats)
    start = time.perf_counter()
    try:
        results, checks = RUNNERS[cfg.scenario](cfg, out)
    except (ConfigError, NumericalError) as exc:
        raise type(exc)(f"scenario {cfg.scenario!r}: {exc}") from exc
    out.json("results.json", _jsonable(results))
    manifest = {
        "config": cfg.model_dump(mode="json", exclude_unset=True),
        "resolved": cfg.model_dump(mode="json"),
        "resolved_beta": cfg.physics.resolved_beta(),
        "version": _version(),
        "wall_clock_seconds": time.perf_counter() - start,
        "checks": {k: bool(v) for k, v in checks.items()},
        "results": _jsonable(results),
        "files": dict(sorted(out.files.items())),
    }
    path = out.dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def _error_record(exc, scenario=None):
    return json.dumps({"error": type(exc).__name__, "message": str(exc),
                       "scenario": scenario})


def build_parser():
    parser = argparse.ArgumentParser(prog="threadscf", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SCENARIOS:
        p = sub.add_parser(name, help=f"run a {name} scenario")
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--out", type=Path)
        p.add_argument("--threads", type=int, default=0, help="FFT workers, 0 = all cores")
    p = sub.add_parser("validate", help="check a config file and print it with defaults")
    p.add_argument("--config", required=True, type=Path)
    p = sub.add_parser("check", help="run the bundled acceptance checks")
    p.add_argument("--only", type=str, default=None, help="comma-separated criterion numbers")
    p.add_argument("--threads", type=int, default=0)
    return parser


def _workers(n):
    if n < 0:
        raise ConfigError("--threads must be nonnegative")
    return n or os.cpu_count() or 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    scenario = None
    try:
        if args.command == "validate":
            cfg = load_config(args.config)
            print(json.dumps(cfg.model_dump(mode="json"), indent=2, sort_keys=True))
            return EXIT_OK
        if args.command == "check":
            from . import acceptance
            only = [int(s) for s in args.only.split(",")] if args.only else None
            with scipy.fft.set_workers(_workers(args.threads)):
                outcomes = acceptance.run_all(only, echo=print)
            return EXIT_OK if all(o.passed for o in outcomes) else EXIT_FAIL
        cfg = load_config(args.config)
        scenario = cfg.scenario
        if cfg.scenario != args.command:
            raise ConfigError(f"config describes a {cfg.scenario!r} scenario, "
                              f"not {args.command!r}")
        with scipy.fft.set_workers(_workers(args.threads)):
            manifest = run_scenario(cfg, args.out)
        print(json.dumps({"results": manifest["results"], "checks": manifest["checks"]},
                         indent=2, sort_keys=True))
        return EXIT_OK
    except ConfigError as exc:
        print(_error_record(exc, scenario), file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(_error_record(exc, scenario), file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
