"""Command-line entry points, config parsing, and snapshot serialization.

Config files are flat ``key = value`` text under bracketed section headers
(no nesting).  Snapshots are plain-text CSV with one body per line::

    step,time,body,index,c0,...   (body S or P; coordinates and time as
                                   hexadecimal floats for bit-exact round trips)

A sidecar ``metadata_r<k>.txt`` in the same key = value format echoes the
fully resolved configuration, so every artifact is self-describing.  Replica
seeds derive from the master seed by splitmix64(master XOR replica_index).

Exit codes: 0 success, 2 config error, 3 runtime integration/sampler error.
"""

from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import __version__
from .analysis import (
    Histogram,
    default_bin_edges,
    effective_sample_size,
    energy_trace,
    ks_statistic,
    pair_distance_histogram,
)
from .backend import BACKEND
from .core import Configuration, EPS_CONTACT_ANNEAL, ModelParams, contact_number, is_admissible
from .dynamics import SimulationError, default_dt, simulate
from .geometry import rho_thresholds
from .potentials import PotentialSpec
from .rng import split_seed
from .sampling import (
    AnnealSchedule,
    MCMCParams,
    anneal_packing,
    initial_sphere_positions,
    sample_bath_given_spheres,
    sample_hard_spheres,
)

MODES = ("two-type", "depletion", "sample-equilibrium", "anneal-pack", "analyze")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Fully resolved run description; defaults already applied."""

    mode: str
    seed: int
    out: str
    replicas: int
    model: ModelParams
    n: int
    record_every: int
    n_steps: int
    dt: float
    record_local_times: str
    sphere_drift: str
    particle_stray_sigma: bool
    sphere_hinge_radius: float
    sphere_slope: float
    particle_radius: float
    particle_slope: float
    positions: Optional[np.ndarray]
    spacing: float
    proposal_sigma: float
    n_sweeps: int
    burn_in: int
    thinning: int
    adapt: bool
    z_initial: Optional[float]
    growth: float
    n_levels: int
    sweeps_per_level: int
    analyze_input: str
    analyze_input2: str
    pair_i: int
    pair_j: int
    bins: int
    warnings: List[str] = field(default_factory=list)

    def resolved_items(self) -> List[Tuple[str, str]]:
        items = [
            ("mode", self.mode),
            ("seed", str(self.seed)),
            ("out", self.out),
            ("replicas", str(self.replicas)),
            ("d", str(self.model.d)),
            ("r_sphere", repr(self.model.r_sphere)),
            ("r_particle", repr(self.model.r_particle)),
            ("z", repr(self.model.z_dot)),
            ("sigma_sphere", repr(self.model.sigma_sphere)),
            ("sigma_particle", repr(self.model.sigma_particle)),
            ("n", str(self.n)),
            ("record_every", str(self.record_every)),
            ("n_steps", str(self.n_steps)),
            ("dt", repr(self.dt)),
            ("record_local_times", self.record_local_times),
            ("sphere_drift", self.sphere_drift),
            ("particle_stray_sigma", str(self.particle_stray_sigma).lower()),
            ("sphere_hinge_radius", repr(self.sphere_hinge_radius)),
            ("sphere_slope", repr(self.sphere_slope)),
            ("particle_radius", repr(self.particle_radius)),
            ("particle_slope", repr(self.particle_slope)),
            ("spacing", repr(self.spacing)),
            ("proposal_sigma", repr(self.proposal_sigma)),
            ("n_sweeps", str(self.n_sweeps)),
            ("burn_in", str(self.burn_in)),
            ("thinning", str(self.thinning)),
            ("adapt", str(self.adapt).lower()),
            ("growth", repr(self.growth)),
            ("n_levels", str(self.n_levels)),
            ("sweeps_per_level", str(self.sweeps_per_level)),
            ("analyze_input", self.analyze_input),
            ("analyze_input2", self.analyze_input2),
            ("pair_i", str(self.pair_i)),
            ("pair_j", str(self.pair_j)),
            ("bins", str(self.bins)),
        ]
        if self.z_initial is not None:
            items.append(("z_initial", repr(self.z_initial)))
        if self.positions is not None:
            items.append(
                ("positions", "; ".join(",".join(repr(c) for c in row) for row in self.positions))
            )
        return items


_SCHEMA: Dict[str, Dict[str, str]] = {
    "run": {
        "mode": "str", "seed": "int", "out": "str", "replicas": "int",
        "record_every": "int", "n_steps": "int", "dt": "float",
        "record_local_times": "str", "sphere_drift": "str",
        "particle_stray_sigma": "bool",
    },
    "model": {
        "d": "int", "r_sphere": "float", "r_particle": "float", "z": "float",
        "sigma_sphere": "float", "sigma_particle": "float",
    },
    "spheres": {"n": "int", "spacing": "float", "positions": "str"},
    "sphere_potential": {"hinge_radius": "float", "slope": "float"},
    "particle_potential": {"radius": "float", "slope": "float"},
    "mcmc": {
        "proposal_sigma": "float", "n_sweeps": "int", "burn_in": "int",
        "thinning": "int", "adapt": "bool",
    },
    "anneal": {
        "z_initial": "float", "growth": "float", "n_levels": "int",
        "sweeps_per_level": "int",
    },
    "analyze": {"input": "str", "input2": "str", "pair_i": "int", "pair_j": "int", "bins": "int"},
}


def _parse_value(raw: str, kind: str, key: str, lineno: int):
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            if raw.lower() in ("true", "yes", "1"):
                return True
            if raw.lower() in ("false", "no", "0"):
                return False
            raise ValueError
        return raw
    except ValueError:
        raise ConfigError(f"line {lineno}: invalid {kind} value {raw!r} for key '{key}'") from None


def _parse_positions(raw: str, d: int) -> np.ndarray:
    rows = [r.strip() for r in raw.split(";") if r.strip()]
    out = []
    for r in rows:
        coords = [float(c) for c in r.split(",")]
        if len(coords) != d:
            raise ConfigError(f"positions row {r!r} does not have {d} coordinates")
        out.append(coords)
    return np.asarray(out, dtype=np.float64)


def parse_config(text: str) -> RunConfig:
    """Strict parse of the flat key = value config format.

    Unknown sections or keys are rejected with their line number; semantic
    errors name the offending field.  Defaults are applied for absent
    optional keys and the resolved config is echoed into run metadata.
    """
    values: Dict[Tuple[str, str], object] = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip()
            if section not in _SCHEMA:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        if section is None:
            raise ConfigError(f"line {lineno}: key outside of any [section]")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        if key not in _SCHEMA[section]:
            raise ConfigError(f"line {lineno}: unknown key '{key}' in section [{section}]")
        if raw.strip() == "":
            continue
        values[(section, key)] = _parse_value(raw, _SCHEMA[section][key], key, lineno)

    def get(section: str, key: str, default=None):
        return values.get((section, key), default)

    mode = get("run", "mode")
    if mode is None:
        raise ConfigError("missing required key 'mode' in section [run]")
    if mode not in MODES:
        raise ConfigError(f"field 'mode': must be one of {MODES}, got {mode!r}")
    seed = get("run", "seed")
    if seed is None:
        raise ConfigError("missing required key 'seed' in section [run]")

    warnings_list: List[str] = []
    d = int(get("model", "d", 2))
    r_sphere = float(get("model", "r_sphere", 1.0))
    r_particle = float(get("model", "r_particle", 0.0))
    if r_particle >= r_sphere:
        raise ConfigError(
            "field 'r_particle': particle radius must be strictly smaller than "
            f"r_sphere so the size ratio lies in [0, 1) (got {r_particle} >= {r_sphere})"
        )
    try:
        model = ModelParams(
            d=d,
            r_sphere=r_sphere,
            r_particle=r_particle,
            z_dot=float(get("model", "z", 0.0)),
            sigma_sphere=float(get("model", "sigma_sphere", 1.0)),
            sigma_particle=float(get("model", "sigma_particle", 1.0)),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid model parameters: {exc}") from None

    rho2, _ = rho_thresholds(model.d)
    if mode in ("depletion", "sample-equilibrium", "anneal-pack") and model.rho > rho2:
        warnings_list.append(
            f"size ratio rho={model.rho:.4f} exceeds the pairwise-interaction "
            f"threshold rho2={rho2:.4f}: the pairwise energy driving this mode "
            "is only an approximation of the union volume"
        )

    positions_raw = get("spheres", "positions")
    positions = _parse_positions(positions_raw, model.d) if positions_raw else None
    n = int(get("spheres", "n", positions.shape[0] if positions is not None else 3))
    if positions is not None and positions.shape[0] != n:
        raise ConfigError("field 'n': does not match the number of explicit positions")
    if n < 1:
        raise ConfigError("field 'n': need at least one sphere")

    dt = get("run", "dt")
    cfg = RunConfig(
        mode=mode,
        seed=int(seed),
        out=str(get("run", "out", "out")),
        replicas=int(get("run", "replicas", 1)),
        model=model,
        n=n,
        record_every=int(get("run", "record_every", 100)),
        n_steps=int(get("run", "n_steps", 10_000)),
        dt=float(dt) if dt is not None else default_dt(model),
        record_local_times=str(get("run", "record_local_times", "final")),
        sphere_drift=str(get("run", "sphere_drift", "sigma")),
        particle_stray_sigma=bool(get("run", "particle_stray_sigma", False)),
        sphere_hinge_radius=float(get("sphere_potential", "hinge_radius", 5.0 * model.r_sphere)),
        sphere_slope=float(get("sphere_potential", "slope", 1.0 / model.r_sphere)),
        particle_radius=float(get("particle_potential", "radius", 5.0 * model.r_sphere)),
        particle_slope=float(get("particle_potential", "slope", 1.0)),
        positions=positions,
        spacing=float(get("spheres", "spacing", 2.5)),
        proposal_sigma=float(get("mcmc", "proposal_sigma", 0.5 * model.r_sphere)),
        n_sweeps=int(get("mcmc", "n_sweeps", 20_000)),
        burn_in=int(get("mcmc", "burn_in", 2_000)),
        thinning=int(get("mcmc", "thinning", 10)),
        adapt=bool(get("mcmc", "adapt", True)),
        z_initial=get("anneal", "z_initial"),
        growth=float(get("anneal", "growth", 3.0)),
        n_levels=int(get("anneal", "n_levels", 8)),
        sweeps_per_level=int(get("anneal", "sweeps_per_level", 6_000)),
        analyze_input=str(get("analyze", "input", "")),
        analyze_input2=str(get("analyze", "input2", "")),
        pair_i=int(get("analyze", "pair_i", 0)),
        pair_j=int(get("analyze", "pair_j", 1)),
        bins=int(get("analyze", "bins", 50)),
        warnings=warnings_list,
    )
    if cfg.record_local_times not in ("none", "final", "every"):
        raise ConfigError("field 'record_local_times': must be none, final, or every")
    if cfg.sphere_drift not in ("sigma", "sigma2"):
        raise ConfigError("field 'sphere_drift': must be 'sigma' or 'sigma2'")
    if cfg.replicas < 1:
        raise ConfigError("field 'replicas': must be at least 1")
    if cfg.mode == "analyze" and not cfg.analyze_input:
        raise ConfigError("field 'input': mode=analyze requires an input snapshot file")
    if cfg.mode in ("two-type", "depletion") and cfg.dt <= 0:
        raise ConfigError("field 'dt': must be positive")
    return cfg


# ---------------------------------------------------------------------------
# snapshot serialization


def _fmt(x: float) -> str:
    return float(x).hex()


def write_snapshots(path: Path, records, include_local_times: str = "final") -> None:
    """One body per line: step,time,body,index,coords... (hex floats)."""
    lines = []
    for rec in records:
        tstr = _fmt(rec.t)
        for i, row in enumerate(rec.cfg.spheres):
            lines.append(f"{rec.step},{tstr},S,{i}," + ",".join(_fmt(c) for c in row))
        for k, row in enumerate(rec.cfg.particles):
            lines.append(f"{rec.step},{tstr},P,{k}," + ",".join(_fmt(c) for c in row))
    path.write_text("\n".join(lines) + "\n")


def read_snapshots(path: Path):
    """Reconstruct the list of (step, t, Configuration) from a snapshot file."""
    by_step: Dict[int, Dict[str, list]] = {}
    times: Dict[int, float] = {}
    for line in path.read_text().splitlines():
        if not line.strip():
            continue
        parts = line.split(",")
        step = int(parts[0])
        times[step] = float.fromhex(parts[1])
        body = parts[2]
        coords = [float.fromhex(c) for c in parts[4:]]
        by_step.setdefault(step, {"S": [], "P": []})[body].append((int(parts[3]), coords))
    out = []
    for step in sorted(by_step):
        sph = [c for _, c in sorted(by_step[step]["S"])]
        par = [c for _, c in sorted(by_step[step]["P"])]
        d = len(sph[0]) if sph else (len(par[0]) if par else 0)
        cfg = Configuration(
            spheres=np.asarray(sph, dtype=np.float64).reshape(len(sph), d),
            particles=np.asarray(par, dtype=np.float64).reshape(len(par), d),
        )
        out.append((step, times[step], cfg))
    return out


def write_local_times(path: Path, rec) -> None:
    """Sparse (i, j, value) triples of the accumulators at one record."""
    lines = [f"# step {rec.step}"]
    L = rec.local_time_spheres
    for i in range(L.shape[0]):
        for j in range(i + 1, L.shape[1]):
            if L[i, j] != 0.0:
                lines.append(f"SS,{i},{j},{_fmt(L[i, j])}")
    ell = rec.local_time_particles
    for i in range(ell.shape[0]):
        for k in range(ell.shape[1]):
            if ell[i, k] != 0.0:
                lines.append(f"SP,{i},{k},{_fmt(ell[i, k])}")
    path.write_text("\n".join(lines) + "\n")


def write_metadata(path: Path, cfg: RunConfig, replica: int, seed: int, extra: Dict[str, str]) -> None:
    lines = ["[config]"]
    lines += [f"{k} = {v}" for k, v in cfg.resolved_items()]
    lines.append("")
    lines.append("[result]")
    lines.append(f"version = {__version__}")
    lines.append(f"backend = {BACKEND}")
    lines.append(f"replica = {replica}")
    lines.append(f"replica_seed = {seed}")
    for k, v in extra.items():
        lines.append(f"{k} = {v}")
    for w in cfg.warnings:
        lines.append(f"warning = {w}")
    path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# run modes


def _initial_configuration(cfg: RunConfig, seed: int) -> Configuration:
    if cfg.positions is not None:
        sph = cfg.positions
    else:
        sph = initial_sphere_positions(cfg.n, cfg.model.d, cfg.model.r_sphere, cfg.spacing)
    if cfg.mode == "two-type":
        window = cfg.particle_radius + 4.0 * cfg.model.sigma_particle * np.sqrt(
            max(cfg.n_steps * cfg.dt, 1e-12)
        )
        psi_p = PotentialSpec.particle(cfg.model.d, cfg.particle_radius, cfg.particle_slope)
        par = sample_bath_given_spheres(
            sph, cfg.model, window, seed=seed, psi_particle=psi_p
        )
    else:
        par = np.empty((0, cfg.model.d))
    return Configuration(spheres=sph, particles=par)


def _run_replica(cfg: RunConfig, replica: int, out_dir: Path) -> Dict[str, str]:
    seed = split_seed(cfg.seed, replica)
    extra: Dict[str, str] = {}
    t0 = time.perf_counter()
    sphere_spec = PotentialSpec.sphere(
        cfg.model.d, cfg.sphere_hinge_radius, cfg.sphere_slope, normalize=False
    )
    if cfg.mode in ("two-type", "depletion"):
        particle_spec = (
            PotentialSpec.particle(cfg.model.d, cfg.particle_radius, cfg.particle_slope)
            if cfg.mode == "two-type"
            else None
        )
        initial = _initial_configuration(cfg, seed)
        records = simulate(
            initial,
            cfg.model,
            (sphere_spec, particle_spec),
            cfg.dt,
            cfg.n_steps,
            cfg.record_every,
            seed,
            mode=cfg.mode,
            sphere_drift_convention=cfg.sphere_drift,
            particle_stray_sigma=cfg.particle_stray_sigma,
        )
        violations = sum(
            0 if is_admissible(rec.cfg, cfg.model) else 1 for rec in records
        )
        extra["invariant_violations"] = str(violations)
        extra["n_records"] = str(len(records))
        extra["m_particles"] = str(initial.m)
        write_snapshots(out_dir / f"snapshots_r{replica}.csv", records)
        if cfg.record_local_times == "final":
            write_local_times(out_dir / f"local_times_r{replica}.csv", records[-1])
        elif cfg.record_local_times == "every":
            for rec in records:
                write_local_times(out_dir / f"local_times_r{replica}_s{rec.step}.csv", rec)
    elif cfg.mode == "sample-equilibrium":
        mcmc = MCMCParams(
            proposal_sigma=cfg.proposal_sigma,
            n_sweeps=cfg.n_sweeps,
            burn_in=cfg.burn_in,
            thinning=cfg.thinning,
            adapt=cfg.adapt,
        )
        result = sample_hard_spheres(cfg.n, cfg.model, sphere_spec, mcmc, seed=seed)
        records = [
            _StaticRecord(idx, float(idx), c) for idx, c in enumerate(result.configs)
        ]
        violations = sum(0 if is_admissible(rec.cfg, cfg.model) else 1 for rec in records)
        extra["invariant_violations"] = str(violations)
        extra["n_records"] = str(len(records))
        extra["acceptance_rate"] = repr(result.acceptance_rate)
        write_snapshots(out_dir / f"snapshots_r{replica}.csv", records)
    elif cfg.mode == "anneal-pack":
        schedule = AnnealSchedule(
            z_initial=cfg.z_initial,
            growth=cfg.growth,
            n_levels=cfg.n_levels,
            sweeps_per_level=cfg.sweeps_per_level,
        )
        mcmc = MCMCParams(
            proposal_sigma=cfg.proposal_sigma,
            n_sweeps=max(2, cfg.sweeps_per_level),
            burn_in=1,
            adapt=cfg.adapt,
        )
        result = anneal_packing(cfg.n, cfg.model, schedule, mcmc, seed=seed)
        records = [_StaticRecord(0, 0.0, result.best)]
        extra["invariant_violations"] = str(0 if is_admissible(result.best, cfg.model) else 1)
        extra["final_contact_number"] = str(
            contact_number(result.best.spheres, cfg.model, EPS_CONTACT_ANNEAL)
        )
        extra["best_energy"] = repr(result.best_energy)
        extra["confinement_energy"] = repr(result.best_psi_total)
        extra["contact_history"] = ",".join(str(c) for c in result.contact_history)
        write_snapshots(out_dir / f"snapshots_r{replica}.csv", records)
    elif cfg.mode == "analyze":
        snaps = read_snapshots(Path(cfg.analyze_input))
        configs = [c for _, _, c in snaps]
        dists = [
            float(np.linalg.norm(c.spheres[cfg.pair_i] - c.spheres[cfg.pair_j]))
            for c in configs
        ]
        if cfg.bins > 0:
            lo, hi = min(dists), max(dists) * 1.0001
            edges = np.linspace(lo, hi if hi > lo else lo + 1e-9, cfg.bins + 1)
        else:
            # bins = 0 selects the depletion-well default bin width
            edges = default_bin_edges(cfg.model, max(dists) * 1.0001)
        hist = pair_distance_histogram(configs, cfg.pair_i, cfg.pair_j, edges)
        _write_histogram(out_dir / f"histogram_r{replica}.csv", hist)
        energies = energy_trace(configs, cfg.model)
        (out_dir / f"energy_trace_r{replica}.csv").write_text(
            "\n".join(repr(e) for e in energies) + "\n"
        )
        extra["n_snapshots"] = str(len(configs))
        extra["ess_pair_distance"] = repr(
            effective_sample_size(
                [float(np.linalg.norm(c.spheres[cfg.pair_i] - c.spheres[cfg.pair_j])) for c in configs]
            )
        )
        if cfg.analyze_input2:
            snaps2 = read_snapshots(Path(cfg.analyze_input2))
            hist2 = pair_distance_histogram([c for _, _, c in snaps2], cfg.pair_i, cfg.pair_j, edges)
            extra["ks_statistic"] = repr(ks_statistic(hist, hist2))
        extra["invariant_violations"] = "0"
    wall = time.perf_counter() - t0
    extra["wall_time_s"] = f"{wall:.3f}"
    write_metadata(out_dir / f"metadata_r{replica}.txt", cfg, replica, seed, extra)
    return extra


@dataclass(frozen=True)
class _StaticRecord:
    step: int
    t: float
    cfg: Configuration


def _write_histogram(path: Path, hist: Histogram) -> None:
    lines = ["lo,hi,count"]
    for k in range(hist.counts.size):
        lines.append(f"{hist.bin_edges[k]!r},{hist.bin_edges[k + 1]!r},{hist.counts[k]}")
    path.write_text("\n".join(lines) + "\n")


def run(cfg: RunConfig, threads: int = 1) -> int:
    """Execute a resolved config; returns the process exit status."""
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for w in cfg.warnings:
        print(f"warning: {w}", file=sys.stderr)
    replicas = list(range(cfg.replicas))
    try:
        if threads > 1 and cfg.replicas > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                futures = [pool.submit(_run_replica, cfg, r, out_dir) for r in replicas]
                for fut in futures:
                    fut.result()
        else:
            for r in replicas:
                _run_replica(cfg, r, out_dir)
    except (SimulationError, RuntimeError) as exc:
        (out_dir / "error.txt").write_text(f"{type(exc).__name__}: {exc}\n")
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="depsim",
        description="Hard spheres in a depletant bath: dynamics, samplers, annealing.",
    )
    sub = parser.add_subparsers(dest="command")
    for mode in MODES:
        p = sub.add_parser(mode, help=f"run mode={mode}")
        p.add_argument("--config", required=True, help="path to key = value config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="override the output directory")
        p.add_argument("--replicas", type=int, default=None, help="override replica count")
        p.add_argument("--threads", type=int, default=1, help="replica thread pool size")
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 2
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        cfg = parse_config(text)
        if cfg.mode != args.command:
            raise ConfigError(
                f"field 'mode': config says {cfg.mode!r} but subcommand is {args.command!r}"
            )
        if args.seed is not None:
            cfg.seed = int(args.seed)
        if args.out is not None:
            cfg.out = args.out
        if args.replicas is not None:
            if args.replicas < 1:
                raise ConfigError("field 'replicas': must be at least 1")
            cfg.replicas = args.replicas
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return run(cfg, threads=max(1, args.threads))


if __name__ == "__main__":
    sys.exit(main())
