"""Experiment runner.

Usage: hasimoto-lab <experiment> [--config FILE] [--set key=value ...]
                                 [--out DIR] [--seed N]

Experiments: llg, heat, crosscheck, identities, sllg, holonomy, covariance,
plus the catalog command list-experiments. Config files are flat key=value
text; every key can also be overridden on the command line with --set.
Outputs per run: series_*.csv (time series), report.json (structured result),
manifest.json (resolved config, seed, version, wall clock, monitor flags).
(config, master_seed) fully determines every CSV byte.
"""

import argparse
import csv
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .fields import (BlowUpError, ConfigurationError, Grid1D, make_grid)
from .hashimoto import closure_defect, reconstruct_frame, transform
from .heat import HeatConfig, heat_integrate, mass
from .llg import LLGConfig, exchange_energy, llg_integrate, stable_dt
from .noise import make_noise_model
from .stochastic import SLLGConfig, run_sllg_ensemble
from .validation import (covariance_check, crosscheck_deterministic,
                         holonomy_defect, identity_suite, localized_twist,
                         sllg_weak_residual)

EXPERIMENTS = ("llg", "heat", "crosscheck", "identities", "sllg",
               "holonomy", "covariance")

# per-experiment defaults; every key is overridable via config file or --set
_COMMON = {
    "domain": "periodic", "n": "64", "circumference": "6.283185307179586",
    "x_min": "-90.0", "x_max": "20.0", "basepoint_index": "0",
    "alpha": "1.0", "beta": "1.0", "dt": "auto", "t_end": "0.1",
    "output_stride": "auto", "master_seed": "0",
    "initial_data": "great-circle", "k": "1.0",
    "amplitude": "0.25", "width": "6.0", "center": "-15.0", "power": "3",
    "initial_file": "",
}

DEFAULTS = {
    "llg": dict(_COMMON),
    "heat": dict(_COMMON),
    "crosscheck": dict(_COMMON, domain="line", x_min="-250.0",
                       initial_data="localized-twist",
                       grid_sizes="128,256,512", samples="10"),
    "identities": dict(_COMMON, domain="line", n="256",
                       initial_data="localized-twist"),
    "sllg": dict(_COMMON, alpha="0.5", beta="0.5", dt="0.001", t_end="0.02",
                 n_modes="4", coeff_profile="flat", coeff_decay="1.0",
                 coeff_amplitude="1.0", n_paths="8"),
    "holonomy": dict(_COMMON, domain="line", x_min="-30.0", x_max="10.0",
                     n="128", t_end="0.02", initial_data="localized-twist",
                     amplitude="0.4", width="3.0", center="-10.0"),
    "covariance": dict(_COMMON, alpha="0.5", beta="0.5", dt="0.001",
                       t_end="0.01", n_modes="4", coeff_profile="flat",
                       coeff_decay="1.0", coeff_amplitude="1.0",
                       n_paths="200", master_seed="77"),
}

VALIDATING_MODULE = {
    "llg": "llg_solver", "heat": "heat_solver", "crosscheck": "validation",
    "identities": "validation", "sllg": "stochastic + validation",
    "holonomy": "validation", "covariance": "validation",
}


def read_config_file(path: str) -> dict:
    """Flat key=value lines; blank lines and # comments ignored."""
    out = {}
    with open(path) as fh:
        for ln, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigurationError(f"{path}:{ln}: expected key=value, got {line!r}")
            key, val = line.split("=", 1)
            out[key.strip()] = val.strip()
    return out


def resolve_config(experiment: str, file_cfg: dict, sets: list,
                   seed, errors: list) -> dict:
    cfg = dict(DEFAULTS[experiment])
    for src in (file_cfg, dict(sets)):
        for key, val in src.items():
            if key not in cfg:
                errors.append(f"unknown config key {key!r} for experiment {experiment}")
            else:
                cfg[key] = val
    if seed is not None:
        cfg["master_seed"] = str(seed)
    return cfg


def _num(cfg, key, cast, errors, cond=lambda v: True, what=""):
    try:
        v = cast(cfg[key])
        if not cond(v):
            raise ValueError
        return v
    except (ValueError, KeyError):
        errors.append(f"config key {key}={cfg.get(key)!r} invalid {what}".rstrip())
        return None


def resolve_grid(cfg: dict, errors: list):
    try:
        return make_grid({"domain": cfg["domain"], "n": cfg["n"],
                          "circumference": cfg["circumference"],
                          "x_min": cfg["x_min"], "x_max": cfg["x_max"],
                          "basepoint_index": cfg["basepoint_index"]})
    except (ConfigurationError, ValueError, KeyError) as exc:
        errors.append(f"grid: {exc}")
        return None


def resolve_dt(cfg: dict, g, alpha: float, beta: float, errors: list):
    """dt = 'auto' picks 90% of the stability bound, rounded so t_end/dt is whole."""
    t_end = _num(cfg, "t_end", float, errors, lambda v: v >= 0, "(need >= 0)")
    if t_end is None or g is None:
        return None, t_end
    if cfg["dt"] == "auto":
        dt = 0.9 * stable_dt(g, alpha, beta)
        n_steps = max(1, int(np.ceil(t_end / dt))) if t_end > 0 else 1
        return t_end / n_steps if t_end > 0 else dt, t_end
    dt = _num(cfg, "dt", float, errors, lambda v: v > 0, "(need > 0)")
    return dt, t_end


def resolve_stride(cfg: dict, n_steps: int, errors: list) -> int:
    if cfg["output_stride"] == "auto":
        return max(1, n_steps // 10)
    s = _num(cfg, "output_stride", int, errors, lambda v: v >= 1, "(need >= 1)")
    return s if s is not None else 1


def build_initial_q(cfg: dict, g: Grid1D, errors: list):
    kind = cfg["initial_data"]
    if kind == "great-circle":
        k = _num(cfg, "k", float, errors)
        if k is None:
            return None
        return k * np.ones(g.n, dtype=complex)
    if kind == "localized-twist":
        amp = _num(cfg, "amplitude", float, errors)
        width = _num(cfg, "width", float, errors, lambda v: v > 0, "(need > 0)")
        center = _num(cfg, "center", float, errors)
        power = _num(cfg, "power", int, errors, lambda v: v >= 1, "(need >= 1)")
        if None in (amp, width, center, power):
            return None
        return localized_twist(g.x, amp, width, center, power)
    if kind == "file":
        path = cfg["initial_file"]
        if not path or not os.path.isfile(path):
            errors.append(f"initial_file {path!r} missing or not a file")
            return None
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape != (g.n, 2):
            errors.append(f"initial_file must have {g.n} rows of re,im; got {data.shape}")
            return None
        return data[:, 0] + 1j * data[:, 1]
    errors.append(f"unknown initial_data {kind!r}")
    return None


def build_initial_u(cfg: dict, g: Grid1D, errors: list):
    kind = cfg["initial_data"]
    if kind == "great-circle":
        k = _num(cfg, "k", float, errors)
        if k is None:
            return None
        if g.periodic and abs(k * g.length / (2.0 * np.pi) -
                              round(k * g.length / (2.0 * np.pi))) > 1e-12:
            errors.append("great-circle k must close on the periodic domain")
            return None
        return np.stack([np.cos(k * g.x), np.sin(k * g.x),
                         np.zeros(g.n)], axis=-1)
    if kind == "file":
        path = cfg["initial_file"]
        if not path or not os.path.isfile(path):
            errors.append(f"initial_file {path!r} missing or not a file")
            return None
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape != (g.n, 3):
            errors.append(f"initial_file must have {g.n} rows of ux,uy,uz; got {data.shape}")
            return None
        nrm = np.sqrt(np.sum(data * data, axis=-1))
        if np.max(np.abs(nrm - 1.0)) > 1e-8:
            errors.append("initial_file sphere field is not unit length")
            return None
        return data / nrm[:, None]
    q0 = build_initial_q(cfg, g, errors)
    if q0 is None:
        return None
    return reconstruct_frame(q0, g, np.array([1.0, 0.0, 0.0]),
                             np.array([0.0, 1.0, 0.0])).u


def _fmt(v) -> str:
    # repr round-trips floats exactly, keeping outputs byte-deterministic
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: str, header: list, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def render_report(report: dict) -> str:
    """Aligned key/value text for humans; nested dicts are flattened."""
    flat = []

    def walk(prefix, obj):
        for k, v in obj.items():
            if isinstance(v, dict):
                walk(f"{prefix}{k}.", v)
            else:
                flat.append((f"{prefix}{k}", v))

    walk("", report)
    rows = [(k, v if isinstance(v, (int, float, bool, str)) else "...")
            for k, v in flat]
    width = max((len(k) for k, _ in rows), default=0)
    return "\n".join(f"{k:<{width}}  {_fmt(v)}" for k, v in rows)


# --- experiment bodies ---
# Each runner parses and validates first and raises ConfigurationError with
# every violated precondition; with validate_only=True it stops there, so
# main() can refuse bad configs before any artifact is written. Otherwise it
# returns (report dict, monitors dict, list of CSV filenames).

def run_llg(cfg, g, outdir, validate_only=False):
    errors = []
    alpha = _num(cfg, "alpha", float, errors, lambda v: v >= 0, "(need >= 0)")
    beta = _num(cfg, "beta", float, errors)
    dt, t_end = resolve_dt(cfg, g, alpha or 0.0, beta or 0.0, errors)
    u0 = build_initial_u(cfg, g, errors)
    if errors:
        raise ConfigurationError("; ".join(errors))
    n_steps = max(1, int(round(t_end / dt))) if t_end > 0 else 0
    stride = resolve_stride(cfg, n_steps, errors)
    lcfg = LLGConfig(alpha=alpha, beta=beta, dt=dt, t_end=t_end,
                     output_stride=stride)
    lcfg.check_stability(g)
    if validate_only:
        return None
    traj = llg_integrate(u0, g, lcfg)
    rows = [(t, j, g.x[j], u[j, 0], u[j, 1], u[j, 2])
            for t, u in zip(traj.times, traj.states) for j in range(g.n)]
    write_csv(os.path.join(outdir, "series_u.csv"),
              ["t", "node", "x", "ux", "uy", "uz"], rows)
    unit_dev = max(float(np.max(np.abs(np.linalg.norm(u, axis=-1) - 1.0)))
                   for u in traj.states)
    report = {"dt": dt, "n_steps": n_steps,
              "energy_initial": exchange_energy(traj.states[0], g),
              "energy_final": exchange_energy(traj.states[-1], g),
              "unit_deviation_max": unit_dev}
    return report, {"blow_up": False}, ["series_u.csv"]


def run_heat(cfg, g, outdir, validate_only=False):
    errors = []
    alpha = _num(cfg, "alpha", float, errors, lambda v: v >= 0, "(need >= 0)")
    beta = _num(cfg, "beta", float, errors)
    dt, t_end = resolve_dt(cfg, g, alpha or 0.0, beta or 0.0, errors)
    q0 = build_initial_q(cfg, g, errors)
    if errors:
        raise ConfigurationError("; ".join(errors))
    n_steps = max(1, int(round(t_end / dt))) if t_end > 0 else 0
    stride = resolve_stride(cfg, n_steps, errors)
    hcfg = HeatConfig(alpha=alpha, beta=beta, dt=dt, t_end=t_end,
                      output_stride=stride)
    hcfg.check_stability(g)
    if validate_only:
        return None
    traj = heat_integrate(q0, g, hcfg)
    rows = [(t, j, g.x[j], q[j].real, q[j].imag)
            for t, q in zip(traj.times, traj.states) for j in range(g.n)]
    write_csv(os.path.join(outdir, "series_q.csv"),
              ["t", "node", "x", "re", "im"], rows)
    report = {"dt": dt, "n_steps": n_steps,
              "mass_initial": mass(traj.states[0], g),
              "mass_final": mass(traj.states[-1], g),
              "decay_ok": bool(traj.decay_ok)}
    return report, {"decay_ok": bool(traj.decay_ok)}, ["series_q.csv"]


def run_crosscheck(cfg, g, outdir, validate_only=False):
    errors = []
    alpha = _num(cfg, "alpha", float, errors, lambda v: v >= 0, "(need >= 0)")
    beta = _num(cfg, "beta", float, errors)
    t_end = _num(cfg, "t_end", float, errors, lambda v: v >= 0, "(need >= 0)")
    samples = _num(cfg, "samples", int, errors, lambda v: v >= 1, "(need >= 1)")
    amp = _num(cfg, "amplitude", float, errors)
    width = _num(cfg, "width", float, errors, lambda v: v > 0, "(need > 0)")
    center = _num(cfg, "center", float, errors)
    power = _num(cfg, "power", int, errors, lambda v: v >= 1, "(need >= 1)")
    x_min = _num(cfg, "x_min", float, errors)
    x_max = _num(cfg, "x_max", float, errors)
    try:
        sizes = tuple(int(s) for s in cfg["grid_sizes"].split(","))
        if not sizes or any(s < 4 for s in sizes):
            raise ValueError
    except ValueError:
        errors.append(f"grid_sizes={cfg.get('grid_sizes')!r} invalid")
        sizes = ()
    if cfg["initial_data"] != "localized-twist":
        errors.append("crosscheck supports initial_data=localized-twist only")
    if errors:
        raise ConfigurationError("; ".join(errors))
    if validate_only:
        return None
    rep = crosscheck_deterministic(
        lambda x: localized_twist(x, amp, width, center, power),
        x_min, x_max, alpha, beta, t_end, grid_sizes=sizes, samples=samples)
    rows = [(lv["n"], t, dm, dl)
            for lv in rep.levels
            for t, dm, dl in zip(lv["times"], lv["disc_max"], lv["disc_l2"])]
    write_csv(os.path.join(outdir, "series_discrepancy.csv"),
              ["n", "t", "disc_max", "disc_l2"], rows)
    return rep.to_dict(), {"decay_ok": not rep.flagged}, ["series_discrepancy.csv"]


def run_identities(cfg, g, outdir, validate_only=False):
    errors = []
    u = build_initial_u(cfg, g, errors)
    if errors:
        raise ConfigurationError("; ".join(errors))
    if validate_only:
        return None
    rep = identity_suite(u, g)
    return rep.to_dict(), {"skipped": rep.skipped}, []


def _standard_phi(g: Grid1D) -> np.ndarray:
    return np.stack([np.cos(g.x), np.sin(g.x), 0.3 * np.ones(g.n)], axis=-1)


def _sllg_setup(cfg, g, errors):
    alpha = _num(cfg, "alpha", float, errors, lambda v: v >= 0, "(need >= 0)")
    beta = _num(cfg, "beta", float, errors)
    dt, t_end = resolve_dt(cfg, g, alpha or 0.0, beta or 0.0, errors)
    n_modes = _num(cfg, "n_modes", int, errors, lambda v: v >= 0, "(need >= 0)")
    decay = _num(cfg, "coeff_decay", float, errors)
    amp = _num(cfg, "coeff_amplitude", float, errors, lambda v: v >= 0, "(need >= 0)")
    n_paths = _num(cfg, "n_paths", int, errors, lambda v: v >= 1, "(need >= 1)")
    seed = _num(cfg, "master_seed", int, errors)
    q0 = build_initial_q(cfg, g, errors)
    if cfg.get("coeff_profile") not in ("flat", "power"):
        errors.append(f"coeff_profile={cfg.get('coeff_profile')!r} invalid")
    if errors:
        raise ConfigurationError("; ".join(errors))
    scfg = SLLGConfig(alpha=alpha, beta=beta, dt=dt, t_end=t_end,
                      n_modes=n_modes, coeff_profile=cfg["coeff_profile"],
                      coeff_decay=decay, coeff_amplitude=amp)
    scfg.check_stability(g)
    return scfg, q0, n_paths, seed


def run_sllg_experiment(cfg, g, outdir, validate_only=False):
    errors = []
    scfg, q0, n_paths, seed = _sllg_setup(cfg, g, errors)
    if validate_only:
        return None
    m = np.array([1.0, 0.0, 0.0])
    e0 = np.array([0.0, 1.0, 0.0])
    paths = list(run_sllg_ensemble(q0, g, m, e0, scfg, seed, n_paths))
    stride = resolve_stride(cfg, scfg.n_steps, errors)
    p0 = paths[0]
    keep = [k for k in range(len(p0.times))
            if k % stride == 0 or k == len(p0.times) - 1]
    rows = [(p0.times[k], j, g.x[j], p0.u[k, j, 0], p0.u[k, j, 1], p0.u[k, j, 2])
            for k in keep for j in range(g.n)]
    write_csv(os.path.join(outdir, "series_u.csv"),
              ["t", "node", "x", "ux", "uy", "uz"], rows)
    res = sllg_weak_residual(paths, g, scfg.alpha, scfg.beta, _standard_phi(g))
    closure = float(np.mean([closure_defect(p.q[-1], g, p.frame(p.n_steps))
                             for p in paths])) if g.periodic else 0.0
    report = {"dt": scfg.dt, "n_steps": scfg.n_steps, "n_paths": n_paths,
              "weak_residual": res.to_dict(), "mean_closure_defect": closure}
    return report, {"blow_up": False, "closure_defect": closure}, ["series_u.csv"]


def run_holonomy(cfg, g, outdir, validate_only=False):
    errors = []
    alpha = _num(cfg, "alpha", float, errors, lambda v: v >= 0, "(need >= 0)")
    beta = _num(cfg, "beta", float, errors)
    dt, t_end = resolve_dt(cfg, g, alpha or 0.0, beta or 0.0, errors)
    q0 = build_initial_q(cfg, g, errors)
    if errors:
        raise ConfigurationError("; ".join(errors))
    hcfg = HeatConfig(alpha=alpha, beta=beta, dt=dt, t_end=t_end)
    hcfg.check_stability(g)
    if validate_only:
        return None
    traj = heat_integrate(q0, g, hcfg)
    q_path = np.array(traj.states)
    pos = holonomy_defect(q_path, g, alpha, beta, dt)
    frozen = holonomy_defect(np.array([q0] * q_path.shape[0]), g, alpha, beta, dt)
    report = {"dt": dt, "t_end": t_end,
              "solution": pos.to_dict(), "frozen_control": frozen.to_dict(),
              "separation": frozen.max_defect / max(pos.max_defect, 1e-300)}
    return report, {"decay_ok": bool(traj.decay_ok)}, []


def run_covariance(cfg, g, outdir, validate_only=False):
    errors = []
    scfg, q0, n_paths, seed = _sllg_setup(cfg, g, errors)
    if validate_only:
        return None
    m = np.array([1.0, 0.0, 0.0])
    e0 = np.array([0.0, 1.0, 0.0])
    paths = list(run_sllg_ensemble(q0, g, m, e0, scfg, seed, n_paths))
    nm = make_noise_model(g, scfg.n_modes, seed, scfg.coeff_profile,
                          scfg.coeff_decay, scfg.coeff_amplitude)
    one = np.ones(g.n)
    zero = np.zeros(g.n)
    phi1 = _standard_phi(g)
    phi2 = np.stack([zero, zero, one], axis=-1)
    phi3 = np.stack([np.sin(2.0 * g.x), zero, np.cos(g.x)], axis=-1)
    pairs = {"phi1_phi1": (phi1, phi1), "phi1_phi2": (phi1, phi2),
             "phi2_phi3": (phi2, phi3)}
    report = {"n_paths": n_paths, "t": scfg.t_end,
              "pairs": {name: covariance_check(paths, g, nm, p, s).to_dict()
                        for name, (p, s) in pairs.items()}}
    ok = all(v["within_3sigma"] for v in report["pairs"].values())
    return report, {"all_within_3sigma": ok}, []


RUNNERS = {"llg": run_llg, "heat": run_heat, "crosscheck": run_crosscheck,
           "identities": run_identities, "sllg": run_sllg_experiment,
           "holonomy": run_holonomy, "covariance": run_covariance}


def list_experiments() -> str:
    lines = ["available experiments:"]
    for name in EXPERIMENTS:
        lines.append(f"  {name:<12} validated by: {VALIDATING_MODULE[name]}")
        defaults = DEFAULTS[name]
        for key in sorted(defaults):
            lines.append(f"    {key:<16} = {defaults[key]}")
    return "\n".join(lines)


def write_manifest(outdir: str, payload: dict) -> None:
    with open(os.path.join(outdir, "manifest.json"), "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hasimoto-lab",
        description="Run an equivalence-lab experiment and write CSV/JSON artifacts.")
    parser.add_argument("experiment",
                        choices=EXPERIMENTS + ("list-experiments",))
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--set", dest="sets", action="append", default=[],
                        metavar="KEY=VALUE", help="override one config key")
    parser.add_argument("--out", help="output directory "
                        "(default: $HASIMOTO_LAB_OUT/<experiment> or ./runs/<experiment>)")
    parser.add_argument("--seed", type=int, help="override master_seed")
    args = parser.parse_args(argv)

    if args.experiment == "list-experiments":
        print(list_experiments())
        return 0

    errors = []
    file_cfg = {}
    if args.config:
        try:
            file_cfg = read_config_file(args.config)
        except (OSError, ConfigurationError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
    sets = []
    for item in args.sets:
        if "=" not in item:
            errors.append(f"--set expects key=value, got {item!r}")
            continue
        key, val = item.split("=", 1)
        sets.append((key.strip(), val.strip()))
    cfg = resolve_config(args.experiment, file_cfg, sets, args.seed, errors)
    g = resolve_grid(cfg, errors)

    if g is not None and not errors:
        try:
            RUNNERS[args.experiment](cfg, g, None, validate_only=True)
        except ConfigurationError as exc:
            errors.extend(str(exc).split("; "))
    if errors:
        for e in errors:
            print(f"config error: {e}", file=sys.stderr)
        return 2

    root = args.out or os.path.join(os.environ.get("HASIMOTO_LAB_OUT", "runs"),
                                    args.experiment)
    os.makedirs(root, exist_ok=True)

    manifest = {"experiment": args.experiment, "config": cfg,
                "master_seed": int(cfg["master_seed"]),
                "version": __version__, "status": "running",
                "outputs": [], "monitors": {}, "wall_clock_s": None}
    write_manifest(root, manifest)
    t0 = time.monotonic()
    try:
        report, monitors, outputs = RUNNERS[args.experiment](cfg, g, root)
    except ConfigurationError as exc:
        manifest.update(status="failed", error=str(exc),
                        wall_clock_s=time.monotonic() - t0)
        write_manifest(root, manifest)
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except BlowUpError as exc:
        manifest.update(status="failed", error=str(exc),
                        wall_clock_s=time.monotonic() - t0)
        write_manifest(root, manifest)
        print(f"run failed: {exc}", file=sys.stderr)
        return 1

    with open(os.path.join(root, "report.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    manifest.update(status="complete", monitors=monitors,
                    outputs=sorted(outputs + ["report.json"]),
                    wall_clock_s=time.monotonic() - t0)
    write_manifest(root, manifest)
    print(render_report(report))
    print(f"artifacts in {root}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
