"""Command-line entry point.

Configuration comes from an INI-style file (``key = value`` under a
``[run]`` section, optional ``[model]``/``[drift]`` parameter sections)
with command-line flags taking precedence. Unknown keys are rejected:
a silently ignored typo could invalidate a whole study. Outputs are CSV
series plus JSON reports, each carrying a header comment with the package
version, seed and config hash.

Exit codes: 0 success, 1 error, 2 a report pass-flag failed.
"""

import argparse
import configparser
import json
import os
import sys

import numpy as np

from . import diagnostics
from .errors import ConfigError, SlowFastError
from .fastproc import (estimate_lambda, invariant_density_grid,
                       laplace_limit_measure)
from .filtering import (FilterConfig, filter_vs_invariant,
                        run_fkk_particle_filter)
from .limit import AveragedField, convergence_study, solve_limit_ode
from .potential import (check_assumptions, find_global_minima, make_drift,
                        make_model)
from .sde import (NoiseSchedule, SimConfig, simulate_coupled,
                  simulate_frozen)
from .utils import __version__, config_hash, smoothed_sign, write_csv


def _write_json(path, payload, seed, cfg_hash):
    # written to a sibling temp file first so readers never see a torn report
    payload = {"meta": {"slowfast": __version__, "seed": seed,
                        "config": cfg_hash}, **payload}
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
    os.replace(tmp, path)

COMMANDS = ("simulate", "frozen", "invariant", "limit", "converge", "filter",
            "quasipotential", "spectra", "assumptions", "reproduce")

_FLOAT_LIST = "float_list"
_RUN_KEYS = {
    "command": str,
    "model": str,
    "drift": str,
    "alpha": float,
    "big_c": float,
    "epsilon": _FLOAT_LIST,
    "horizon": float,
    "paths": int,
    "seed": int,
    "x0": float,
    "y0": float,
    "output_dir": str,
    "s": float,
    "s_list": _FLOAT_LIST,
    "x": float,
    "x_grid": str,
    "n_particles": int,
    "grid_num": int,
    "dt": float,
    "t_max": float,
    "dt_max": float,
    "stab_c": float,
    "ensemble": int,
    "f_width": float,
    "ball_radius": float,
    "limit_dt": float,
    "filippov_max_violation": float,
}

_DEFAULTS = {
    "model": "example_2_1",
    "drift": "cos",
    "alpha": 0.25,
    "big_c": 1.0,
    "epsilon": [0.05, 0.02, 0.01],
    "horizon": 1.0,
    "paths": 24,
    "seed": 42,
    "x0": 0.0,
    "y0": 0.0,
    "output_dir": "out",
    "s": 0.3,
    "s_list": [0.4, 0.32, 0.27],
    "x": 0.0,
    "x_grid": "-3:3:13",
    "n_particles": 1000,
    "grid_num": 4001,
    "dt": 0.02,
    "t_max": 200.0,
    "dt_max": 0.01,
    "stab_c": 0.05,
    "ensemble": 400,
    "f_width": 0.25,
    "ball_radius": 0.3,
    "limit_dt": 2e-3,
    "filippov_max_violation": 0.01,
}


class RunConfig:
    """Validated run configuration: a plain attribute bag."""

    def __init__(self, values, model_params, drift_params):
        self.values = values
        self.model_params = model_params
        self.drift_params = drift_params
        for k, v in values.items():
            setattr(self, k, v)
        self._validate()

    def _validate(self):
        v = self.values
        if v.get("command") not in COMMANDS:
            raise ConfigError(f"command must be one of {COMMANDS}, got "
                              f"{v.get('command')!r}")
        if not 0.0 < v["alpha"] < 1.0:
            raise ConfigError("alpha must lie in (0,1)")
        if any(e <= 0 for e in v["epsilon"]):
            raise ConfigError("epsilon values must be positive")
        if v["horizon"] <= 0:
            raise ConfigError("horizon must be positive")
        if v["paths"] < 1:
            raise ConfigError("paths must be >= 1")
        if v["s"] <= 0 or any(s <= 0 for s in v["s_list"]):
            raise ConfigError("s values must be positive")

    def hash(self):
        flat = dict(self.values)
        flat["epsilon"] = ",".join(repr(e) for e in flat["epsilon"])
        flat["s_list"] = ",".join(repr(s) for s in flat["s_list"])
        flat.update({f"model.{k}": v for k, v in self.model_params.items()})
        flat.update({f"drift.{k}": v for k, v in self.drift_params.items()})
        return config_hash(flat)

    def x_grid_values(self):
        try:
            lo, hi, n = self.x_grid.split(":")
            return np.linspace(float(lo), float(hi), int(n))
        except ValueError as exc:
            raise ConfigError(f"bad x_grid '{self.x_grid}'; want lo:hi:n") \
                from exc


def _coerce(key, raw):
    kind = _RUN_KEYS[key]
    try:
        if kind is _FLOAT_LIST:
            if isinstance(raw, (list, tuple)):
                return [float(v) for v in raw]
            return [float(v) for v in str(raw).split(",") if v.strip()]
        return kind(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for '{key}': {raw!r}") from exc


def parse_config(file=None, flags=None) -> RunConfig:
    """Merge defaults, config file and flags (flags win); strict keys."""
    values = dict(_DEFAULTS)
    model_params = {}
    drift_params = {}
    if file is not None:
        cp = configparser.ConfigParser()
        read = cp.read(file)
        if not read:
            raise ConfigError(f"config file not found: {file}")
        for section in cp.sections():
            if section not in ("run", "model", "drift"):
                raise ConfigError(f"unknown section [{section}]")
        if "run" in cp:
            for key, raw in cp["run"].items():
                if key not in _RUN_KEYS:
                    raise ConfigError(f"unknown key '{key}' in [run]")
                values[key] = _coerce(key, raw)
        if "model" in cp:
            model_params = {k: float(v) for k, v in cp["model"].items()}
        if "drift" in cp:
            drift_params = {k: float(v) for k, v in cp["drift"].items()}
    for key, raw in (flags or {}).items():
        if key not in _RUN_KEYS:
            raise ConfigError(f"unknown flag '{key}'")
        values[key] = _coerce(key, raw)
    if "command" not in values:
        raise ConfigError("no command given")
    return RunConfig(values, model_params, drift_params)


def dispatch(cfg: RunConfig) -> int:
    """Run the configured command; returns the process exit code."""
    os.makedirs(cfg.output_dir, exist_ok=True)
    p = make_model(cfg.model, **cfg.model_params)
    b = make_drift(cfg.drift, **cfg.drift_params)
    sch = NoiseSchedule(alpha=cfg.alpha, big_c=cfg.big_c)
    h = cfg.hash()
    out = lambda name: os.path.join(cfg.output_dir, name)

    if cfg.command == "simulate":
        sim = SimConfig(epsilon=cfg.epsilon[0], horizon=cfg.horizon,
                        x0=(cfg.x0,), y0=(cfg.y0,), schedule=sch,
                        dt_max=cfg.dt_max, stab_c=cfg.stab_c, seed=cfg.seed)
        traj = simulate_coupled(p, b, sim)
        traj.to_csv(out("trajectory.csv"), seed=cfg.seed, cfg_hash=h)
        return 0

    if cfg.command == "frozen":
        res = simulate_frozen(p, cfg.x, cfg.s, (0.0, cfg.t_max), cfg.dt,
                              n_paths=cfg.ensemble, seed=cfg.seed,
                              z0=cfg.y0, record_stride=max(
                                  1, int(0.1 / cfg.dt)))
        n_paths, n_rec, m = res.zs.shape
        cols = ["path", "t"] + [f"y_{j+1}" for j in range(m)]
        rows = ([i, res.times[k]] + list(res.zs[i, k])
                for i in range(n_paths) for k in range(n_rec))
        write_csv(out("frozen.csv"), cols, rows, seed=cfg.seed, cfg_hash=h)
        return 0

    if cfg.command == "invariant":
        if p.m > 2:
            raise SlowFastError("quadrature supports m <= 2")
        gm = invariant_density_grid(p, cfg.x, cfg.s, num=cfg.grid_num)
        gm.to_csv(out("density.csv"), seed=cfg.seed, cfg_hash=h)
        ms = find_global_minima(p, cfg.x)
        try:
            am = laplace_limit_measure(ms)
            am.to_csv(out("atoms.csv"), seed=cfg.seed, cfg_hash=h)
        except SlowFastError as exc:
            print(f"atoms skipped: {exc}", file=sys.stderr)
        return 0

    if cfg.command == "limit":
        fld = AveragedField(potential=p, drift=b, mode="laplace",
                            s_val=float(sch.s(min(cfg.epsilon))))
        traj = solve_limit_ode(fld, cfg.x0, cfg.horizon, cfg.limit_dt)
        traj.to_csv(out("limit.csv"), seed=cfg.seed, cfg_hash=h)
        return 0

    if cfg.command == "converge":
        res = convergence_study(p, b, sch, cfg.epsilon, cfg.paths,
                                cfg.horizon, cfg.seed, x0=cfg.x0, y0=cfg.y0,
                                limit_dt=cfg.limit_dt, dt_max=cfg.dt_max,
                                stab_c=cfg.stab_c)
        res.to_csv(out("convergence.csv"), seed=cfg.seed, cfg_hash=h)
        res.limit.to_csv(out("limit.csv"), seed=cfg.seed, cfg_hash=h)
        return 0

    if cfg.command == "filter":
        eps = cfg.epsilon[0]
        sim = SimConfig(epsilon=eps, horizon=cfg.horizon, x0=(cfg.x0,),
                        y0=(cfg.y0,), schedule=sch, dt_max=cfg.dt_max,
                        stab_c=cfg.stab_c, seed=cfg.seed)
        traj = simulate_coupled(p, b, sim)
        fc = FilterConfig(n_particles=cfg.n_particles, epsilon=eps,
                          schedule=sch, seed=cfg.seed)
        fsig = smoothed_sign(cfg.f_width)
        res = run_fkk_particle_filter(
            p, b, traj, fc,
            test_functions={"sign": fsig,
                            "y": lambda y: y[..., 0],
                            "y2": lambda y: y[..., 0] ** 2})
        res.summaries_to_csv(out("filter.csv"), seed=cfg.seed, cfg_hash=h)
        disc = filter_vs_invariant(res, p, "sign", fsig,
                                   grid_num=cfg.grid_num)
        disc.to_csv(out("discrepancy.csv"), seed=cfg.seed, cfg_hash=h)
        return 0

    if cfg.command == "quasipotential":
        qp = estimate_lambda(p, cfg.x_grid_values())
        qp.to_csv(out("quasipotential.csv"), seed=cfg.seed, cfg_hash=h)
        _write_json(out("quasipotential.json"),
                    {"lambda_hat": qp.lambda_hat, "argmax_x": qp.argmax_x},
                    cfg.seed, h)
        return 0

    if cfg.command == "spectra":
        scfg = diagnostics.SlowdownConfig(ensemble=cfg.ensemble, dt=cfg.dt,
                                          seed=cfg.seed,
                                          f_width=cfg.f_width,
                                          grid_num=min(cfg.grid_num, 3001))
        rep = diagnostics.spectral_slowdown_study(p, cfg.x, cfg.s_list, scfg)
        rows = []
        for s in cfg.s_list:
            rows.append([s, 1.0 / s ** 2, rep.metrics[f"tau_s={s:g}"],
                         rep.metrics[f"fit_r2_s={s:g}"]])
        write_csv(out("spectra.csv"), ["s", "inv_s_sq", "tau", "fit_r2"],
                  rows, seed=cfg.seed, cfg_hash=h)
        _write_json(out("spectra.json"), {"report": json.loads(rep.to_json())},
                    cfg.seed, h)
        return 0 if rep.ok() else 2

    if cfg.command == "assumptions":
        audit = check_assumptions(p, b, seed=cfg.seed)
        _write_json(out("assumptions.json"), {"report": audit.to_dict()},
                    cfg.seed, h)
        write_csv(out("g_curve.csv"), ["r", "g"],
                  zip(audit.r_grid, audit.g_curve), seed=cfg.seed,
                  cfg_hash=h)
        return 0

    if cfg.command == "reproduce":
        rep = diagnostics.reproduce_example(
            cfg.model, overrides={"seed": cfg.seed, "alpha": cfg.alpha,
                                  "big_c": cfg.big_c,
                                  "eps_list": cfg.epsilon,
                                  "paths": cfg.paths,
                                  "horizon": cfg.horizon,
                                  "limit_dt": cfg.limit_dt,
                                  "filippov_max_violation":
                                      cfg.filippov_max_violation})
        _write_json(out(f"report_{cfg.model}.json"),
                    {"report": json.loads(rep.to_json())}, cfg.seed, h)
        return 0 if rep.ok() else 2

    raise ConfigError(f"unhandled command {cfg.command}")


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="slowfast",
        description="Slow-fast coupled diffusion laboratory")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="INI config file")
    for key, kind in _RUN_KEYS.items():
        if key == "command":
            continue
        flag = "--" + key.replace("_", "-")
        ap.add_argument(flag, dest=key, default=None)
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    flags = {"command": args.command}
    for key in _RUN_KEYS:
        if key == "command":
            continue
        val = getattr(args, key, None)
        if val is not None:
            flags[key] = val
    try:
        cfg = parse_config(file=args.config, flags=flags)
        code = dispatch(cfg)
    except SlowFastError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return code


if __name__ == "__main__":
    sys.exit(main())
