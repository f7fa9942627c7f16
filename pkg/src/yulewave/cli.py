"""Command-line entry point.

Every subcommand takes typed parameters from flags and/or a JSON config file
(flags win), writes CSV output plus a metadata JSON echoing the resolved
configuration, and maps errors to exit statuses: 0 success, 1 domain or
precondition error, 2 resource cap, 3 failed verification gate. A metadata
file can be passed back as ``--config`` to reproduce the run.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DomainError, VerificationFailure, YuleWaveError
from .io import read_json, write_csv, write_json
from .rng import GENERATOR_NAME

OUTPUT_ENV = "YULEWAVE_OUTPUT_DIR"
DEFAULT_OUTPUT = "yulewave-output"


# parameter schemas: name -> (kind, default); kind drives parsing from flags and JSON
_COMMON = {"beta": ("float", 1.0)}
SCHEMAS = {
    "constants": dict(_COMMON),
    "simulate": {**_COMMON, "t": ("float", None), "n": ("int", None), "replicates": ("int", 1),
                 "workers": ("int", 1), "cap": ("int", 2**31)},
    "oracle": {**_COMMON, "kind": ("str", "max"), "t_end": ("float", 10.0), "times": ("floats", None),
               "kmax": ("int", None), "step": ("float", 1e-3)},
    "wave": {**_COMMON, "speed_kind": ("str", "plus"), "x_min": ("float", -25.0), "x_max": ("float", 25.0),
             "window": ("floats", [-20.0, 20.0]), "amplitude": ("float", 0.1)},
    "martingale": {**_COMMON, "kind": ("str", "yule-derivative"), "theta": ("float", None), "z": ("float", None),
                   "t": ("float", None), "n": ("int", None), "replicates": ("int", 1000), "workers": ("int", 1)},
    "drmota": {"n_max": ("int", 500), "grid_pow": ("int", 10)},
    "verify": {**_COMMON, "replicates": ("int", 10**5), "workers": ("int", 1),
               "t_list": ("floats", [6.0, 9.0, 12.0]), "n_list": ("ints", [2**10, 2**14, 2**18]),
               "pairs": ("pairs", [[1, 1.0], [10, 3.0], [20, 5.0]]), "t": ("float", 8.0),
               "t_base": ("float", 10.0), "phases": ("int", 16), "tolerance": ("float", 0.05)},
}
EXPERIMENTS = ("oscillation", "bst", "switch", "tails", "hf", "ft-scan")
MARTINGALES = ("yule-additive", "yule-derivative", "bst-additive", "bst-derivative")


def _convert(kind: str, value, name: str):
    if value is None:
        return None
    try:
        if kind == "float":
            return float(value)
        if kind == "int":
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        if kind == "str":
            return str(value)
        if kind == "floats":
            return [float(v) for v in value]
        if kind == "ints":
            return [int(v) for v in value]
        if kind == "pairs":
            out = []
            for v in value:
                if isinstance(v, str):
                    a, b = v.split(":")
                else:
                    a, b = v
                out.append([int(a), float(b)])
            return out
    except (TypeError, ValueError):
        raise DomainError(f"parameter {name!r} is not a valid {kind}") from None
    raise DomainError(f"unknown parameter kind {kind}")


@dataclass
class RunConfig:
    subcommand: str
    params: dict
    master_seed: int
    output_dir: Path
    experiment: str | None = None
    started: float = 0.0

    def as_dict(self) -> dict:
        d = {"subcommand": self.subcommand, "params": self.params, "master_seed": self.master_seed}
        if self.experiment is not None:
            d["experiment"] = self.experiment
        return d


def load_config(path) -> dict:
    """Config file contents; a metadata file written by a previous run is accepted as is."""
    data = read_json(path)
    if not isinstance(data, dict):
        raise DomainError("config must be a JSON object")
    if "config" in data and isinstance(data["config"], dict):
        data = data["config"]
    return data


def resolve(subcommand: str, flags: dict, config: dict | None, master_seed, output_dir,
            experiment: str | None = None) -> RunConfig:
    """Merge defaults, config file and flags; unknown keys are rejected."""
    schema = SCHEMAS[subcommand]
    config = dict(config or {})
    seed = config.pop("master_seed", 0)
    cfg_sub = config.pop("subcommand", subcommand)
    if cfg_sub != subcommand:
        raise DomainError(f"config is for {cfg_sub!r}, not {subcommand!r}")
    cfg_exp = config.pop("experiment", experiment)
    params_in = config.pop("params", {})
    params_in = {**config, **params_in} if isinstance(params_in, dict) else config
    unknown = sorted(set(params_in) - set(schema))
    if unknown:
        raise DomainError(f"unknown config keys for {subcommand}: {', '.join(unknown)}")
    params = {name: default for name, (_, default) in schema.items()}
    for name, value in params_in.items():
        params[name] = _convert(schema[name][0], value, name)
    for name, value in flags.items():
        if value is not None:
            params[name] = _convert(schema[name][0], value, name)
    if master_seed is not None:
        seed = master_seed
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise DomainError("master seed must fit in 64 unsigned bits")
    if experiment is not None and cfg_exp not in (None, experiment):
        raise DomainError(f"config is for experiment {cfg_exp!r}, not {experiment!r}")
    out = Path(output_dir or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT)
    return RunConfig(subcommand, params, seed, out, experiment, time.perf_counter())


def _metadata(cfg: RunConfig, outputs: list, summary: dict | None = None) -> dict:
    return {"config": cfg.as_dict(), "outputs": [Path(p).name for p in outputs], "summary": summary or {},
            "version": __version__, "generator": GENERATOR_NAME,
            "wall_time_seconds": round(time.perf_counter() - cfg.started, 3)}


def _finish(cfg: RunConfig, stem: str, outputs: list, summary: dict | None = None) -> Path:
    return write_json(cfg.output_dir / f"{stem}.meta.json", _metadata(cfg, outputs, summary))


# ---------------------------------------------------------------------------
# subcommand bodies


def run_constants(cfg: RunConfig) -> int:
    from .constants import ModelParams, solve_critical_thetas

    k = solve_critical_thetas(ModelParams(cfg.params["beta"]))
    d = k.as_dict()
    flat = {}
    for key, v in d.items():
        if isinstance(v, dict):
            flat.update({f"{key}_{sub}": x for sub, x in v.items()})
        else:
            flat[key] = v
    path = write_csv(cfg.output_dir / "constants.csv", list(flat), [list(flat.values())])
    _finish(cfg, "constants", [path], d)
    print(json.dumps(d, sort_keys=True))
    return 0


def run_simulate(cfg: RunConfig) -> int:
    from .constants import ModelParams
    from .simulator import simulate_batch

    p = cfg.params
    if (p["t"] is None) == (p["n"] is None):
        raise DomainError("give exactly one of --t or --n")
    batch = simulate_batch(t=p["t"], n=p["n"], params=ModelParams(p["beta"]), replicates=p["replicates"],
                           master_seed=cfg.master_seed, cap=p["cap"], workers=p["workers"])
    cols = batch.columns()
    path = write_csv(cfg.output_dir / "simulate.csv", list(cols), zip(*cols.values()))
    _finish(cfg, "simulate", [path], {"mean_x_max": float(np.mean(batch.x_max)),
                                      "mean_x_min": float(np.mean(batch.x_min))})
    return 0


def run_oracle(cfg: RunConfig) -> int:
    from .constants import ModelParams
    from .oracle import solve_hierarchy

    p = cfg.params
    if p["kind"] not in ("max", "min"):
        raise DomainError("kind must be 'max' or 'min'")
    t_end = p["t_end"]
    times = sorted(p["times"]) if p["times"] else list(np.arange(0.0, t_end + 1e-9, 1.0))
    if times[-1] > t_end:
        raise DomainError("requested times exceed --t-end")
    sol = solve_hierarchy(p["kind"], p["kmax"], t_end, ModelParams(p["beta"]), step=p["step"])
    rows = []
    for t in times:
        rows.extend([int(k), float(t), float(v)] for k, v in enumerate(sol.at_time(t)))
    path = write_csv(cfg.output_dir / "oracle.csv", ["k", "t", "value"], rows)
    _finish(cfg, "oracle", [path], {"kmax": sol.kmax,
                                    "value": "P(X_max <= k)" if p["kind"] == "max" else "P(X_min >= k)"})
    return 0


def run_wave(cfg: RunConfig) -> int:
    from .constants import ModelParams, solve_critical_thetas
    from .waves import (GRID_STEPS_PER_UNIT, max_wave, min_tail_check, min_wave, right_tail_check,
                        wave_residual, zero_speed_wave)

    p = cfg.params
    params = ModelParams(p["beta"])
    kind = p["speed_kind"]
    if not p["x_min"] < p["x_max"]:
        raise DomainError("--x-min must be below --x-max")
    summary = {"speed_kind": kind}
    if kind == "zero":
        # P(x) = exp(-2 - a sin 2 pi x), monotone decreasing for a < ln 2 / pi
        j = np.arange(GRID_STEPS_PER_UNIT) / GRID_STEPS_PER_UNIT
        w = zero_speed_wave(np.exp(-2.0 - p["amplitude"] * np.sin(2 * np.pi * j)), p["x_min"], p["x_max"])
        summary["direction"] = w.direction
    else:
        k = solve_critical_thetas(params)
        if kind == "plus":
            w = max_wave(k, params)
            fit = right_tail_check(w, k.theta_plus)
            summary.update(tail_constant=fit.constant, tail_slope=fit.slope,
                           tail_slope_deviation=fit.max_slope_deviation, tail_window=list(fit.window))
        elif kind == "minus":
            w = min_wave(k, params)
            chk = min_tail_check(w)
            summary.update(double_exp_bound=chk.a_bound, loglog_slope=chk.loglog_slope)
        else:
            raise DomainError("speed kind must be 'plus', 'minus' or 'zero'")
        summary.update(residual=wave_residual(w, params, tuple(p["window"])), speed=w.speed, theta=w.theta)
    x = w.grid
    m = (x >= p["x_min"] - 1e-12) & (x <= p["x_max"] + 1e-12)
    if not m.any():
        raise DomainError("requested range lies outside the wave table")
    path = write_csv(cfg.output_dir / f"wave_{kind}.csv", ["x", "phi"], zip(x[m], w.values[m]))
    _finish(cfg, f"wave_{kind}", [path], summary)
    return 0


def run_martingale(cfg: RunConfig) -> int:
    from .constants import ModelParams, solve_critical_thetas
    from .martingales import additive_samples, bst_additive, bst_derivative, derivative_samples
    from .simulator import simulate_batch

    p = cfg.params
    params = ModelParams(p["beta"])
    kind = p["kind"]
    if kind not in MARTINGALES:
        raise DomainError(f"kind must be one of {', '.join(MARTINGALES)}")
    if kind.startswith("yule"):
        if p["t"] is None:
            raise DomainError("--t is required for Yule-time martingales")
        if p["theta"] is None:
            p["theta"] = solve_critical_thetas(params).theta_plus
        par = p["theta"]
        fn = derivative_samples if kind == "yule-derivative" else additive_samples
        vals = fn(par, p["t"], p["replicates"], cfg.master_seed, params, p["workers"])
    else:
        if p["n"] is None or p["z"] is None:
            raise DomainError("--n and --z are required for tree martingales")
        par = p["z"]
        batch = simulate_batch(n=p["n"], params=params, replicates=p["replicates"], master_seed=cfg.master_seed,
                               workers=p["workers"], keep_profiles=True)
        fn = bst_derivative if kind == "bst-derivative" else bst_additive
        vals = np.array([fn(prof, par) for prof in batch.profiles])
    path = write_csv(cfg.output_dir / "martingale.csv", ["replicate", "value"], enumerate(vals))
    _finish(cfg, "martingale", [path], {"mean": float(np.mean(vals)), "parameter": par})
    return 0


def run_drmota(cfg: RunConfig) -> int:
    from .drmota import extract_D

    p = cfg.params
    rep = extract_D(p["n_max"], h=2.0 ** -p["grid_pow"])
    rows = [[0, rep.log_y[0], math.nan]] + [[int(n), rep.log_y[n], d] for n, d in zip(rep.n, rep.D)]
    path = write_csv(cfg.output_dir / "drmota.csv", ["n", "ln_y_n_1", "D_n"], rows)
    _finish(cfg, "drmota", [path], {"D_estimate": rep.D_estimate, "cauchy_tail": rep.cauchy_tail})
    return 0


def _run_experiment(cfg: RunConfig):
    from . import harness
    from .constants import ModelParams

    p = cfg.params
    params = ModelParams(p["beta"])
    seed, R, workers = cfg.master_seed, p["replicates"], p["workers"]
    e = cfg.experiment
    if e == "oscillation":
        res = harness.oscillation_experiment(p["t_list"], R, params, seed, workers=workers)
        return res, res.verdicts(p["tolerance"]), [res.lattice_table()]
    if e == "bst":
        res = harness.bst_experiment(p["n_list"], R, seed, workers=workers)
        return res, res.verdicts(p["tolerance"]), [res.lattice_table()]
    if e == "switch":
        res = harness.switch_identity_check([tuple(x) for x in p["pairs"]], R, params, seed, workers=workers)
        return res, res.verdicts(), []
    if e == "tails":
        fit = harness.tail_fit(p["t"], R, params, seed, workers=workers)
        header = ["t", "alpha_prime", "C_prime", "slope_se", "r_squared", "points", "right_slope",
                  "left_slope_from_2", "left_slope_from_4"]
        row = [fit.t, fit.alpha_prime, fit.C_prime, fit.slope_se, fit.r_squared, fit.points, fit.right_slope,
               fit.left_slope_from_2, fit.left_slope_from_4]

        class _Table:
            def table(self):
                return header, [row]

        v = [harness.Verdict("tails", "slope_negative_at_99", -fit.alpha_prime, 0.0, fit.negative_at_99)]
        return _Table(), v, []
    if e == "hf":
        res = harness.hf_pf_comparison(p["t_list"], R, params, seed, workers=workers)
        return res, res.verdicts(), []
    if e == "ft-scan":
        res = harness.ft_periodicity_scan(p["t_base"], p["phases"], R, params, seed, workers=workers)
        return res, res.verdicts(), []
    raise DomainError(f"unknown experiment {e!r}")


def run_verify(cfg: RunConfig) -> int:
    res, verdicts, extra = _run_experiment(cfg)
    stem = cfg.experiment.replace("-", "_")
    header, rows = res.table()
    outputs = [write_csv(cfg.output_dir / f"{stem}.csv", header, rows)]
    for h, r in extra:
        outputs.append(write_csv(cfg.output_dir / f"{stem}_lattice.csv", h, r))
    vpath = write_json(cfg.output_dir / f"{stem}_verdict.json", [v.as_dict() for v in verdicts])
    ok = all(v.passed for v in verdicts)
    _finish(cfg, stem, outputs + [vpath], {"pass": ok})
    for v in verdicts:
        print(f"{'PASS' if v.passed else 'FAIL'} {v.experiment} {v.statistic} = {v.value:.6g} "
              f"(threshold {v.threshold:.6g})")
    if not ok:
        raise VerificationFailure(f"{cfg.experiment}: {sum(not v.passed for v in verdicts)} gate(s) failed")
    return 0


RUNNERS = {"constants": run_constants, "simulate": run_simulate, "oracle": run_oracle, "wave": run_wave,
           "martingale": run_martingale, "drmota": run_drmota, "verify": run_verify}


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    """Reports usage errors with exit status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


_FLAG_NARGS = {"floats": "+", "ints": "+", "pairs": "+"}
_FLAG_TYPES = {"float": float, "int": int, "str": str, "floats": float, "ints": int, "pairs": str}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="yulewave", description="Extremes of the Yule process and binary search trees.")
    parser.add_argument("--version", action="version", version=f"yulewave {__version__}")
    subs = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    for name, schema in SCHEMAS.items():
        sp = subs.add_parser(name)
        if name == "verify":
            sp.add_argument("experiment", choices=EXPERIMENTS)
        sp.add_argument("--config", type=Path, help="JSON config or metadata file from a previous run")
        sp.add_argument("--master-seed", type=int, default=None)
        sp.add_argument("--output-dir", type=Path, default=None,
                        help=f"defaults to ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT}")
        for key, (kind, _) in schema.items():
            sp.add_argument("--" + key.replace("_", "-"), dest=key, type=_FLAG_TYPES[kind],
                            nargs=_FLAG_NARGS.get(kind), default=None)
    return parser


def parse_and_dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        flags = {k: getattr(args, k) for k in SCHEMAS[args.subcommand]}
        config = load_config(args.config) if args.config else None
        cfg = resolve(args.subcommand, flags, config, args.master_seed, args.output_dir,
                      getattr(args, "experiment", None))
        return RUNNERS[args.subcommand](cfg)
    except YuleWaveError as e:
        print(f"yulewave: {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except (OSError, json.JSONDecodeError) as e:
        print(f"yulewave: {e}", file=sys.stderr)
        return 1


def main():
    sys.exit(parse_and_dispatch())


if __name__ == "__main__":
    main()
