"""Command-line runner: sampling, evolution, named experiments, validation.

Exit codes: 0 success, 1 criteria failed, 2 invalid configuration,
3 certification failure after the enlarged-window retry, 4 I/O error.
"""

from __future__ import annotations

import argparse
import glob
import json
import os
import sys

from . import dynamics, experiments, validate
from .errors import CertificationFailure, HamlabError, InvalidParameterError
from .points import sample_planar_unit_poisson, sample_poisson_line
from .profiles import stationary_profile
from .rng import RngStream

EXIT_OK = 0
EXIT_CRITERIA = 1
EXIT_CONFIG = 2
EXIT_CERTIFICATION = 3
EXIT_IO = 4


def _parse_grid(text):
    if text is None:
        return None
    try:
        return tuple(float(v) for v in str(text).split(",") if v != "")
    except ValueError as exc:
        raise InvalidParameterError(f"bad grid {text!r}") from exc


def _build_parser():
    p = argparse.ArgumentParser(prog="hamlab", description="Hammersley process simulation laboratory")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--lambda", dest="lam", type=float, default=None)
        sp.add_argument("--rho", type=float, default=None)
        sp.add_argument("--t", type=float, default=None)
        sp.add_argument("--t-grid", dest="t_grid", type=str, default=None)
        sp.add_argument("--x", type=float, default=None)
        sp.add_argument("--x-grid", dest="x_grid", type=str, default=None)
        sp.add_argument("--u-grid", dest="u_grid", type=str, default=None)
        sp.add_argument("--replicas", type=int, default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--window", type=str, default=None)
        sp.add_argument("--out", type=str, default=None)
        sp.add_argument("--format", dest="fmt", choices=("csv", "json"), default=None)
        sp.add_argument("--trace", action="store_true", default=None)
        sp.add_argument("--scale", choices=("quick", "full"), default=None)
        sp.add_argument("--config", type=str, default=None, help="JSON config file")
        sp.add_argument("--print-config", action="store_true")

    sp = sub.add_parser("sample", help="dump a point set")
    sp.add_argument("--kind", choices=("line", "planar"), default="line")
    common(sp)

    sp = sub.add_parser("evolve", help="run the dynamics and dump artifacts")
    common(sp)

    sp = sub.add_parser("experiment", help="run a named experiment")
    sp.add_argument("name", nargs="?", default=None)
    common(sp)

    sp = sub.add_parser("validate", help="run the exact pathwise identity suite")
    sp.add_argument("--inject-fault", dest="inject_fault", default=None,
                    help="testing hook, e.g. spawn-skip")
    common(sp)

    sp = sub.add_parser("report", help="summarize experiment summary JSON files")
    sp.add_argument("paths", nargs="*", default=[])
    common(sp)
    return p


_DEFAULTS = {
    "seed": 0,
    "threads": max(os.cpu_count() or 1, 1),
    "fmt": "csv",
    "scale": "quick",
    "out": ".",
}


def _resolve_config(args):
    """defaults < config file < explicit CLI flags."""
    cfg = dict(_DEFAULTS)
    if getattr(args, "config", None):
        try:
            with open(args.config) as f:
                loaded = json.load(f)
        except FileNotFoundError as exc:
            raise InvalidParameterError(f"config file not found: {args.config}") from exc
        except json.JSONDecodeError as exc:
            raise InvalidParameterError(
                f"malformed config file {args.config}: line {exc.lineno} column {exc.colno}: {exc.msg}"
            ) from exc
        if not isinstance(loaded, dict):
            raise InvalidParameterError("config file must hold a JSON object")
        allowed = {"lam", "lambda", "rho", "t", "t_grid", "x", "x_grid", "u_grid",
                   "replicas", "seed", "threads", "window", "out", "format", "scale", "name", "kind"}
        for key, val in loaded.items():
            if key not in allowed:
                raise InvalidParameterError(f"unknown config field {key!r}")
            if key == "lambda":
                key = "lam"
            if key == "format":
                key = "fmt"
            cfg[key] = val
    for key in ("lam", "rho", "t", "t_grid", "x", "x_grid", "u_grid", "replicas",
                "seed", "threads", "window", "out", "fmt", "scale", "trace", "name", "kind"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    for key in ("t_grid", "x_grid", "u_grid"):
        if isinstance(cfg.get(key), str):
            cfg[key] = _parse_grid(cfg[key])
    if isinstance(cfg.get("window"), str):
        cfg["window"] = _parse_grid(cfg["window"])
    return cfg


def _out_path(cfg, name):
    out = cfg.get("out") or "."
    os.makedirs(out, exist_ok=True)
    return os.path.join(out, name)


def cmd_sample(cfg):
    stream = RngStream(int(cfg["seed"])).child("cli-sample")
    kind = cfg.get("kind", "line")
    fmt = cfg["fmt"]
    if kind == "line":
        rate = cfg.get("lam") or 1.0
        window = cfg.get("window") or (0.0, 100.0)
        pts = sample_poisson_line(rate, window[:2], stream)
        path = _out_path(cfg, f"sample-line.{fmt}")
    else:
        window = cfg.get("window") or (0.0, 10.0, 10.0)
        if len(window) != 3:
            raise InvalidParameterError("planar sampling needs --window a,b,T")
        pts = sample_planar_unit_poisson(window, stream)
        path = _out_path(cfg, f"sample-planar.{fmt}")
    (pts.to_csv if fmt == "csv" else pts.to_json)(path)
    print(path)
    return EXIT_OK


def cmd_evolve(cfg):
    lam = cfg.get("lam") or 1.0
    t = cfg.get("t") or 10.0
    window = cfg.get("window") or (-4.0 * t / lam**2 - 10.0, 4.0 * t / lam**2 + 10.0)
    stream = RngStream(int(cfg["seed"])).child("cli-evolve")
    initial = stationary_profile(lam, window[:2], stream.child("profile"))
    epochs = sample_planar_unit_poisson((window[0], window[1], t), stream.child("epochs"))
    state, log = dynamics.evolve(initial, epochs)
    final_path = _out_path(cfg, "final-config.csv")
    with open(final_path, "w") as f:
        f.write("x\n")
        for v in state.config.positions:
            f.write(f"{float(v)!r}\n")
    written = [final_path]
    if cfg.get("trace"):
        trace_path = _out_path(cfg, "event-log.csv")
        log.to_csv(trace_path)
        written.append(trace_path)
    for path in written:
        print(path)
    return EXIT_OK


def cmd_experiment(cfg):
    name = cfg.get("name")
    if name not in experiments.EXPERIMENTS:
        known = ", ".join(sorted(experiments.EXPERIMENTS))
        print(f"unknown experiment {name!r}; choose one of: {known}", file=sys.stderr)
        return EXIT_CONFIG
    overrides = {}
    if cfg.get("lam") is not None:
        overrides["lam"] = cfg["lam"]
    if cfg.get("rho") is not None:
        overrides["rho"] = cfg["rho"]
    if cfg.get("replicas") is not None:
        overrides["n"] = int(cfg["replicas"])
    if cfg.get("t") is not None:
        overrides["t"] = cfg["t"]
    if cfg.get("t_grid") is not None:
        overrides["t_grid"] = cfg["t_grid"]
    if cfg.get("x") is not None:
        overrides["x"] = cfg["x"]
    if cfg.get("x_grid") is not None:
        overrides["x_grid"] = cfg["x_grid"]
    if cfg.get("u_grid") is not None:
        overrides["u_grid"] = cfg["u_grid"]
    import inspect

    fn, defaults = experiments.EXPERIMENTS[name]
    target = fn
    if hasattr(fn, "__wrapped__"):
        target = fn.__wrapped__
    try:
        sig_params = set(inspect.signature(target).parameters)
    except (TypeError, ValueError):
        sig_params = set(overrides) | {"t_grid", "n", "lam", "rho"}
    if "t" in overrides and "t" not in sig_params and "t_grid" in sig_params:
        overrides["t_grid"] = (overrides.pop("t"),)
    overrides = {k: v for k, v in overrides.items() if k in sig_params or k in defaults}
    result = experiments.run_named_experiment(
        name, master_seed=int(cfg["seed"]), threads=int(cfg["threads"]), **overrides
    )
    rows_path = _out_path(cfg, f"{name}-rows.csv")
    summary_path = _out_path(cfg, f"{name}-summary.json")
    result.write_rows_csv(rows_path)
    result.write_summary_json(summary_path)
    for line in result.pass_fail_lines():
        print(line)
    print(rows_path)
    print(summary_path)
    return EXIT_OK if result.passed else EXIT_CRITERIA


def cmd_validate(cfg, fault=None):
    results, elapsed = validate.run_validation(
        master_seed=int(cfg["seed"]), scale=cfg["scale"], fault=fault
    )
    for r in results:
        print(r.line())
    print(f"elapsed: {elapsed:.1f}s")
    failing = [r for r in results if not r.passed]
    if failing:
        first = failing[0]
        print(f"first failing identity: {first.name} (replay seed {first.replay_seed})", file=sys.stderr)
        return EXIT_CRITERIA
    return EXIT_OK


def cmd_report(cfg, paths):
    if not paths:
        paths = sorted(glob.glob(os.path.join(cfg.get("out") or ".", "*-summary.json")))
    if not paths:
        print("no summary files found", file=sys.stderr)
        return EXIT_CONFIG
    all_pass = True
    for path in paths:
        try:
            with open(path) as f:
                entries = json.load(f)
        except OSError:
            print(f"cannot read {path}", file=sys.stderr)
            return EXIT_IO
        for e in entries:
            tag = "PASS" if e.get("pass") else "FAIL"
            all_pass = all_pass and bool(e.get("pass"))
            print(f"[{tag}] {e.get('experiment')}/{e.get('criterion')}: "
                  f"estimate={e.get('estimate'):.6g} target={e.get('target')}")
    return EXIT_OK if all_pass else EXIT_CRITERIA


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        cfg = _resolve_config(args)
        if getattr(args, "print_config", False):
            print(json.dumps(cfg, indent=2, sort_keys=True, default=str))
            return EXIT_OK
        if args.command == "sample":
            return cmd_sample(cfg)
        if args.command == "evolve":
            return cmd_evolve(cfg)
        if args.command == "experiment":
            return cmd_experiment(cfg)
        if args.command == "validate":
            return cmd_validate(cfg, fault=getattr(args, "inject_fault", None))
        if args.command == "report":
            return cmd_report(cfg, args.paths)
        return EXIT_CONFIG
    except CertificationFailure as exc:
        print(f"certification failure: {exc}", file=sys.stderr)
        return EXIT_CERTIFICATION
    except InvalidParameterError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except HamlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CRITERIA


if __name__ == "__main__":
    sys.exit(main())
