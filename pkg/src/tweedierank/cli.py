"""Command line entry point: simulate, fit, decompose, gradcheck.

Every command is deterministic given (config, seed), prints a run manifest,
and uses exit codes 0 (success), 1 (validation error), 2 (runtime error).
Configuration is a single JSON file mirroring the config dataclasses; flags
override file values.
"""

import argparse
import dataclasses
import json
import sys
import time
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np

from . import rng
from .decompose import (MetricObservations, compose_loss, plant_observations,
                        read_observations, solve_projection, standard_library,
                        write_observations)
from .distfit import GridSpec, grid_search, normalize, read_sample, write_grid_table
from .harness import ProtocolConfig, emit_report, run_many
from .losses import (LOGLOSS, LossKind, MSE, TWEEDIE, WEIGHTED, Sample,
                     logloss, logloss_grad, mse_grad, mse_loss, tweedie_grad,
                     tweedie_loss, weighted_logloss)
from .ranker import TitleRanker, TrainConfig, gradient_check
from .simulate import WorldConfig, write_event_log
from .tweedie import TweedieParams, sample as tweedie_sample


def _package_version():
    try:
        return version("tweedierank")
    except PackageNotFoundError:
        return "unknown"


# -- configuration -----------------------------------------------------------

def _build_section(cls, data, context):
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown keys in {context}: {sorted(unknown)}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ValueError(f"bad {context}: {exc}") from None


def parse_kinds(text, power=1.5):
    names = [part.strip() for part in text.split(",") if part.strip()]
    if not names:
        raise ValueError("kinds list is empty")
    return tuple(LossKind.parse(name, power=power) for name in names)


def load_protocol_config(path=None, seed=None, threads=None, runs=None,
                         kinds=None, power=1.5):
    """ProtocolConfig from an optional JSON file plus flag overrides."""
    data = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ValueError(f"config file not found: {path}")
        try:
            data = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ValueError(f"config parse error in {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ValueError(f"config parse error in {path}: expected an object")
    world_data = dict(data.get("world", {}))
    train_data = dict(data.get("train", {}))
    top = {k: v for k, v in data.items() if k not in ("world", "train")}
    known_top = {"editorial_days", "total_days", "n_runs", "kinds", "tweedie_power"}
    unknown = set(top) - known_top
    if unknown:
        raise ValueError(f"unknown keys in config: {sorted(unknown)}")
    if seed is not None:
        world_data["master_seed"] = seed
    world = _build_section(WorldConfig, world_data, "world config")
    train = _build_section(TrainConfig, train_data, "train config")
    power = top.get("tweedie_power", power)
    if kinds is not None:
        kind_tuple = parse_kinds(kinds, power=power)
    elif "kinds" in top:
        kind_tuple = tuple(LossKind.parse(name, power=power) for name in top["kinds"])
    else:
        kind_tuple = tuple(LossKind(k.name, power=power) if k.name == "tweedie" else k
                           for k in (TWEEDIE, MSE, WEIGHTED, LOGLOSS))
    return ProtocolConfig(
        world=world,
        train=train,
        kinds=kind_tuple,
        editorial_days=top.get("editorial_days", 3),
        total_days=top.get("total_days", 13),
        n_runs=runs if runs is not None else top.get("n_runs", 10),
    )


# -- manifest ----------------------------------------------------------------

def _write_manifest(command, out_dir, master_seed, config_echo, outputs, started):
    manifest = {
        "command": command,
        "master_seed": master_seed,
        "package_version": _package_version(),
        "config_echo": config_echo,
        "outputs": [str(p) for p in outputs],
        "duration_seconds": round(time.monotonic() - started, 3),
    }
    path = Path(out_dir) / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(json.dumps(manifest, indent=2, sort_keys=True))
    return path


def _ensure_out_dir(path):
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- commands -----------------------------------------------------------------

def cmd_simulate(args):
    started = time.monotonic()
    config = load_protocol_config(args.config, seed=args.seed, runs=args.runs,
                                  kinds=args.kinds, power=args.p)
    out = _ensure_out_dir(args.out)
    collect = args.events == "first-run"
    report = run_many(config, n_jobs=args.threads, collect_events=collect)
    outputs = list(emit_report(report, out / "report.json", out / "plot_data.csv"))
    if collect:
        for label, log in report.events_run0.items():
            safe = label.replace("(", "_").replace(")", "").replace("=", "")
            path = out / f"events_{safe}_run0.csv"
            write_event_log(log, path, master_seed=config.master_seed)
            outputs.append(path)
    _write_manifest("simulate", out, config.master_seed, config.echo(), outputs, started)
    return 0


def cmd_sample(args):
    started = time.monotonic()
    params = TweedieParams(mu=args.mu, phi=args.phi, p=args.p)
    draws = tweedie_sample(params, args.n, seed=args.seed)
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w") as fh:
        fh.write(f"# master_seed={args.seed}\n")
        for v in draws:
            fh.write(f"{float(v)!r}\n")
    _write_manifest("sample", out_path.parent, args.seed,
                    {"mu": args.mu, "phi": args.phi, "p": args.p, "n": args.n},
                    [out_path], started)
    return 0


def _parse_axis(text, name):
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"--{name} must be start:stop:step")
    return tuple(float(p) for p in parts)


def cmd_fit(args):
    started = time.monotonic()
    sample = read_sample(args.sample)
    normalization = args.normalize
    if normalization != "none":
        sample = normalize(sample, method=normalization, upper_bound=args.upper_bound)
    grid = GridSpec(
        mu_grid=_parse_axis(args.mu_grid, "mu-grid"),
        p_grid=_parse_axis(args.p_grid, "p-grid"),
        phi_grid=_parse_axis(args.phi_grid, "phi-grid"),
    )
    best, best_ks, table = grid_search(sample, grid, n_jobs=args.threads)
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_grid_table(out_path, best, best_ks, table, master_seed=args.seed,
                     normalization=normalization)
    print(f"best fit: mu={best.mu:g} p={best.p:g} phi={best.phi:g} ks={best_ks:.6g}")
    _write_manifest("fit", out_path.parent, args.seed,
                    {"sample": str(args.sample), "normalize": normalization,
                     "grid": dataclasses.asdict(grid)},
                    [out_path], started)
    return 0


def _parse_vector(text, flag):
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3:
        raise ValueError(f"{flag} must be three comma-separated numbers")
    return [float(p) for p in parts]


def cmd_decompose(args):
    started = time.monotonic()
    if (args.observations is None) == (args.plant is None):
        raise ValueError("provide either an observations file or --plant")
    if args.plant is not None:
        t = _parse_vector(args.plant, "--plant")
        v = _parse_vector(args.plant_v, "--plant-v") if args.plant_v else [1.0, 0.5, 0.25]
        obs = plant_observations(t, v, n=args.n_obs, noise_sd=args.noise_sd,
                                 seed=args.seed or 0)
        source = {"planted_t": t, "planted_v": v, "n_obs": args.n_obs,
                  "noise_sd": args.noise_sd}
    else:
        obs = read_observations(args.observations)
        source = {"observations": str(args.observations)}
    solution = solve_projection(obs)
    library = standard_library(power=args.p)
    mix = compose_loss(solution.t_vector, library)
    payload = {
        "source": source,
        "t_vector": [float(x) for x in solution.t_vector],
        "v_vector": [float(x) for x in solution.v_vector],
        "residuals": {"watch": solution.residuals[0], "conversion": solution.residuals[1]},
        "library": {bc.kind.label: list(bc.coeffs) for bc in library},
        "mixture_weights": {bc.kind.label: float(w)
                            for bc, w in zip(library, mix.weights)},
        "cosine_similarity": mix.cosine,
    }
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(f"t_vector={payload['t_vector']} cosine={mix.cosine:.6f}")
    _write_manifest("decompose", out_path.parent, args.seed or 0, source,
                    [out_path], started)
    return 0


def _loss_fd_error(kind, gen, n_points=100):
    """Max relative FD error of the scalar loss gradients for one kind."""
    worst = 0.0
    for _ in range(n_points):
        if kind.name == "tweedie":
            pred = gen.uniform(0.05, 3.0)
            target = gen.uniform(0.0, 3.0)
            fn = lambda x: tweedie_loss(x, target, kind.power)
            grad = tweedie_grad(pred, target, kind.power)
        elif kind.name == "mse":
            pred = gen.uniform(-3.0, 3.0)
            target = gen.uniform(-3.0, 3.0)
            fn = lambda x: mse_loss(x, target)
            grad = mse_grad(pred, target)
        else:
            pred = gen.uniform(0.05, 0.95)
            click = int(gen.random() < 0.5)
            weight = gen.uniform(0.1, 5.0) if kind.name == "weighted" else 1.0
            fn = lambda x: weight * logloss(x, click)
            grad = weight * logloss_grad(pred, click)
        h = 1e-6 * max(abs(pred), 1.0)
        num = (fn(pred + h) - fn(pred - h)) / (2.0 * h)
        denom = max(abs(grad), abs(num), 1e-8)
        worst = max(worst, abs(grad - num) / denom)
    return worst


def run_gradcheck(corrupt=False, seed=7, n_models=5, threshold=1e-5):
    """Pass/fail rows over the four losses and the ranker backprop.

    ``corrupt`` is a test hook that perturbs one analytic gradient to prove
    the check can fail.
    """
    rows = []
    for kind in (TWEEDIE, LOGLOSS, WEIGHTED, MSE):
        gen = rng.stream(seed, rng.INIT, kind.code)
        loss_err = _loss_fd_error(kind, gen)
        model_err = 0.0
        for i in range(n_models):
            model = TitleRanker(n_titles=12, loss=kind,
                                random_state=rng.derive_seed(seed, rng.INIT, kind.code, i))
            model._initialize()
            clicked = int(gen.random() < 0.5)
            watch = gen.uniform(0.1, 2.0) if clicked else 0.0
            sample = Sample(title_id=int(gen.integers(0, 12)), click_label=clicked,
                            watch=watch, weight=max(watch * 3600.0, 1.0))
            model_err = max(model_err, gradient_check(model, sample))
        if corrupt and kind.name == "tweedie":
            model_err += 1.0
        passed = loss_err < threshold and model_err < threshold
        rows.append((kind.label, loss_err, model_err, passed))
    return rows


def cmd_gradcheck(args):
    rows = run_gradcheck(corrupt=args.corrupt, seed=args.seed or 7)
    print(f"{'kind':<18} {'loss_grad_err':>14} {'ranker_grad_err':>16} result")
    all_pass = True
    for label, loss_err, model_err, passed in rows:
        all_pass &= passed
        print(f"{label:<18} {loss_err:>14.3e} {model_err:>16.3e} "
              f"{'PASS' if passed else 'FAIL'}")
    return 0 if all_pass else 1


# -- parser -------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="tweedierank",
        description="Watch-time ranking laboratory: simulation, distribution "
                    "fitting, loss decomposition and gradient verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the multi-day ranking protocol")
    sim.add_argument("--config", default=None, help="JSON protocol config")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--seed", type=int, default=None, help="master seed override")
    sim.add_argument("--threads", type=int, default=-1)
    sim.add_argument("--runs", type=int, default=None, help="override n_runs")
    sim.add_argument("--kinds", default=None,
                     help="comma list: tweedie,logloss,weighted,mse")
    sim.add_argument("--p", type=float, default=1.5, help="tweedie power")
    sim.add_argument("--events", choices=("none", "first-run"), default="first-run",
                     help="event log export policy")
    sim.set_defaults(func=cmd_simulate)

    smp = sub.add_parser("sample", help="dump distribution draws, one per line")
    smp.add_argument("--mu", type=float, default=0.2)
    smp.add_argument("--phi", type=float, default=1.5)
    smp.add_argument("--p", type=float, default=1.5)
    smp.add_argument("--n", type=int, default=100000)
    smp.add_argument("--seed", type=int, default=0)
    smp.add_argument("--out", required=True, help="output text file")
    smp.set_defaults(func=cmd_sample)

    fit = sub.add_parser("fit", help="KS grid search on a watch-time sample")
    fit.add_argument("sample", help="text file, one nonnegative value per line")
    fit.add_argument("--out", required=True, help="grid table output file")
    fit.add_argument("--normalize", choices=("none", "zscore_shifted", "scale"),
                     default="none")
    fit.add_argument("--upper-bound", type=float, default=10.0)
    fit.add_argument("--mu-grid", default="0.05:0.5:0.05")
    fit.add_argument("--p-grid", default="1.05:1.95:0.05")
    fit.add_argument("--phi-grid", default="0.5:2.5:0.05")
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--threads", type=int, default=-1)
    fit.set_defaults(func=cmd_fit)

    dec = sub.add_parser("decompose", help="solve metric projections and mixtures")
    dec.add_argument("observations", nargs="?", default=None,
                     help="CSV rows c1,c2,c3,watch_metric,conversion_metric")
    dec.add_argument("--plant", default=None, help="planted t vector, e.g. 1,2,3")
    dec.add_argument("--plant-v", default=None, help="planted v vector")
    dec.add_argument("--n-obs", type=int, default=12)
    dec.add_argument("--noise-sd", type=float, default=0.0)
    dec.add_argument("--seed", type=int, default=0)
    dec.add_argument("--p", type=float, default=1.5, help="tweedie power")
    dec.add_argument("--out", required=True, help="JSON output file")
    dec.set_defaults(func=cmd_decompose)

    gc = sub.add_parser("gradcheck", help="verify analytic gradients")
    gc.add_argument("--seed", type=int, default=7)
    gc.add_argument("--corrupt", action="store_true",
                    help="test hook: corrupt one gradient to force a failure")
    gc.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; those are validation failures here.
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - runtime/numeric failures
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
