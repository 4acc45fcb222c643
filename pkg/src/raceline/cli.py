"""Command-line front end: optimize, evaluate, and compare.

Configuration comes from a TOML file (``--config``) with CLI flags taking
precedence. ``optimize`` writes the racing line, history, GG diagram, plots,
and a summary.json that echoes the full effective configuration; passing a
summary.json back as ``--config`` reproduces the run.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import baseline, bayesopt, svgplot
from .errors import (
    RacelineError,
    TrackFormatError,
    ValidationError,
)
from .speed import VehicleParams, gg_points, write_profile_csv
from .track import CenterLine, load_track

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SOLVER = 3

_TRACKS_DIR = Path(__file__).resolve().parent / "tracks"


@dataclass
class RunConfig:
    """Fully resolved configuration for one CLI invocation."""

    track_file: str
    n_nodes: int = 20
    resample_k: int = 100
    vehicle: VehicleParams = None
    v0: float = 0.0
    opt: bayesopt.OptConfig = None
    out_dir: str = "out"
    jobs: int = 1

    def to_dict(self) -> dict:
        return {
            "track": {"file": self.track_file, "nodes": self.n_nodes,
                      "resample": self.resample_k},
            "vehicle": {"mass": self.vehicle.m, "lf": self.vehicle.l_f,
                        "lr": self.vehicle.l_r, "mu": self.vehicle.mu_s,
                        "g": self.vehicle.g, "v_cap": self.vehicle.v_cap,
                        "v0": self.v0},
            "optimization": {
                "n_init": self.opt.n_init, "budget": self.opt.budget,
                "acquisition": self.opt.acquisition,
                "nei_fantasies": self.opt.nei_fantasies,
                "acq_restarts": self.opt.acq_restarts,
                "acq_candidates": self.opt.acq_candidates,
                "seed": self.opt.rng_seed,
                "convergence": self.opt.convergence_mode,
                "patience": self.opt.patience, "min_delta": self.opt.min_delta,
            },
            "output": {"dir": self.out_dir, "jobs": self.jobs},
        }


def bundled_track_path(name: str) -> Path:
    """Path of a bundled fixture track (``oval``, ``scurve``, ``ethz1_like``)."""
    candidate = _TRACKS_DIR / (name if name.endswith(".csv") else name + ".csv")
    if not candidate.exists():
        available = sorted(p.stem for p in _TRACKS_DIR.glob("*.csv"))
        raise ValidationError(f"no bundled track '{name}'; available: {available}")
    return candidate


def _resolve_track(spec: str, config_dir: Path | None) -> Path:
    p = Path(spec)
    if p.is_absolute() and p.exists():
        return p
    if config_dir is not None and (config_dir / p).exists():
        return config_dir / p
    if p.exists():
        return p
    try:
        return bundled_track_path(spec)
    except ValidationError:
        raise ValidationError(f"track file not found: {spec}") from None


def _read_config_file(path: Path) -> dict:
    if path.suffix == ".json":
        with open(path) as fh:
            data = json.load(fh)
        return data.get("config", data)
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def build_run_config(args: argparse.Namespace) -> RunConfig:
    """Merge the config file (if any) with CLI overrides; flags win."""
    raw: dict = {}
    config_dir: Path | None = None
    if args.config is not None:
        cfg_path = Path(args.config)
        if not cfg_path.exists():
            raise ValidationError(f"config file not found: {cfg_path}")
        raw = _read_config_file(cfg_path)
        config_dir = cfg_path.resolve().parent

    track = raw.get("track", {})
    vehicle = raw.get("vehicle", {})
    opt = raw.get("optimization", {})
    output = raw.get("output", {})

    track_spec = args.track if args.track is not None else track.get("file")
    if track_spec is None:
        raise ValidationError("no track given; use --track or the config's [track] file")
    track_file = str(_resolve_track(str(track_spec), config_dir))

    params = VehicleParams(
        m=float(vehicle.get("mass", 1.0)),
        l_f=float(vehicle.get("lf", 0.5)),
        l_r=float(vehicle.get("lr", 0.5)),
        mu_s=float(vehicle.get("mu", 1.0)),
        g=float(vehicle.get("g", 9.81)),
        v_cap=float(vehicle.get("v_cap", 50.0)),
    )
    opt_config = bayesopt.OptConfig(
        n_init=int(opt.get("n_init", 10)),
        budget=int(args.budget if args.budget is not None else opt.get("budget", 50)),
        acquisition=str(args.acquisition if args.acquisition is not None
                        else opt.get("acquisition", "ei")),
        nei_fantasies=int(opt.get("nei_fantasies", 32)),
        acq_restarts=int(opt.get("acq_restarts", 16)),
        acq_candidates=int(opt.get("acq_candidates", 2048)),
        rng_seed=int(args.seed if args.seed is not None else opt.get("seed", 0)),
        convergence_mode=str(opt.get("convergence", "fixed_budget")),
        patience=int(opt.get("patience", 15)),
        min_delta=float(opt.get("min_delta", 0.01)),
    )
    return RunConfig(
        track_file=track_file,
        n_nodes=int(args.nodes if args.nodes is not None else track.get("nodes", 20)),
        resample_k=int(args.resample if args.resample is not None
                       else track.get("resample", 100)),
        vehicle=params,
        v0=float(vehicle.get("v0", 0.0)),
        opt=opt_config,
        out_dir=str(args.out if args.out is not None else output.get("dir", "out")),
        jobs=int(args.jobs if getattr(args, "jobs", None) is not None
                 else output.get("jobs", 1)),
    )


def _load_center(config: RunConfig) -> CenterLine:
    return load_track(config.track_file)


def cmd_optimize(args: argparse.Namespace) -> int:
    config = build_run_config(args)
    center = _load_center(config)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    result = bayesopt.run(center, config.vehicle, config.opt,
                          config.n_nodes, config.resample_k, config.v0)
    runtime = time.perf_counter() - t0

    write_profile_csv(result.profile, out / "raceline.csv")
    bayesopt.write_history_csv(result.history, out / "history.csv",
                               dim=result.w_best.shape[0])
    gg = gg_points(result.profile)
    with open(out / "gg.csv", "w", newline="") as fh:
        fh.write("a_lat_mps2,a_long_mps2\n")
        for a_lat, a_long in gg:
            fh.write(f"{float(a_lat)!r},{float(a_long)!r}\n")

    svgplot.track_svg(center, result.profile.points, result.profile.speeds,
                      out / "raceline.svg",
                      title=f"lap time {result.profile.lap_time:.3f} s")
    mu_g = config.vehicle.mu_s * config.vehicle.g
    svgplot.gg_svg(gg, mu_g, config.vehicle.drive_fraction * mu_g, out / "gg.svg")

    summary = {
        "lap_time_s": result.profile.lap_time,
        "center_line_lap_time_s": _center_lap_time(center, config),
        "seed": config.opt.rng_seed,
        "runtime_s": runtime,
        "n_evaluations": config.opt.n_init + len(result.history),
        "w_best": [float(v) for v in result.w_best],
        "config": config.to_dict(),
    }
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)

    print(f"best lap time: {result.profile.lap_time:.4f} s "
          f"({summary['n_evaluations']} evaluations, {runtime:.1f} s wall)")
    print(f"artifacts written to {out}/")
    return EXIT_OK


def _center_lap_time(center: CenterLine, config: RunConfig) -> float:
    evaluator = bayesopt.LapTimeEvaluator(center, config.vehicle, config.n_nodes,
                                          config.resample_k, config.v0)
    return evaluator.lap_time(np.zeros(evaluator.dim))


def _read_offsets(path: Path) -> np.ndarray:
    values: list[float] = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            for cell in line.replace(",", " ").split():
                try:
                    values.append(float(cell))
                except ValueError:
                    raise ValidationError(
                        f"{path}: line {lineno}: non-numeric offset '{cell}'"
                    ) from None
    return np.asarray(values)


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = build_run_config(args)
    center = _load_center(config)
    w = _read_offsets(Path(args.offsets))

    evaluator = bayesopt.LapTimeEvaluator(center, config.vehicle, config.n_nodes,
                                          config.resample_k, config.v0)
    if w.shape[0] != evaluator.dim:
        raise ValidationError(
            f"offsets file has {w.shape[0]} values but the track uses "
            f"{evaluator.dim} nodes"
        )
    _path, profile = evaluator.profile_for(w)

    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_profile_csv(profile, out / "profile.csv")
    print(repr(float(profile.lap_time)))
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    config = build_run_config(args)
    center = _load_center(config)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    if args.runs < 2:
        raise ValidationError("--runs must be at least 2 (bands need repeat runs)")
    unknown = [m for m in methods if m not in baseline.METHODS]
    if unknown:
        raise ValidationError(
            f"unknown methods {unknown}; valid methods: {list(baseline.METHODS)}"
        )

    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = baseline.compare(
        center, config.vehicle, methods, args.runs, args.evals,
        base_seed=config.opt.rng_seed, n_nodes=config.n_nodes,
        resample_k=config.resample_k, v0=config.v0, config=config.opt,
        jobs=config.jobs,
    )
    baseline.write_comparison_csv(report, out / "comparison.csv")
    baseline.write_comparison_json(report, out / "comparison.json")
    svgplot.convergence_svg(baseline.comparison_plot_data(report), out / "comparison.svg")

    for name, value in report.final_best().items():
        print(f"{name}: mean final best {value:.4f} s")
    print(f"artifacts written to {out}/")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="raceline",
        description="Compute time-optimal racing lines with GP Bayesian optimization.",
    )
    parser.add_argument("--verbose", action="store_true", help="enable info logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser):
        p.add_argument("--config", help="TOML config file (or a prior summary.json)")
        p.add_argument("--track", help="track CSV path or bundled track name")
        p.add_argument("--nodes", type=int, help="number of optimization nodes")
        p.add_argument("--resample", type=int, help="points per resampled trajectory")
        p.add_argument("--budget", type=int, help="new observations after initialization")
        p.add_argument("--seed", type=int, help="random seed")
        p.add_argument("--acquisition", choices=["ei", "nei"], help="acquisition function")
        p.add_argument("--out", help="output directory")

    p_opt = sub.add_parser("optimize", help="optimize the racing line for a track")
    common(p_opt)
    p_opt.set_defaults(func=cmd_optimize)

    p_eval = sub.add_parser("evaluate", help="evaluate one offset vector")
    common(p_eval)
    p_eval.add_argument("--offsets", required=True,
                        help="file with n lateral offsets in meters")
    p_eval.set_defaults(func=cmd_evaluate)

    p_cmp = sub.add_parser("compare", help="compare sampling methods over repeat runs")
    common(p_cmp)
    p_cmp.add_argument("--methods", default="random,ei,nei",
                       help="comma-separated subset of random,ei,nei")
    p_cmp.add_argument("--runs", type=int, default=10, help="repeat runs per method")
    p_cmp.add_argument("--evals", type=int, default=50,
                       help="total evaluations per run (initialization included)")
    p_cmp.add_argument("--jobs", type=int, help="parallel runs for compare")
    p_cmp.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValidationError, TrackFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RacelineError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
