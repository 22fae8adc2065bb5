"""Configuration-driven command line front end.

``conelab <command> --config <path> [--seed N] [--workers N] [--out DIR]``

Commands: ``cramer``, ``whiten``, ``harmonic``, ``dp``, ``simulate``,
``qsd``, ``zchain``, ``verify [selector|all]``.  Artifacts are CSV/JSON files with
deterministic names and 17-significant-digit numbers; rerunning the same
config reproduces them byte for byte.  Exit status: 0 on success with all
requested verifications passing, 1 on verification failure, 2 on a bad
config, 3 on a numerical failure.
"""

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
import scipy
import yaml

from . import __version__
from .analysis import (SELECTORS, PipelineContext, VerifyParams, fit_tail,
                       verify_all, verify_limits)
from .dp_oracle import hazard_ratio
from .errors import ConfigError, NumericsError
from .harmonic import tables_rows
from .model import ConeSpec, StepLaw
from .simulate import is_survival, mc_survival

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICS = 3


@dataclass
class RunConfig:
    law: StepLaw
    cone: ConeSpec
    params: VerifyParams
    simulate: dict
    zchain: dict
    out_dir: Path
    config_sha: str
    raw: dict = field(default_factory=dict)


def _fmt(x):
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _parse_prob(value, where):
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(Fraction(value))
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"{where}: cannot parse probability {value!r}") from exc
    raise ConfigError(f"{where}: probability must be a number or 'p/q' string")


def _require_keys(section, allowed, where):
    unknown = set(section) - set(allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {sorted(unknown)}")


def parse_run_config(path, seed=None, workers=None, out_dir=None):
    """Parse and validate the YAML run configuration; overrides win."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    blob = path.read_bytes()
    try:
        data = yaml.safe_load(blob)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    _require_keys(data, {"model", "pipeline", "simulate", "zchain", "output"}, "config")
    model = data.get("model")
    if not isinstance(model, dict):
        raise ConfigError("config needs a 'model' section")
    _require_keys(model, {"law", "cone"}, "model")

    law_sec = model.get("law", {})
    _require_keys(law_sec, {"steps"}, "model.law")
    steps = law_sec.get("steps")
    if not isinstance(steps, list) or not steps:
        raise ConfigError("model.law.steps must be a nonempty list")
    support, probs = [], []
    for i, entry in enumerate(steps):
        _require_keys(entry, {"step", "prob"}, f"model.law.steps[{i}]")
        support.append([int(v) for v in entry["step"]])
        probs.append(_parse_prob(entry["prob"], f"model.law.steps[{i}]"))
    law = StepLaw(support=np.array(support, dtype=int), probs=np.array(probs))

    cone_sec = model.get("cone", {})
    _require_keys(cone_sec, {"kind", "dim", "beta", "theta0", "normal"}, "model.cone")
    kind = cone_sec.get("kind")
    if kind == "orthant":
        cone = ConeSpec.orthant(int(cone_sec.get("dim", law.dim)))
    elif kind == "wedge2d":
        cone = ConeSpec.wedge2d(float(cone_sec["beta"]),
                                float(cone_sec.get("theta0", 0.0)))
    elif kind == "halfspace":
        cone = ConeSpec.halfspace(np.array(cone_sec["normal"], dtype=float))
    else:
        raise ConfigError(f"model.cone.kind: unknown kind {kind!r}")

    pipe = data.get("pipeline", {}) or {}
    allowed = {"n_max", "n_hi", "dp_window", "harmonic_window", "qsd_window",
               "qsd_sweep", "x0", "ratio_start", "bridge_endpoint", "seed", "workers"}
    _require_keys(pipe, allowed, "pipeline")
    params = VerifyParams()
    for key in allowed:
        if key in pipe:
            value = pipe[key]
            if key in ("x0", "ratio_start", "bridge_endpoint", "qsd_sweep"):
                value = tuple(int(v) for v in value)
            elif key == "harmonic_window":
                value = float(value)
            else:
                value = int(value)
            setattr(params, key, value)
    if seed is not None:
        params.seed = int(seed)
    if workers is not None:
        params.workers = int(workers)

    sim = dict(data.get("simulate", {}) or {})
    _require_keys(sim, {"estimator", "x0", "n", "n_samples"}, "simulate")
    sim.setdefault("estimator", "both")
    sim.setdefault("x0", [5, 5])
    sim.setdefault("n", 60)
    sim.setdefault("n_samples", 1_000_000)
    if sim["estimator"] not in ("direct", "tilted", "both"):
        raise ConfigError("simulate.estimator must be direct, tilted, or both")

    zchain = dict(data.get("zchain", {}) or {})
    _require_keys(zchain, {"x0", "n_steps", "n_paths"}, "zchain")
    zchain.setdefault("x0", [1, 1])
    zchain.setdefault("n_steps", 200)
    zchain.setdefault("n_paths", 1000)

    out = data.get("output", {}) or {}
    _require_keys(out, {"dir"}, "output")
    out_path = Path(out_dir) if out_dir else Path(out.get("dir", "out"))

    return RunConfig(
        law=law, cone=cone, params=params, simulate=sim, zchain=zchain,
        out_dir=out_path, config_sha=hashlib.sha256(blob).hexdigest(), raw=data,
    )


def _run_id(config, command, extra=""):
    digest = hashlib.sha256()
    digest.update(config.config_sha.encode())
    digest.update(command.encode())
    digest.update(extra.encode())
    digest.update(f"{config.params.seed}/{config.params.workers}".encode())
    return digest.hexdigest()[:12]


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_fmt)
        fh.write("\n")


def _manifest(config, command, run_id, files):
    return {
        "command": command,
        "run_id": run_id,
        "config_sha256": config.config_sha,
        "seed": config.params.seed,
        "workers": config.params.workers,
        "artifacts": sorted(files),
        "versions": {"conelab": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__},
    }


def emit_report(config, command, run_id, artifacts):
    """Write artifacts plus the run manifest; returns the file list."""
    config.out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, kind, payload in artifacts:
        path = config.out_dir / f"{name}_{run_id}.{kind}"
        if kind == "csv":
            _write_csv(path, payload[0], payload[1])
        elif kind == "json":
            _write_json(path, payload)
        elif kind == "jsonl":
            with open(path, "w") as fh:
                for record in payload:
                    fh.write(json.dumps(record, sort_keys=True, default=_fmt) + "\n")
        written.append(path.name)
    manifest_path = config.out_dir / f"manifest_{command}_{run_id}.json"
    _write_json(manifest_path, _manifest(config, command, run_id, written))
    return written + [manifest_path.name]


def _cmd_cramer(config, ctx, run_id):
    cd = ctx.cramer
    print(f"tilt point h = ({', '.join(f'{v:.6f}' for v in cd.h)})")
    print(f"survival rate c = {cd.c:.6f}")
    print("tilted law:")
    for z, p in zip(cd.tilted.support, cd.tilted.probs):
        print(f"  step {z.tolist()} prob {p:.6f}")
    payload = {
        "h": [float(v) for v in cd.h], "c": cd.c,
        "grad_residual": cd.grad_residual,
        "tilted": [{"step": z.tolist(), "prob": float(p)}
                   for z, p in zip(cd.tilted.support, cd.tilted.probs)],
        "drift": [float(v) for v in ctx.report.drift],
        "aperiodicity": ctx.report.aperiodicity,
    }
    files = emit_report(config, "cramer", run_id, [("cramer", "json", payload)])
    return EXIT_OK, files


def _cmd_whiten(config, ctx, run_id):
    wd = ctx.whitening
    print(f"tilted covariance:\n{wd.cov}")
    print(f"whitening matrix M:\n{wd.M}")
    print(f"alpha = {wd.alpha}")
    print(f"homogeneity degree p = {wd.p}")
    payload = {
        "cov": [[float(v) for v in row] for row in wd.cov],
        "M": [[float(v) for v in row] for row in wd.M],
        "alpha": wd.alpha, "p": wd.p,
        "cone_image": {"kind": wd.cone_image.kind, "dim": wd.cone_image.dim,
                       "beta": wd.cone_image.beta, "theta0": wd.cone_image.theta0},
    }
    files = emit_report(config, "whiten", run_id, [("whiten", "json", payload)])
    return EXIT_OK, files


def _cmd_harmonic(config, ctx, run_id):
    tabs = ctx.harmonic
    d = ctx.law.dim
    header = [f"x{i + 1}" for i in range(d)] + ["V", "Vprime", "U", "Uprime"]
    rows = tables_rows(tabs)
    print(f"window L = {tabs.L} ({tabs.grid.n_states} lattice points), "
          f"kappa = {tabs.kappa:.9g}, residual = {tabs.convergence_residual:.3e}")
    files = emit_report(config, "harmonic", run_id,
                        [("harmonic", "csv", (header, rows))])
    return EXIT_OK, files


def _cmd_dp(config, ctx, run_id):
    series = ctx.series
    rows = [(n, series.raw_survival_log(n), series.survival[n])
            for n in range(series.n_max + 1)]
    n_hi = config.params.n_hi
    print(f"survival series from {series.x0.tolist()} to n = {series.n_max} "
          f"(rescaled by c = {series.rescale_by:.9g})")
    print(f"hazard ratio at n = {n_hi}: {hazard_ratio(series, n_hi):.6f}")
    fit = fit_tail(series)
    print(f"tail fit: c_hat = {fit.c_hat:.6f}, exponent = {fit.exponent_hat:.4f}")
    files = emit_report(config, "dp", run_id, [
        ("dp", "csv", (["n", "raw_survival_log", "rescaled_b_n"], rows)),
        ("dp_fit", "json", {"c_hat": fit.c_hat, "exponent_hat": fit.exponent_hat,
                            "constant_hat": fit.constant_hat,
                            "window": list(fit.window_used)}),
    ])
    return EXIT_OK, files


def _cmd_simulate(config, ctx, run_id):
    sim = config.simulate
    x0 = tuple(sim["x0"])
    n, n_samples = int(sim["n"]), int(sim["n_samples"])
    seed, workers = config.params.seed, config.params.workers
    records = []
    if sim["estimator"] in ("direct", "both"):
        est = mc_survival(ctx.law, ctx.cone, x0, n, n_samples, seed, workers)
        records.append({"estimator": "direct", "value": est.value,
                        "std_error": est.std_error, "n_samples": est.n_samples,
                        "seed": est.seed, "workers": est.workers})
    if sim["estimator"] in ("tilted", "both"):
        est = is_survival(ctx.cramer, ctx.cone, x0, n, n_samples, seed, workers)
        records.append({"estimator": "tilted", "value": est.value,
                        "std_error": est.std_error, "n_samples": est.n_samples,
                        "seed": est.seed, "workers": est.workers})
    for rec in records:
        print(f"{rec['estimator']:>7s}: {rec['value']:.6e} +- {rec['std_error']:.2e}")
    files = emit_report(config, "simulate", run_id, [("simulate", "jsonl", records)])
    return EXIT_OK, files


def _cmd_qsd(config, ctx, run_id):
    result = ctx.qsd
    print(f"window L = {result.L}: lambda = {result.lambda_:.9f} "
          f"(survival rate c = {ctx.cramer.c:.9f}), residual = {result.residual:.2e}, "
          f"{result.iterations} iterations")
    d = ctx.law.dim
    pts = result.grid.points()
    order = np.lexsort(pts.T[::-1])
    rows = [list(pts[i]) + [result.mu[i]] for i in order]
    header = [f"x{i + 1}" for i in range(d)] + ["mu"]
    payload = {"L": result.L, "lambda": result.lambda_, "residual": result.residual,
               "iterations": result.iterations, "converged": result.converged}
    files = emit_report(config, "qsd", run_id, [
        ("qsd", "csv", (header, rows)),
        ("qsd_summary", "json", payload),
    ])
    return EXIT_OK, files


def _cmd_verify(config, ctx, run_id, selector):
    if selector == "all":
        reports = verify_all(ctx)
    else:
        reports = verify_limits(ctx, selector)
    rows = []
    records = []
    for r in reports:
        status = "pass" if r.passed else "FAIL"
        print(f"[{status}] {r.check}: measured {r.measured:.6g} vs predicted "
              f"{r.predicted:.6g} (deviation {r.deviation:.4g}, "
              f"tolerance {r.tolerance:g})")
        for note in r.notes:
            print(f"    note: {note}")
        rows.append([r.check, r.predicted, r.measured, r.deviation,
                     r.tolerance, r.passed])
        records.append({"check": r.check, "predicted": r.predicted,
                        "measured": r.measured, "deviation": r.deviation,
                        "tolerance": r.tolerance, "pass": r.passed,
                        "notes": r.notes})
    files = emit_report(config, "verify", run_id, [
        ("verify", "jsonl", records),
        ("verify_summary", "csv",
         (["check", "predicted", "measured", "deviation", "tolerance", "pass"], rows)),
    ])
    ok = all(r.passed for r in reports)
    return (EXIT_OK if ok else EXIT_VERIFY_FAILED), files


def _cmd_zchain(config, ctx, run_id):
    from .simulate import transience_indicator, z_chain

    z = config.zchain
    run = z_chain(ctx.law, ctx.cramer, ctx.harmonic, tuple(z["x0"]),
                  int(z["n_steps"]), config.params.seed, n_paths=int(z["n_paths"]))
    diff, se = transience_indicator(run, early=min(20, run.n_steps),
                                    late=run.n_steps)
    print(f"row sums (interior): [{run.row_sum_min:.8f}, {run.row_sum_max:.8f}]")
    print(f"mean |position| gain {diff:.3f} +- {se:.3f} over {run.n_steps} steps; "
          f"{run.n_truncated} paths hit the window edge")
    payload = {"row_sum_min": run.row_sum_min, "row_sum_max": run.row_sum_max,
               "n_truncated": run.n_truncated, "distance_gain": diff,
               "distance_gain_se": se, "n_paths": int(z["n_paths"]),
               "n_steps": int(z["n_steps"]), "seed": config.params.seed}
    files = emit_report(config, "zchain", run_id, [("zchain", "json", payload)])
    return EXIT_OK, files


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="conelab",
        description="killed-random-walk laboratory: tilting, whitening, harmonic "
                    "tables, DP oracles, sampling, QSD, and limit verification",
    )
    parser.add_argument("command",
                        choices=["cramer", "whiten", "harmonic", "dp", "simulate",
                                 "qsd", "zchain", "verify"])
    parser.add_argument("selector", nargs="?", default="all",
                        help="verification selector (verify command only); "
                             f"one of {', '.join(SELECTORS)} or 'all'")
    parser.add_argument("--config", required=True, help="path to the YAML run config")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--out", default=None, help="output directory override")
    args = parser.parse_args(argv)

    try:
        config = parse_run_config(args.config, seed=args.seed, workers=args.workers,
                                  out_dir=args.out)
        if args.command == "verify" and args.selector != "all" \
                and args.selector not in SELECTORS:
            raise ConfigError(f"unknown selector {args.selector!r}")
        ctx = PipelineContext(config.law, config.cone, config.params)
        run_id = _run_id(config, args.command,
                         extra=args.selector if args.command == "verify" else "")
        if args.command == "verify":
            status, files = _cmd_verify(config, ctx, run_id, args.selector)
        else:
            status, files = globals()[f"_cmd_{args.command}"](config, ctx, run_id)
        for name in files:
            print(f"wrote {config.out_dir / name}")
        return status
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericsError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICS


if __name__ == "__main__":
    sys.exit(main())
