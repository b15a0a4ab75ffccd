"""Command-line entry point: simulate | split | fit | predict | evaluate | roc | baseline.

Every command takes ``--config file.json``; keys must match the command's
options (dashes or underscores), unknown keys are rejected, and flags given on
the command line win over the file. ``SCS_SEED`` overrides the configured
seed. Exit codes: 0 success, 2 configuration error, 3 estimation error,
4 I/O error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import baselines as bl
from . import evaluation as ev
from . import synth
from .coxph import EstimationError
from .data import DataError, Standardizer, load_csv, split_indices, write_csv
from .scs import DivergenceError, FitConfig, LatentSpec, ScsParams, fit, predict_gating, select_sparsity

log = logging.getLogger("sparsecox")

METRIC_ALIASES = {"hr": "hazard_ratio", "risk": "risk_difference", "rmst": "rmst_difference"}
CASES = {"1": (0, 1), "2": (0, 1, -1)}


class ConfigError(ValueError):
    pass


# option name -> default; required options are listed in REQUIRED
COMMANDS: dict[str, dict] = {
    "simulate": {
        "n": 10000, "seed": 0, "case": "2", "censor_prob": 0.8, "noise_dims": 4,
        "rate_scale": 0.25, "gompertz_shape": 1.0, "hr": None, "mu": None, "sigma": None,
        "out": "data", "name": "synthetic",
    },
    "split": {"data": None, "truth": None, "fraction": 0.5, "seed": 0, "out": "split", "schema": None},
    "fit": {
        "data": None, "schema": None, "case": "2", "epsilon": 0.0, "eta": 0.01, "inner_steps": 5,
        "max_outer_iters": 500, "tol": 1e-6, "restarts": 3, "seed": 0, "max_features": None,
        "out": "model.json", "diagnostics": None,
    },
    "predict": {"model": None, "data": None, "schema": None, "out": "predictions.csv"},
    "evaluate": {
        "model": None, "data": None, "schema": None, "train": None, "metrics": "hr,risk,rmst",
        "horizon": 5.0, "fractions": "0.2,0.4,0.6,0.8", "n_boot": 200, "seed": 0,
        "baselines": False, "baseline_l1": 0.0, "baseline_max_features": None,
        "oracle_truth": None, "plots": False, "out": "reports",
    },
    "roc": {"model": None, "data": None, "schema": None, "truth": None, "scores": "model", "out": "roc"},
    "baseline": {
        "kind": "cox_int", "data": None, "schema": None, "horizon": 5.0, "l1": 0.0,
        "max_features": None, "out": "baseline.json",
    },
}

REQUIRED = {
    "split": ("data",),
    "fit": ("data",),
    "predict": ("model", "data"),
    "evaluate": ("model", "data"),
    "roc": ("model", "data", "truth"),
    "baseline": ("data",),
}


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sparsecox", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for cmd, opts in COMMANDS.items():
        sp = sub.add_parser(cmd)
        sp.add_argument("--config", help="JSON file with option values")
        sp.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
        sp.add_argument("--run-log", help="append a timestamped run record to this file")
        sp.add_argument("-v", "--verbose", action="store_true")
        for name, default in opts.items():
            if isinstance(default, bool):
                sp.add_argument(_flag(name), action="store_const", const=True, default=None)
            elif name in ("hr", "mu", "sigma", "schema"):
                continue  # structured values come from the config file
            else:
                typ = type(default) if default is not None else str
                if name in ("max_features", "baseline_max_features"):
                    typ = int
                sp.add_argument(_flag(name), type=typ, default=None)
    return p


def resolve(cmd: str, args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then SCS_SEED, then explicit flags."""
    cfg = dict(COMMANDS[cmd])
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        loaded = {k.replace("-", "_"): v for k, v in loaded.items()}
        unknown = sorted(set(loaded) - set(cfg))
        if unknown:
            raise ConfigError(f"unknown config keys for {cmd}: {unknown}")
        cfg.update(loaded)
    if "seed" in cfg and os.environ.get("SCS_SEED"):
        try:
            cfg["seed"] = int(os.environ["SCS_SEED"])
        except ValueError:
            raise ConfigError("SCS_SEED must be an integer") from None
    for name in COMMANDS[cmd]:
        v = getattr(args, name, None)
        if v is not None:
            cfg[name] = v
    for name in REQUIRED.get(cmd, ()):
        if cfg.get(name) in (None, ""):
            raise ConfigError(f"{cmd}: missing required option {_flag(name)}")
    for key in ("data", "truth", "model", "train", "oracle_truth", "out", "diagnostics"):
        if cfg.get(key):
            cfg[key] = str(Path(cfg[key]).expanduser().resolve())
    cfg["threads"] = args.threads or os.cpu_count() or 1
    return cfg


def _write_json(obj, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def _latent(case) -> LatentSpec:
    key = str(case)
    if key not in CASES:
        raise ConfigError(f"case must be 1 or 2, got {case!r}")
    return LatentSpec(CASES[key])


def _floats(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def _load_model(path) -> ScsParams:
    try:
        return ScsParams.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{path}: not a model file ({exc})") from None


def _model_inputs(params: ScsParams, ds):
    if ds.d != params.d:
        raise ConfigError(f"model expects {params.d} features, data has {ds.d}")
    if params.feature_names and tuple(params.feature_names) != ds.feature_names:
        raise ConfigError(
            f"feature mismatch: model {list(params.feature_names)} vs data {list(ds.feature_names)}"
        )
    return params.standardizer.transform(ds) if params.standardizer else ds


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(cfg: dict) -> list[Path]:
    groups = CASES[str(cfg["case"])]
    kwargs = {}
    for name, default in (("hr", synth._default_hr()), ("mu", synth._default_mu()),
                          ("sigma", synth._default_sigma())):
        m = cfg[name] if cfg[name] is not None else default
        kwargs[name] = {int(k): v for k, v in m.items() if int(k) in groups}
    sc = synth.SynthConfig(
        n=int(cfg["n"]), seed=int(cfg["seed"]), groups=groups, censor_prob=float(cfg["censor_prob"]),
        noise_dims=int(cfg["noise_dims"]), rate_scale=float(cfg["rate_scale"]),
        gompertz_shape=float(cfg["gompertz_shape"]), **kwargs,
    )
    lab = synth.generate(sc)
    data, truth = synth.write(lab, Path(cfg["out"]) / f"{cfg['name']}.csv")
    return [data, truth]


def cmd_split(cfg: dict) -> list[Path]:
    ds = load_csv(cfg["data"], cfg["schema"])
    first, second = split_indices(ds, float(cfg["fraction"]), int(cfg["seed"]))
    out = Path(cfg["out"])
    paths = [out / "train.csv", out / "test.csv"]
    write_csv(ds.subset(first), paths[0], cfg["schema"])
    write_csv(ds.subset(second), paths[1], cfg["schema"])
    if cfg["truth"]:
        z = synth.read_truth(cfg["truth"])
        if len(z) != ds.n:
            raise ConfigError("truth file length does not match the data")
        for idx, name in ((first, "train_truth.csv"), (second, "test_truth.csv")):
            _write_truth(z[idx], out / name)
            paths.append(out / name)
    return paths


def _write_truth(z, path):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("true_z\n" + "".join(f"{int(v)}\n" for v in z), encoding="utf-8")


def cmd_fit(cfg: dict) -> list[Path]:
    raw = load_csv(cfg["data"], cfg["schema"])
    std = Standardizer.fit(raw)
    ds = std.transform(raw)
    config = FitConfig(
        latent=_latent(cfg["case"]), epsilon=float(cfg["epsilon"]), eta=float(cfg["eta"]),
        inner_steps=int(cfg["inner_steps"]), max_outer_iters=int(cfg["max_outer_iters"]),
        tol=float(cfg["tol"]), seed=int(cfg["seed"]), restarts=int(cfg["restarts"]),
        n_jobs=int(cfg["threads"]),
    )
    extra = {}
    if cfg["max_features"] is not None:
        res = select_sparsity(ds, config, int(cfg["max_features"]))
        params, diag = res.params, res.diagnostics
        extra = {
            "epsilon": res.epsilon,
            "max_features": int(cfg["max_features"]),
            "sparsity_path": [[e, c] for e, c in sorted(res.path)],
            "warning": res.warning,
        }
    else:
        params, diag = fit(ds, config)
        extra = {"epsilon": config.epsilon}
    params = replace(params, standardizer=std)
    out = Path(cfg["out"])
    _write_json(params.to_dict(), out)
    diag_path = Path(cfg["diagnostics"]) if cfg["diagnostics"] else out.with_name(out.stem + "_diagnostics.json")
    _write_json({**diag.to_dict(), **extra}, diag_path)
    return [out, diag_path]


def cmd_predict(cfg: dict) -> list[Path]:
    params = _load_model(cfg["model"])
    ds = _model_inputs(params, load_csv(cfg["data"], cfg["schema"]))
    probs = predict_gating(params, ds.covariates)
    groups = params.latent.groups
    out = Path(cfg["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(",".join(f"p_{k:+d}" if k else "p_0" for k in groups) + ",predicted_z\n")
        for row in probs:
            fh.write(",".join(repr(float(v)) for v in row) + f",{groups[int(np.argmax(row))]}\n")
    return [out]


def _scs_scorer(params: ScsParams, k: int):
    j = params.latent.index(k)
    return lambda x: predict_gating(params, x)[:, j]


def _oracle_scorer(truth: np.ndarray, k: int):
    flags = (truth == k).astype(float)

    def score(x):
        if len(x) != len(flags):
            raise ConfigError("oracle truth length does not match the data")
        return flags

    return score


def cmd_evaluate(cfg: dict) -> list[Path]:
    params = _load_model(cfg["model"])
    raw = load_csv(cfg["data"], cfg["schema"])
    ds = _model_inputs(params, raw)
    metrics = [METRIC_ALIASES.get(m.strip(), m.strip()) for m in str(cfg["metrics"]).split(",") if m.strip()]
    fractions = _floats(cfg["fractions"])
    horizon = float(cfg["horizon"])
    targets = [k for k in params.latent.groups if k != 0]

    scorers: list[tuple[str, int, object]] = [("SCS", k, _scs_scorer(params, k)) for k in targets]
    if cfg["baselines"]:
        if not cfg["train"]:
            raise ConfigError("--baselines needs --train (the training split)")
        train = _model_inputs(params, load_csv(cfg["train"], cfg["schema"]))
        for kind in bl.KINDS:
            if cfg["baseline_max_features"] is not None:
                _, scorer, _ = bl.l1_for_target(
                    lambda l1, kind=kind: bl.fit_baseline(kind, train, l1, horizon),
                    bl.l1_upper_bound(train), int(cfg["baseline_max_features"]),
                )
            else:
                scorer = bl.fit_baseline(kind, train, float(cfg["baseline_l1"]), horizon)
            for k in targets:
                sign = 1.0 if k == 1 else -1.0
                scorers.append((kind.upper().replace("_", "-"), k,
                                lambda x, s=scorer, sign=sign: sign * s.benefit_score(x)))
    if cfg["oracle_truth"]:
        truth = synth.read_truth(cfg["oracle_truth"])
        for k in targets:
            scorers.append(("ORACLE", k, _oracle_scorer(truth, k)))

    out = Path(cfg["out"])
    written = []
    short = {v: k for k, v in METRIC_ALIASES.items()}
    for metric in metrics:
        reports = [
            ev.subgroup_sweep(fn, ds, k, fractions, metric, horizon, method=name,
                              n_boot=int(cfg["n_boot"]), seed=int(cfg["seed"]))
            for name, k, fn in scorers
        ]
        stem = out / f"report_{short.get(metric, metric)}"
        ev.write_reports_csv(reports, stem.with_suffix(".csv"))
        ev.write_reports_json(reports, stem.with_suffix(".json"))
        written += [stem.with_suffix(".csv"), stem.with_suffix(".json")]
        for k in targets:
            log.info("%s, target group %+d\n%s", metric, k,
                     ev.table([r for r in reports if r.target_group == k]))
        if cfg["plots"]:
            from . import plots

            for k in targets:
                written.append(plots.plot_effect_vs_size(
                    [r for r in reports if r.target_group == k],
                    out / f"effect_{short.get(metric, metric)}_group{k:+d}.svg"))
    if cfg["plots"]:
        from . import plots

        probs = predict_gating(params, ds.covariates)
        predicted = np.asarray(params.latent.groups)[np.argmax(probs, axis=1)]
        written.append(plots.plot_km_by_group(raw, predicted, out / "km_by_predicted_group.svg",
                                              params.latent.groups))
    return written


def cmd_roc(cfg: dict) -> list[Path]:
    truth_path = Path(cfg["truth"])
    if not truth_path.exists():
        raise ConfigError(f"truth file not found: {truth_path}")
    params = _load_model(cfg["model"])
    ds = _model_inputs(params, load_csv(cfg["data"], cfg["schema"]))
    truth = synth.read_truth(truth_path)
    if len(truth) != ds.n:
        raise ConfigError("truth file length does not match the data")
    curves = {}
    for k in (g for g in params.latent.groups if g != 0):
        if cfg["scores"] == "model":
            s = predict_gating(params, ds.covariates)[:, params.latent.index(k)]
        elif cfg["scores"] == "oracle":
            s = (truth == k).astype(float)
        elif cfg["scores"] == "constant":
            s = np.zeros(ds.n)
        else:
            raise ConfigError(f"scores must be model, oracle or constant, got {cfg['scores']!r}")
        curves[f"group {k:+d}"] = ev.roc(s, truth == k)
    out = Path(cfg["out"])
    _write_json({name: c.to_dict() for name, c in curves.items()}, out / "roc.json")
    from . import plots

    svg = plots.plot_roc(curves, out / "roc.svg")
    return [out / "roc.json", svg]


def cmd_baseline(cfg: dict) -> list[Path]:
    raw = load_csv(cfg["data"], cfg["schema"])
    std = Standardizer.fit(raw)
    ds = std.transform(raw)
    kind = cfg["kind"].replace("-", "_")
    horizon = float(cfg["horizon"])
    if cfg["max_features"] is not None:
        l1, scorer, _ = bl.l1_for_target(lambda l1: bl.fit_baseline(kind, ds, l1, horizon),
                                         bl.l1_upper_bound(ds), int(cfg["max_features"]))
    else:
        scorer = bl.fit_baseline(kind, ds, float(cfg["l1"]), horizon)
    d = scorer.to_dict()
    d["feature_names"] = list(ds.feature_names)
    d["standardization"] = std.to_dict()
    out = Path(cfg["out"])
    _write_json(d, out)
    return [out]


HANDLERS = {
    "simulate": cmd_simulate,
    "split": cmd_split,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "roc": cmd_roc,
    "baseline": cmd_baseline,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve(args.command, args)
        written = HANDLERS[args.command](cfg)
    except (ConfigError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (EstimationError, DivergenceError) as exc:
        print(f"estimation error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    for p in written:
        print(p)
    if args.run_log:
        with open(args.run_log, "a", encoding="utf-8") as fh:
            stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
            fh.write(json.dumps({"time": stamp, "command": args.command,
                                 "config": {k: v for k, v in cfg.items()},
                                 "outputs": [str(p) for p in written]}) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
