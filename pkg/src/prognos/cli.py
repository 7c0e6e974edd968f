"""Command-line workflow: ingest, split, train, evaluate, predict, report.

Every command is deterministic given its inputs and --seed: the same
invocation writes byte-identical outputs. Exit codes: 0 success, 2
validation error, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import wire
from .cohort import Cohort, Endpoint, parse_cohort, split_cohort
from .errors import (
    ModelDataMismatch,
    NumericalError,
    SchemaViolation,
    ValidationError,
)
from .featsel import path_to_csv
from .metrics import brier_curve, calibration_by_group, concordance_ci
from .model import PrognosticModel, load_model, save_model, train_model, wald_report
from .scales import sss_risk, sss_score

# flag spellings to canonical values
ENDPOINT_FLAGS = {
    "late-amd": Endpoint.LATE_AMD,
    "late_amd": Endpoint.LATE_AMD,
    "ga": Endpoint.GA,
    "nv": Endpoint.NV,
}
FEATURE_FLAGS = {
    "deep": "deep_features",
    "deep_features": "deep_features",
    "grading": "dl_grading",
    "dl_grading": "dl_grading",
    "calculator": "calculator",
    "sss": "sss",
}
SPLIT_NAMES = ("train", "dev", "test", "all")
REPORT_HORIZONS = ("1", "2", "3", "4", "5", "all")


def parse_horizon_spec(text: str) -> tuple:
    """'1-12', '5', or '1,2,5' (ranges and lists may mix)."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            raise SchemaViolation("horizons", f"empty entry in {text!r}")
        lo, sep, hi = part.partition("-")
        try:
            if sep:
                span = range(int(lo), int(hi) + 1)
                if not span:
                    raise ValueError
                out.extend(span)
            else:
                out.append(int(part))
        except ValueError:
            raise SchemaViolation("horizons", f"cannot parse {part!r}") from None
    return wire.parse_horizons(out)


@dataclass
class RunConfig:
    """One resolved invocation; flags already mapped to canonical values."""

    command: str
    data_path: Optional[str] = None
    model_path: Optional[str] = None
    manifest_path: Optional[str] = None
    endpoint: Optional[Endpoint] = None
    feature_mode: Optional[str] = None
    genotype_mode: str = "none"
    horizons: tuple = wire.DEFAULT_HORIZONS
    bootstrap_b: int = 200
    seed: int = 42
    tie_method: str = "efron"
    lambda_override: Optional[float] = None
    k_features: int = 16
    split: str = "test"
    out: Optional[str] = None
    input_path: Optional[str] = None
    path_out: Optional[str] = None
    eval_dir: Optional[str] = None

    def __post_init__(self):
        self.horizons = wire.parse_horizons(list(self.horizons))
        if self.bootstrap_b < 2:
            raise ValidationError(
                f"--bootstrap must be at least 2, got {self.bootstrap_b}"
            )
        if self.split not in SPLIT_NAMES:
            raise ValidationError(f"--split must be one of {', '.join(SPLIT_NAMES)}")


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _load_split(config: RunConfig) -> Cohort:
    cohort = parse_cohort(_read_text(config.data_path))
    if config.split == "all":
        return cohort
    train, dev, test = split_cohort(cohort, seed=config.seed)
    return {"train": train, "dev": dev, "test": test}[config.split]


def _f(x: float) -> str:
    # shortest round-trippable decimal form, for reparseable reports
    return repr(float(x))


# --------------------------------------------------------------------------
# train
# --------------------------------------------------------------------------


def _print_wald(model: PrognosticModel, out=None) -> None:
    out = out or sys.stdout
    rows = wald_report(model.cox)
    header = f"{'covariate':<16} {'HR':>10} {'lo95':>10} {'hi95':>10} {'z':>9} {'p':>12}"
    out.write(header + "\n")
    out.write("-" * len(header) + "\n")
    for r in rows:
        out.write(
            f"{r.name:<16} {r.hazard_ratio:>10.4f} {r.hr_lo95:>10.4f} "
            f"{r.hr_hi95:>10.4f} {r.z:>9.3f} {r.p:>12.4g}\n"
        )


def cmd_train(config: RunConfig) -> int:
    if config.endpoint is None:
        raise ValidationError("train requires --endpoint")
    if config.model_path is None:
        raise ValidationError("train requires --model (output path)")
    if config.feature_mode is None:
        raise ValidationError("train requires --features")
    cohort = parse_cohort(_read_text(config.data_path))
    train, dev, _ = split_cohort(cohort, seed=config.seed)
    model, path = train_model(
        train,
        config.endpoint,
        feature_mode=config.feature_mode,
        genotype_mode=config.genotype_mode,
        ties=config.tie_method,
        dev=dev,
        k_features=config.k_features,
        lambda_override=config.lambda_override,
    )
    save_model(model, config.model_path)
    if config.path_out and path is not None:
        _write_text(config.path_out, path_to_csv(path))
    _print_wald(model)
    print(f"wrote {config.model_path}")
    return 0


# --------------------------------------------------------------------------
# eval
# --------------------------------------------------------------------------


def _eval_predictions(config: RunConfig, cohort: Cohort):
    """(endpoint, ranking scores, predicted-survival fn over a grid)."""
    if config.feature_mode == "sss":
        scores = np.array(
            [float(sss_score(p.left_eye, p.right_eye)) for p in cohort]
        )
        # fixed scale: the tabulated risk, constant over the horizon
        risks = np.array([sss_risk(int(s)) for s in scores])
        endpoint = config.endpoint
        if endpoint is None:
            raise ValidationError("--features sss evaluation requires --endpoint")

        def surv(grid):
            return np.repeat(1.0 - risks[:, None], len(grid), axis=1)

        return endpoint, scores, surv

    if config.model_path is None:
        raise ValidationError("eval requires --model (or --features sss)")
    bundle = load_model(config.model_path)
    if config.feature_mode and config.feature_mode != bundle.cox.feature_mode:
        raise ModelDataMismatch(
            f"model was trained in {bundle.cox.feature_mode} mode, "
            f"not {config.feature_mode}"
        )
    endpoint = config.endpoint or bundle.endpoint
    if endpoint is not bundle.endpoint:
        raise ModelDataMismatch(
            f"model predicts {bundle.endpoint.value}, not {endpoint.value}"
        )
    scores = bundle.cox.cohort_linear_predictors(cohort)

    def surv(grid):
        return bundle.survival_curves(cohort, grid)

    return endpoint, scores, surv


def cmd_eval(config: RunConfig) -> int:
    out_dir = config.out or "."
    os.makedirs(out_dir, exist_ok=True)
    cohort = _load_split(config)
    endpoint, scores, surv = _eval_predictions(config, cohort)
    times, events = cohort.outcome_arrays(endpoint)

    lines = ["horizon,c,lo95,hi95"]
    for h in config.horizons:
        ci = concordance_ci(
            scores, times, events, horizon=float(h),
            n_boot=config.bootstrap_b, seed=config.seed,
        )
        lines.append(f"{h},{_f(ci.point)},{_f(ci.lo95)},{_f(ci.hi95)}")
    ci = concordance_ci(
        scores, times, events, horizon=None,
        n_boot=config.bootstrap_b, seed=config.seed,
    )
    lines.append(f"all,{_f(ci.point)},{_f(ci.lo95)},{_f(ci.hi95)}")
    _write_text(os.path.join(out_dir, "cstat.csv"), "\n".join(lines) + "\n")

    # grid for curves: requested horizons within observed follow-up
    follow_up = float(times.max())
    grid = np.array(
        sorted({float(h) for h in config.horizons if h <= follow_up})
    )

    lines = ["t,brier"]
    if grid.size:
        S = surv(grid)
        curve = brier_curve(S, times, events, grid)
        for t, b in zip(curve.grid, curve.scores):
            lines.append(f"{_f(t)},{_f(b)}")
    _write_text(os.path.join(out_dir, "brier.csv"), "\n".join(lines) + "\n")

    lines = ["group,t,observed,predicted"]
    if grid.size:
        S = surv(grid)
        groups = calibration_by_group(
            cohort,
            lambda p: sss_score(p.left_eye, p.right_eye),
            1.0 - S,
            grid,
            endpoint,
            expected_groups=range(5),
        )
        for g in groups:
            for t, obs, pred in zip(g.grid, g.observed, g.predicted):
                lines.append(f"{g.group},{_f(t)},{_f(obs)},{_f(pred)}")
    _write_text(os.path.join(out_dir, "calibration.csv"), "\n".join(lines) + "\n")

    print(f"wrote cstat.csv, brier.csv, calibration.csv to {out_dir}")
    return 0


# --------------------------------------------------------------------------
# predict
# --------------------------------------------------------------------------


def _load_models(config: RunConfig) -> dict:
    models = {}
    if config.manifest_path:
        base = os.path.dirname(os.path.abspath(config.manifest_path))
        manifest = wire.load_manifest(_read_text(config.manifest_path), base)
        for ep, path in manifest.items():
            bundle = load_model(path)
            if bundle.endpoint is not ep:
                raise ModelDataMismatch(
                    f"manifest lists {path} under {ep.value}, but it "
                    f"predicts {bundle.endpoint.value}"
                )
            models[ep] = bundle
    if config.model_path:
        bundle = load_model(config.model_path)
        models[bundle.endpoint] = bundle
    if not models:
        raise ValidationError("predict requires --model or --models")
    return models


def cmd_predict(config: RunConfig) -> int:
    models = _load_models(config)
    raw = _read_text(config.input_path or "-")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SchemaViolation("input", f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SchemaViolation("input", "must be a JSON object")
    if "horizons" not in doc:
        doc = {**doc, "horizons": list(config.horizons)}
    if "endpoints" not in doc and config.endpoint is not None:
        doc = {**doc, "endpoints": [config.endpoint.value]}
    response = wire.build_prediction_response(models, doc)
    print(json.dumps(response, indent=2, sort_keys=True))
    return 0


# --------------------------------------------------------------------------
# report
# --------------------------------------------------------------------------


def cmd_report(config: RunConfig) -> int:
    """Join per-endpoint  cstat.csv  files into one discrimination table.

    Expects <eval-dir>/<endpoint>/cstat.csv for each evaluated endpoint
    and keeps horizons 1..5 plus the unrestricted row, matching the
    shape of the headline results table.
    """
    if not config.eval_dir:
        raise ValidationError("report requires --eval-dir")
    rows = []
    for ep in wire.ENDPOINT_ORDER:
        path = os.path.join(config.eval_dir, ep.value, "cstat.csv")
        if not os.path.exists(path):
            continue
        text = _read_text(path)
        lines = text.strip().split("\n")
        if not lines or lines[0] != "horizon,c,lo95,hi95":
            raise ValidationError(f"{path} is not a cstat.csv report")
        by_horizon = {}
        for line in lines[1:]:
            cells = line.split(",")
            if len(cells) != 4:
                raise ValidationError(f"{path}: malformed row {line!r}")
            by_horizon[cells[0]] = cells[1:]
        for h in REPORT_HORIZONS:
            if h in by_horizon:
                rows.append(",".join([ep.value, h] + by_horizon[h]))
    if not rows:
        raise ValidationError(f"no cstat.csv files found under {config.eval_dir}")
    table = "\n".join(["endpoint,horizon,c,lo95,hi95"] + rows) + "\n"
    if config.out:
        _write_text(config.out, table)
        print(f"wrote {config.out}")
    else:
        sys.stdout.write(table)
    return 0


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prognos",
        description="Survival-prognosis workflows over participant CSV cohorts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=False):
        if data:
            p.add_argument("--data", required=True, help="cohort CSV")
        p.add_argument("--seed", type=int, default=42)
        p.add_argument(
            "--horizons", default="1-12", help="e.g. '1-12', '5', or '1,2,5'"
        )

    p = sub.add_parser("train", help="fit a prognostic model")
    common(p, data=True)
    p.add_argument("--model", required=True, help="output model JSON path")
    p.add_argument(
        "--endpoint", required=True, choices=sorted(ENDPOINT_FLAGS)
    )
    p.add_argument(
        "--features", default="deep", choices=sorted(FEATURE_FLAGS)
    )
    p.add_argument("--genotype", default="none", choices=["none", "snps", "grs"])
    p.add_argument("--ties", default="efron", choices=["efron", "breslow"])
    p.add_argument(
        "--lambda", dest="lambda_override", type=float, default=None,
        help="pin the penalty instead of selecting it on the dev split",
    )
    p.add_argument("--k-features", type=int, default=16)
    p.add_argument("--path-out", default=None, help="export the penalty path CSV")

    p = sub.add_parser("eval", help="evaluate a model on a data split")
    common(p, data=True)
    p.add_argument("--model", default=None, help="model JSON path")
    p.add_argument("--endpoint", default=None, choices=sorted(ENDPOINT_FLAGS))
    p.add_argument(
        "--features", default=None, choices=sorted(FEATURE_FLAGS),
        help="'sss' evaluates the fixed clinical scale without a model",
    )
    p.add_argument("--bootstrap", type=int, default=200)
    p.add_argument("--split", default="test", choices=list(SPLIT_NAMES))
    p.add_argument("--out", default=None, help="report directory (default .)")

    p = sub.add_parser("predict", help="risk profile for one subject")
    p.add_argument("--model", default=None, help="model JSON path")
    p.add_argument("--models", default=None, help="manifest mapping endpoints to files")
    p.add_argument("--input", default="-", help="subject JSON (default stdin)")
    p.add_argument("--endpoint", default=None, choices=sorted(ENDPOINT_FLAGS))
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--horizons", default="1-12")

    p = sub.add_parser("report", help="combine eval outputs into one table")
    p.add_argument("--eval-dir", required=True)
    p.add_argument("--out", default=None, help="output CSV (default stdout)")

    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    feature = getattr(args, "features", None)
    return RunConfig(
        command=args.command,
        data_path=getattr(args, "data", None),
        model_path=getattr(args, "model", None),
        manifest_path=getattr(args, "models", None),
        endpoint=ENDPOINT_FLAGS[args.endpoint] if getattr(args, "endpoint", None) else None,
        feature_mode=FEATURE_FLAGS[feature] if feature else None,
        genotype_mode=getattr(args, "genotype", "none"),
        horizons=parse_horizon_spec(getattr(args, "horizons", "1-12")),
        bootstrap_b=getattr(args, "bootstrap", 200),
        seed=getattr(args, "seed", 42),
        tie_method=getattr(args, "ties", "efron"),
        lambda_override=getattr(args, "lambda_override", None),
        k_features=getattr(args, "k_features", 16),
        split=getattr(args, "split", "test"),
        out=getattr(args, "out", None),
        input_path=getattr(args, "input", None),
        path_out=getattr(args, "path_out", None),
        eval_dir=getattr(args, "eval_dir", None),
    )


COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "predict": cmd_predict,
    "report": cmd_report,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            config = _config_from_args(args)
            return COMMANDS[config.command](config)
    except ValidationError as exc:
        print(f"prognos: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"prognos: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"prognos: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
