"""Cohort-level fitting, the trained-model bundle, and persistence.

``cox_fit`` assembles a design matrix from a covariate specification,
standardizes deep features with train-fitted parameters, and maximizes
the partial likelihood. ``breslow_baseline`` turns the fitted relative
hazards into a baseline survival curve on the same training split.
:class:`PrognosticModel` couples the two into the deployable artifact,
which serializes to a single JSON document (floats round-trip exactly
via shortest-repr encoding).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import covariates as cov
from .cohort import Cohort, Endpoint, Normalization, zscore_apply, zscore_fit
from .covariates import CovariateSpec
from .cox import (
    BaselineSurvival,
    RiskProfile,
    baseline_from_arrays,
    newton_fit,
    risk_profile,
    survival_matrix,
    wald_rows,
)
from .errors import ModelDataMismatch, NotConverged, ValidationError
from .featsel import choose_lambda, lasso_cox_path, select_features

MODEL_SCHEMA_VERSION = "1"

# probabilities cross the wire (CLI output and HTTP responses) rounded
# to this many fractional digits so the two surfaces agree bit-for-bit
WIRE_DECIMALS = 6


def wire_probability(x: float) -> float:
    return round(float(x), WIRE_DECIMALS)


def train_fingerprint(
    cohort: Cohort, endpoint: Endpoint, spec: CovariateSpec, ties: str
) -> str:
    h = hashlib.sha256()
    h.update(
        "|".join(
            (
                endpoint.value,
                spec.feature_mode,
                spec.genotype_mode,
                ties,
                str(len(cohort)),
            )
        ).encode()
    )
    for p in cohort:
        h.update(p.id.encode())
        h.update(b"\x00")
    return h.hexdigest()


@dataclass(frozen=True)
class CoxModel:
    """Fitted relative-hazard model over named covariates."""

    endpoint: Endpoint
    feature_mode: str
    genotype_mode: str
    tie_method: str
    covariate_names: tuple
    beta: np.ndarray
    normalization: Normalization
    info_inverse: np.ndarray
    converged: bool
    iterations: int
    gradient_norm: float
    diagnostics: dict
    train_fingerprint: str
    schema_version: str = MODEL_SCHEMA_VERSION

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(
            self, "info_inverse", np.asarray(self.info_inverse, dtype=float)
        )
        p = len(self.covariate_names)
        if beta.shape != (p,) or self.normalization.dim != p:
            raise ModelDataMismatch("beta/normalization must align with names")
        if self.info_inverse.shape != (p, p):
            raise ModelDataMismatch("info_inverse must be p x p")

    def linear_predictor(self, raw) -> np.ndarray:
        """Raw covariate rows (in covariate_names order) to x'beta."""
        raw = np.atleast_2d(np.asarray(raw, dtype=float))
        return self.normalization.transform(raw) @ self.beta

    def cohort_linear_predictors(self, cohort: Cohort) -> np.ndarray:
        raw = cov.build_matrix(cohort, self.covariate_names)
        return self.linear_predictor(raw)


def cox_fit(
    train: Cohort,
    spec: CovariateSpec,
    endpoint: Endpoint,
    tie_method: str = "efron",
    max_iter: int = 100,
    tol: float = 1e-8,
    feature_norm: Optional[Normalization] = None,
) -> CoxModel:
    """Fit the specified covariate set on a training cohort.

    Deep features are standardized with parameters fit on this cohort
    (or with ``feature_norm`` when the caller already fit them, e.g.
    before feature screening); all other covariates enter raw.
    """
    names = spec.names()
    uses_features = any(cov.feature_index(n) is not None for n in names)
    if uses_features and feature_norm is None:
        feature_norm = zscore_fit(train)
    norm = cov.model_normalization(names, feature_norm if uses_features else None)
    X = norm.transform(cov.build_matrix(train, names))
    times, events = train.outcome_arrays(endpoint)
    fit = newton_fit(X, times, events, ties=tie_method, tol=tol, max_iter=max_iter)
    return CoxModel(
        endpoint=endpoint,
        feature_mode=spec.feature_mode,
        genotype_mode=spec.genotype_mode,
        tie_method=tie_method,
        covariate_names=names,
        beta=fit.beta,
        normalization=norm,
        info_inverse=fit.info_inverse,
        converged=fit.converged,
        iterations=fit.iterations,
        gradient_norm=fit.gradient_norm,
        diagnostics={"loglik": fit.loglik, "n": fit.n, "n_events": fit.n_events},
        train_fingerprint=train_fingerprint(train, endpoint, spec, tie_method),
    )


def breslow_baseline(
    model: CoxModel, train: Cohort, endpoint: Optional[Endpoint] = None
) -> BaselineSurvival:
    """Baseline survival for a fitted model, estimated on its own
    training cohort (enforced through the training fingerprint)."""
    endpoint = endpoint or model.endpoint
    spec = CovariateSpec(
        feature_mode=model.feature_mode,
        genotype_mode=model.genotype_mode,
        selected_features=tuple(
            n for n in model.covariate_names if cov.feature_index(n) is not None
        )
        or None,
    )
    expected = train_fingerprint(train, endpoint, spec, model.tie_method)
    if expected != model.train_fingerprint:
        raise ModelDataMismatch(
            "baseline must be estimated on the model's own training cohort"
        )
    X = model.normalization.transform(cov.build_matrix(train, model.covariate_names))
    times, events = train.outcome_arrays(endpoint)
    return baseline_from_arrays(X, times, events, model.beta)


def predict_survival(
    model: CoxModel, baseline: BaselineSurvival, covariate_values, horizon: float
) -> float:
    """Progression probability 1 - S0(horizon) ** exp(x'beta).

    ``covariate_values`` is the raw vector in covariate-name order; the
    model's stored normalization is applied here. The baseline is read
    by right-continuous step lookup, clamped beyond its last knot.
    """
    x = np.asarray(covariate_values, dtype=float)
    if x.shape != (len(model.covariate_names),):
        raise ModelDataMismatch(
            f"expected {len(model.covariate_names)} covariates, got {x.shape}"
        )
    eta = float(model.linear_predictor(x)[0])
    return float(1.0 - survival_matrix(baseline, [eta], [horizon])[0, 0])


def wald_report(model: CoxModel) -> tuple:
    """Per-covariate hazard ratios, intervals, z and p values."""
    if not model.converged:
        raise NotConverged("Wald inference requires a converged fit")
    return wald_rows(model.covariate_names, model.beta, model.info_inverse)


# --------------------------------------------------------------------------
# Deployable bundle
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PrognosticModel:
    """A fitted model plus its baseline: everything prediction needs."""

    cox: CoxModel
    baseline: BaselineSurvival

    @property
    def endpoint(self) -> Endpoint:
        return self.cox.endpoint

    @property
    def covariate_names(self) -> tuple:
        return self.cox.covariate_names

    def predict_profile(self, values: dict, horizons: Sequence[float]) -> RiskProfile:
        """Risk profile from a {covariate name: raw value} mapping.

        The mapping must cover the model's covariates exactly; unknown
        or missing names raise :class:`ModelDataMismatch`.
        """
        missing = [n for n in self.covariate_names if n not in values]
        if missing:
            raise ModelDataMismatch(f"missing covariates: {', '.join(missing)}")
        extra = sorted(set(values) - set(self.covariate_names))
        if extra:
            raise ModelDataMismatch(f"unknown covariates: {', '.join(extra)}")
        vec = []
        for name in self.covariate_names:
            v = values[name]
            if isinstance(v, bool) or not isinstance(v, (int, float, np.floating)):
                raise ModelDataMismatch(f"covariate {name} must be a number")
            if not math.isfinite(float(v)):
                raise ModelDataMismatch(f"covariate {name} must be finite")
            vec.append(float(v))
        eta = float(self.cox.linear_predictor(np.asarray(vec))[0])
        return risk_profile(self.baseline, eta, horizons)

    def survival_curves(self, cohort: Cohort, grid) -> np.ndarray:
        """Predicted survival matrix (participants x grid times)."""
        eta = self.cox.cohort_linear_predictors(cohort)
        return survival_matrix(self.baseline, eta, grid)

    def to_json(self) -> str:
        c = self.cox
        doc = {
            "schema_version": c.schema_version,
            "endpoint": c.endpoint.value,
            "feature_mode": c.feature_mode,
            "genotype_mode": c.genotype_mode,
            "tie_method": c.tie_method,
            "covariate_names": list(c.covariate_names),
            "beta": c.beta.tolist(),
            "normalization": {
                "mean": c.normalization.mean.tolist(),
                "sd": c.normalization.sd.tolist(),
                "constant_flags": [bool(f) for f in c.normalization.constant],
            },
            "baseline": {
                "t": self.baseline.knots.tolist(),
                "s0": self.baseline.s0.tolist(),
            },
            "diagnostics": {
                "iterations": c.iterations,
                "gradient_norm": c.gradient_norm,
                **c.diagnostics,
            },
            "info_inverse": c.info_inverse.tolist(),
            "converged": c.converged,
            "train_fingerprint": c.train_fingerprint,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "PrognosticModel":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"model file is not valid JSON: {exc}") from None
        required = (
            "schema_version",
            "endpoint",
            "feature_mode",
            "genotype_mode",
            "tie_method",
            "covariate_names",
            "beta",
            "normalization",
            "baseline",
            "diagnostics",
            "info_inverse",
            "converged",
            "train_fingerprint",
        )
        for key in required:
            if key not in doc:
                raise ValidationError(f"model file missing key {key!r}")
        if doc["schema_version"] != MODEL_SCHEMA_VERSION:
            raise ValidationError(
                f"unsupported model schema version {doc['schema_version']!r}"
            )
        names = tuple(doc["covariate_names"])
        norm = doc["normalization"]
        diagnostics = dict(doc["diagnostics"])
        try:
            iterations = int(diagnostics.pop("iterations"))
            gradient_norm = float(diagnostics.pop("gradient_norm"))
        except KeyError as exc:
            raise ValidationError(f"model diagnostics missing {exc}") from None
        cox = CoxModel(
            endpoint=Endpoint(doc["endpoint"]),
            feature_mode=doc["feature_mode"],
            genotype_mode=doc["genotype_mode"],
            tie_method=doc["tie_method"],
            covariate_names=names,
            beta=np.asarray(doc["beta"], dtype=float),
            normalization=Normalization(
                names=names,
                mean=np.asarray(norm["mean"], dtype=float),
                sd=np.asarray(norm["sd"], dtype=float),
                constant=np.asarray(norm["constant_flags"], dtype=bool),
            ),
            info_inverse=np.asarray(doc["info_inverse"], dtype=float),
            converged=bool(doc["converged"]),
            iterations=iterations,
            gradient_norm=gradient_norm,
            diagnostics=diagnostics,
            train_fingerprint=doc["train_fingerprint"],
        )
        baseline = BaselineSurvival(
            knots=np.asarray(doc["baseline"]["t"], dtype=float),
            s0=np.asarray(doc["baseline"]["s0"], dtype=float),
        )
        return cls(cox=cox, baseline=baseline)


def save_model(model: PrognosticModel, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(model.to_json())


def load_model(path: str) -> PrognosticModel:
    with open(path, "r", encoding="utf-8") as fh:
        return PrognosticModel.from_json(fh.read())


# --------------------------------------------------------------------------
# Training pipeline
# --------------------------------------------------------------------------


def train_model(
    train: Cohort,
    endpoint: Endpoint,
    feature_mode: str = "deep_features",
    genotype_mode: str = "none",
    ties: str = "efron",
    dev: Optional[Cohort] = None,
    k_features: int = 16,
    lambda_override: Optional[float] = None,
    tol: float = 1e-8,
):
    """Fit a deployable model on the training split.

    Deep-features mode first screens the standardized feature block
    with an L1 path (held-out concordance on ``dev`` picks the path
    point unless ``lambda_override`` pins it), keeps the ``k_features``
    strongest coordinates, then refits those features plus the clinical
    covariates without penalty. Grading and calculator modes skip
    screening and fit their fixed covariate sets directly.

    Returns (model: PrognosticModel, path: RegularizationPath or None).
    """
    if feature_mode == "sss":
        raise ValidationError("sss mode is a fixed scale; nothing to train")
    if feature_mode not in cov.FEATURE_MODES:
        raise ValidationError(f"unknown feature mode: {feature_mode!r}")

    feature_norm = None
    path = None
    extra_diag: dict = {}

    if feature_mode == "deep_features":
        if lambda_override is None and (dev is None or len(dev) == 0):
            raise ValidationError(
                "deep_features mode needs a dev split (or an explicit "
                "lambda) to choose the path point"
            )
        times, events = train.outcome_arrays(endpoint)
        feature_norm = zscore_fit(train)
        Xz = zscore_apply(feature_norm, train).feature_matrix()
        if lambda_override is None:
            path = lasso_cox_path(Xz, times, events)
            dev_times, dev_events = dev.outcome_arrays(endpoint)
            Xz_dev = zscore_apply(feature_norm, dev).feature_matrix()
            lam_index = choose_lambda(path, Xz_dev, dev_times, dev_events)
        else:
            if not (lambda_override > 0):
                raise ValidationError("lambda override must be positive")
            # descend from lambda_max so the override point is warm-started
            probe = lasso_cox_path(Xz, times, events, n_lambda=1)
            lam_max = float(probe.lambdas[0])
            if lambda_override >= lam_max:
                grid = np.array([lambda_override])
            else:
                grid = np.concatenate(
                    [
                        lam_max
                        * np.exp(
                            np.linspace(0.0, np.log(lambda_override / lam_max), 25)
                        )[:-1],
                        [lambda_override],
                    ]
                )
            path = lasso_cox_path(Xz, times, events, lambdas=grid)
            lam_index = int(np.argmin(np.abs(path.lambdas - lambda_override)))
        selected = select_features(path, lam_index, k=k_features)
        if not selected:
            raise ValidationError(
                "the selected path point has no active features; "
                "pick a smaller lambda"
            )
        spec = CovariateSpec(
            feature_mode="deep_features",
            genotype_mode=genotype_mode,
            selected_features=tuple(f"f{j}" for j in selected),
        )
        extra_diag = {
            "lambda": float(path.lambdas[lam_index]),
            "lambda_index": lam_index,
            "path_nonzero": int(path.nonzero_counts[lam_index]),
        }
    else:
        spec = CovariateSpec(feature_mode=feature_mode, genotype_mode=genotype_mode)

    cox = cox_fit(
        train, spec, endpoint, tie_method=ties, tol=tol, feature_norm=feature_norm
    )
    cox.diagnostics.update(extra_diag)
    baseline = breslow_baseline(cox, train)
    return PrognosticModel(cox=cox, baseline=baseline), path
