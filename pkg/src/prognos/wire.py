"""Shared request/response logic for the prediction surfaces.

The CLI predict command and the HTTP service accept the same
subject document and produce the same response values, built here so
the two surfaces cannot drift apart. A subject document looks like

    {
      "grades": {"left":  {"drusen": "large",  "pigment": "present"},
                 "right": {"drusen": "medium", "pigment": "absent"}},
      "deep_features": [ ... 512 numbers ... ],
      "age": 71.5,
      "smoking": "former",
      "genotype": {"cfh": "CT", "arms2": "GG", "grs": 0.12},
      "horizons": [1, 2, 5],
      "endpoints": ["late_amd", "ga"]
    }

with every section optional except what the loaded models require.
Malformed fields raise :class:`SchemaViolation` (a 400 at the HTTP
layer); structurally valid requests that the loaded models cannot
serve raise :class:`ModelDataMismatch` and kin (a 422).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cohort import (
    N_DEEP_FEATURES,
    Arms2,
    Cfh,
    Drusen,
    Endpoint,
    EyeGrade,
    Genotype,
    Pigment,
    Smoking,
)
from .covariates import feature_index
from .errors import (
    MissingGenotype,
    MissingGrades,
    ModelDataMismatch,
    SchemaViolation,
)
from .model import PrognosticModel, wire_probability
from .scales import DEFAULT_RISK_TABLE, RiskTable, sss_assess

HORIZON_MIN = 1
HORIZON_MAX = 12
DEFAULT_HORIZONS = tuple(range(HORIZON_MIN, HORIZON_MAX + 1))

# canonical response ordering
ENDPOINT_ORDER = (Endpoint.LATE_AMD, Endpoint.GA, Endpoint.NV)


def parse_horizons(value) -> tuple:
    if value is None:
        return DEFAULT_HORIZONS
    if not isinstance(value, list) or not value:
        raise SchemaViolation("horizons", "must be a nonempty list of integers")
    out = []
    for h in value:
        if isinstance(h, bool) or not isinstance(h, int):
            raise SchemaViolation(
                "horizons", f"must be integers in {HORIZON_MIN}..{HORIZON_MAX}"
            )
        if not HORIZON_MIN <= h <= HORIZON_MAX:
            raise SchemaViolation(
                "horizons",
                f"{h} outside the supported range {HORIZON_MIN}..{HORIZON_MAX}",
            )
        out.append(h)
    return tuple(out)


def parse_endpoints(value, available) -> tuple:
    """Requested endpoints, defaulting to everything loaded."""
    if value is None:
        return tuple(ep for ep in ENDPOINT_ORDER if ep in available)
    if not isinstance(value, list) or not value:
        raise SchemaViolation("endpoints", "must be a nonempty list of names")
    out = []
    for raw in value:
        try:
            ep = Endpoint(raw)
        except ValueError:
            valid = ", ".join(e.value for e in Endpoint)
            raise SchemaViolation(
                "endpoints", f"unknown endpoint {raw!r}; expected one of {valid}"
            ) from None
        if ep not in out:
            out.append(ep)
    for ep in out:
        if ep not in available:
            raise ModelDataMismatch(f"no model loaded for endpoint {ep.value}")
    return tuple(out)


def _parse_enum(value, enum_cls, field: str, transform=str.lower):
    if not isinstance(value, str):
        raise SchemaViolation(field, "must be a string")
    try:
        return enum_cls(transform(value))
    except ValueError:
        valid = ", ".join(e.value for e in enum_cls)
        raise SchemaViolation(
            field, f"invalid value {value!r}; expected one of {valid}"
        ) from None


def _parse_eye(doc, field: str) -> EyeGrade:
    if not isinstance(doc, dict):
        raise SchemaViolation(field, "must be an object with drusen and pigment")
    for key in ("drusen", "pigment"):
        if key not in doc:
            raise SchemaViolation(f"{field}.{key}", "is required")
    return EyeGrade(
        drusen=_parse_enum(doc["drusen"], Drusen, f"{field}.drusen"),
        pigment=_parse_enum(doc["pigment"], Pigment, f"{field}.pigment"),
    )


@dataclass(frozen=True)
class Subject:
    """Validated prediction inputs; every section optional."""

    left: Optional[EyeGrade] = None
    right: Optional[EyeGrade] = None
    age: Optional[float] = None
    smoking: Optional[Smoking] = None
    genotype: Genotype = Genotype()
    deep_features: Optional[np.ndarray] = None

    @property
    def has_grades(self) -> bool:
        return self.left is not None and self.right is not None


def parse_subject(doc: dict) -> Subject:
    if not isinstance(doc, dict):
        raise SchemaViolation("body", "must be a JSON object")

    left = right = None
    grades = doc.get("grades")
    if grades is not None:
        if not isinstance(grades, dict):
            raise SchemaViolation("grades", "must be an object with left and right")
        for key in ("left", "right"):
            if key not in grades:
                raise SchemaViolation(f"grades.{key}", "is required")
        left = _parse_eye(grades["left"], "grades.left")
        right = _parse_eye(grades["right"], "grades.right")

    age = doc.get("age")
    if age is not None:
        if isinstance(age, bool) or not isinstance(age, (int, float)):
            raise SchemaViolation("age", "must be a number")
        age = float(age)
        if not (math.isfinite(age) and age > 0):
            raise SchemaViolation("age", "must be finite and positive")

    smoking = doc.get("smoking")
    if smoking is not None:
        smoking = _parse_enum(smoking, Smoking, "smoking")

    cfh = arms2 = grs = None
    genotype = doc.get("genotype")
    if genotype is not None:
        if not isinstance(genotype, dict):
            raise SchemaViolation("genotype", "must be an object")
        if genotype.get("cfh") is not None:
            cfh = _parse_enum(genotype["cfh"], Cfh, "genotype.cfh", str.upper)
        if genotype.get("arms2") is not None:
            arms2 = _parse_enum(genotype["arms2"], Arms2, "genotype.arms2", str.upper)
        if genotype.get("grs") is not None:
            raw = genotype["grs"]
            if isinstance(raw, bool) or not isinstance(raw, (int, float)):
                raise SchemaViolation("genotype.grs", "must be a number")
            grs = float(raw)
            if not math.isfinite(grs):
                raise SchemaViolation("genotype.grs", "must be finite")

    feats = doc.get("deep_features")
    if feats is not None:
        if not isinstance(feats, list) or len(feats) != N_DEEP_FEATURES:
            raise SchemaViolation(
                "deep_features", f"must be a list of {N_DEEP_FEATURES} numbers"
            )
        vec = np.empty(N_DEEP_FEATURES)
        for j, v in enumerate(feats):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise SchemaViolation("deep_features", f"entry {j} must be a number")
            vec[j] = float(v)
        if not np.all(np.isfinite(vec)):
            raise SchemaViolation("deep_features", "entries must be finite")
        feats = vec

    return Subject(
        left=left,
        right=right,
        age=age,
        smoking=smoking,
        genotype=Genotype(cfh=cfh, arms2=arms2, grs=grs),
        deep_features=feats,
    )


def subject_values(names, subject: Subject) -> dict:
    """Resolve a model's covariate names against a subject.

    Raises :class:`ModelDataMismatch` (or the genotype/grades variants)
    when the subject lacks something the model needs.
    """
    values = {}
    for name in names:
        j = feature_index(name)
        if j is not None:
            if subject.deep_features is None:
                raise ModelDataMismatch(
                    "this model predicts from deep_features, which the "
                    "request does not carry"
                )
            values[name] = float(subject.deep_features[j])
        elif name == "age":
            if subject.age is None:
                raise ModelDataMismatch("age is required by the loaded model")
            values[name] = subject.age
        elif name in ("smoking_former", "smoking_current"):
            if subject.smoking is None:
                raise ModelDataMismatch("smoking is required by the loaded model")
            target = Smoking.FORMER if name == "smoking_former" else Smoking.CURRENT
            values[name] = 1.0 if subject.smoking is target else 0.0
        elif name == "cfh":
            if subject.genotype.cfh is None:
                raise MissingGenotype("genotype.cfh is required by the loaded model")
            values[name] = float(subject.genotype.cfh.allele_count)
        elif name == "arms2":
            if subject.genotype.arms2 is None:
                raise MissingGenotype("genotype.arms2 is required by the loaded model")
            values[name] = float(subject.genotype.arms2.allele_count)
        elif name == "grs":
            if subject.genotype.grs is None:
                raise MissingGenotype("genotype.grs is required by the loaded model")
            values[name] = subject.genotype.grs
        elif name in ("drusen_le", "pig_le", "drusen_re", "pig_re"):
            if not subject.has_grades:
                raise MissingGrades("grades are required by the loaded model")
            eye = subject.left if name.endswith("_le") else subject.right
            values[name] = float(
                eye.drusen.ordinal if name.startswith("drusen") else eye.pigment.ordinal
            )
        else:
            raise ModelDataMismatch(f"model uses unsupported covariate {name!r}")
    return values


def build_prediction_response(
    models: dict,
    doc: dict,
    risk_table: RiskTable = DEFAULT_RISK_TABLE,
) -> dict:
    """The full predict response for a subject document.

    ``models`` maps :class:`Endpoint` to loaded bundles. Probabilities
    are rounded to the wire precision; the sss block appears whenever
    both eyes' grades were provided.
    """
    horizons = parse_horizons(doc.get("horizons"))
    endpoints = parse_endpoints(doc.get("endpoints"), models)
    subject = parse_subject(doc)

    predictions = {}
    for ep in endpoints:
        bundle = models[ep]
        values = subject_values(bundle.covariate_names, subject)
        profile = bundle.predict_profile(values, horizons)
        predictions[ep.value] = [
            {
                "horizon_years": int(h),
                "probability": wire_probability(risk),
                "extrapolated": flag,
            }
            for h, risk, flag in zip(
                profile.horizons, profile.absolute_risk, profile.extrapolated
            )
        ]

    sss = None
    if subject.has_grades:
        result = sss_assess(subject.left, subject.right, table=risk_table)
        sss = {
            "score": result.score,
            "five_year_risk": wire_probability(result.five_year_risk),
        }
    return {"predictions": predictions, "sss": sss}


def model_metadata(models: dict) -> dict:
    """The model-inspection response: what is loaded and how to call it."""
    loaded = {}
    for ep in ENDPOINT_ORDER:
        if ep not in models:
            continue
        bundle = models[ep]
        c = bundle.cox
        loaded[ep.value] = {
            "feature_mode": c.feature_mode,
            "genotype_mode": c.genotype_mode,
            "tie_method": c.tie_method,
            "covariate_names": list(c.covariate_names),
            "coefficients": {
                name: float(b) for name, b in zip(c.covariate_names, c.beta)
            },
            "converged": c.converged,
            "horizon_limit_years": bundle.baseline.horizon_limit,
            "train_fingerprint": c.train_fingerprint,
        }
    return {
        "endpoints": list(loaded),
        "horizons": list(DEFAULT_HORIZONS),
        "models": loaded,
    }


def load_manifest(text: str, base_dir: str = ".") -> dict:
    """Parse a manifest mapping endpoint names to model file paths.

    Returns {Endpoint: path} with relative paths resolved against
    ``base_dir``. Validation of the files themselves happens at load.
    """
    import json
    import os

    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation("manifest", f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or not doc:
        raise SchemaViolation("manifest", "must map endpoint names to file paths")
    out = {}
    for key, path in doc.items():
        try:
            ep = Endpoint(key)
        except ValueError:
            valid = ", ".join(e.value for e in Endpoint)
            raise SchemaViolation(
                "manifest", f"unknown endpoint {key!r}; expected one of {valid}"
            ) from None
        if not isinstance(path, str):
            raise SchemaViolation("manifest", f"path for {key} must be a string")
        out[ep] = path if os.path.isabs(path) else os.path.join(base_dir, path)
    return out
