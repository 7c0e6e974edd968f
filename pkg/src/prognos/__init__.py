"""Survival prognosis from deep features or clinical gradings.

Cox proportional-hazards modeling with L1 feature screening, absolute
risk prediction against a Breslow baseline, the standard evaluation
battery (horizon concordance with bootstrap intervals, censoring-
weighted prediction error, grouped calibration, Wald tests), and the
simplified clinical severity scale. Ships as a library, a CLI
(``prognos``), and an HTTP prediction service (``prognos-serve``).
"""

from .cohort import (
    Arms2,
    Cfh,
    Cohort,
    ColumnMap,
    Drusen,
    Endpoint,
    EyeGrade,
    Genotype,
    Normalization,
    Outcome,
    Participant,
    Pigment,
    Smoking,
    parse_cohort,
    serialize_cohort,
    split_cohort,
    zscore_apply,
    zscore_fit,
)
from .covariates import CovariateSpec
from .cox import (
    BaselineSurvival,
    CoxFitResult,
    RiskProfile,
    WaldRow,
    baseline_from_arrays,
    newton_fit,
    partial_loglik,
    risk_profile,
    survival_matrix,
    wald_rows,
)
from .errors import (
    DegenerateResample,
    EmptyGroup,
    ModelDataMismatch,
    MonotoneLikelihood,
    Nonconvergence,
    NumericalError,
    PrognosError,
    SchemaViolation,
    SingularInformation,
    ValidationError,
    ZeroCensoringWeight,
)
from .featsel import (
    RegularizationPath,
    choose_lambda,
    lasso_cox_path,
    lasso_path_for_cohort,
    select_features,
)
from .metrics import (
    BootstrapCI,
    BrierCurve,
    ConcordanceResult,
    KMCurve,
    bootstrap_ci,
    brier_curve,
    calibration_by_group,
    concordance,
    concordance_ci,
    kaplan_meier,
)
from .model import (
    CoxModel,
    PrognosticModel,
    breslow_baseline,
    cox_fit,
    load_model,
    predict_survival,
    save_model,
    train_model,
    wald_report,
)
from .scales import (
    DEFAULT_RISK_TABLE,
    RiskTable,
    SSSResult,
    sss_assess,
    sss_risk,
    sss_score,
)

__version__ = "0.1.0"

__all__ = [
    "Arms2",
    "BaselineSurvival",
    "BootstrapCI",
    "BrierCurve",
    "Cfh",
    "Cohort",
    "ColumnMap",
    "ConcordanceResult",
    "CovariateSpec",
    "CoxFitResult",
    "CoxModel",
    "DEFAULT_RISK_TABLE",
    "DegenerateResample",
    "Drusen",
    "EmptyGroup",
    "Endpoint",
    "EyeGrade",
    "Genotype",
    "KMCurve",
    "ModelDataMismatch",
    "MonotoneLikelihood",
    "Nonconvergence",
    "Normalization",
    "NumericalError",
    "Outcome",
    "Participant",
    "Pigment",
    "PrognosError",
    "PrognosticModel",
    "RegularizationPath",
    "RiskProfile",
    "RiskTable",
    "SSSResult",
    "SchemaViolation",
    "SingularInformation",
    "Smoking",
    "ValidationError",
    "WaldRow",
    "ZeroCensoringWeight",
    "baseline_from_arrays",
    "bootstrap_ci",
    "breslow_baseline",
    "brier_curve",
    "calibration_by_group",
    "choose_lambda",
    "concordance",
    "concordance_ci",
    "cox_fit",
    "kaplan_meier",
    "lasso_cox_path",
    "lasso_path_for_cohort",
    "load_model",
    "newton_fit",
    "parse_cohort",
    "partial_loglik",
    "predict_survival",
    "risk_profile",
    "save_model",
    "select_features",
    "serialize_cohort",
    "split_cohort",
    "sss_assess",
    "sss_risk",
    "sss_score",
    "survival_matrix",
    "train_model",
    "wald_report",
    "wald_rows",
    "zscore_apply",
    "zscore_fit",
]
