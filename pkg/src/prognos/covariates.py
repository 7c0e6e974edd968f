"""Covariate naming, covariate-set specification, and design assembly.

Models are defined over named covariates. Names resolve against a
participant as follows:

    f<j>            j-th deep feature (raw; standardization is applied
                    by the model, not here)
    age             years at baseline
    smoking_former  1 if former smoker else 0 (never is the reference)
    smoking_current 1 if current smoker else 0
    cfh             CFH risk-allele count 0/1/2
    arms2           ARMS2 risk-allele count 0/1/2
    grs             polygenic risk score, raw
    drusen_le/_re   drusen grade ordinal 0/1/2 per eye
    pig_le/_re      pigmentary-abnormality indicator 0/1 per eye

A :class:`CovariateSpec` picks the leading block (selected deep
features, or the four eye gradings) and the trailing genotype block.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .cohort import Cohort, Normalization, Participant, Smoking
from .errors import MissingGenotype, ValidationError

FEATURE_MODES = ("deep_features", "dl_grading", "calculator", "sss")
GENOTYPE_MODES = ("none", "snps", "grs")

CLINICAL_NAMES = ("age", "smoking_former", "smoking_current")
GRADING_NAMES = ("drusen_le", "drusen_re", "pig_le", "pig_re")


def feature_index(name: str) -> Optional[int]:
    """Index j for a deep-feature name 'f<j>', else None."""
    if len(name) > 1 and name[0] == "f" and name[1:].isdigit():
        return int(name[1:])
    return None


def covariate_value(participant: Participant, name: str) -> float:
    idx = feature_index(name)
    if idx is not None:
        if participant.deep_features is None:
            raise ValidationError(
                f"participant {participant.id} has no deep features"
            )
        if idx >= participant.deep_features.size:
            raise ValidationError(f"feature index out of range: {name}")
        return float(participant.deep_features[idx])
    if name == "age":
        return participant.age
    if name == "smoking_former":
        return 1.0 if participant.smoking is Smoking.FORMER else 0.0
    if name == "smoking_current":
        return 1.0 if participant.smoking is Smoking.CURRENT else 0.0
    if name == "cfh":
        if participant.genotype.cfh is None:
            raise MissingGenotype(f"participant {participant.id}: cfh missing")
        return float(participant.genotype.cfh.allele_count)
    if name == "arms2":
        if participant.genotype.arms2 is None:
            raise MissingGenotype(f"participant {participant.id}: arms2 missing")
        return float(participant.genotype.arms2.allele_count)
    if name == "grs":
        if participant.genotype.grs is None:
            raise MissingGenotype(f"participant {participant.id}: grs missing")
        return participant.genotype.grs
    if name == "drusen_le":
        return float(participant.left_eye.drusen.ordinal)
    if name == "drusen_re":
        return float(participant.right_eye.drusen.ordinal)
    if name == "pig_le":
        return float(participant.left_eye.pigment.ordinal)
    if name == "pig_re":
        return float(participant.right_eye.pigment.ordinal)
    raise ValidationError(f"unknown covariate name: {name!r}")


def build_vector(participant: Participant, names: Sequence[str]) -> np.ndarray:
    return np.array([covariate_value(participant, n) for n in names], dtype=float)


def build_matrix(cohort: Cohort, names: Sequence[str]) -> np.ndarray:
    """Raw (unstandardized) design matrix, rows in cohort order."""
    return np.vstack([build_vector(p, names) for p in cohort])


def genotype_names(genotype_mode: str) -> tuple:
    if genotype_mode == "none":
        return ()
    if genotype_mode == "snps":
        return ("cfh", "arms2")
    if genotype_mode == "grs":
        return ("grs",)
    raise ValidationError(f"unknown genotype mode: {genotype_mode!r}")


@dataclass(frozen=True)
class CovariateSpec:
    """Declarative description of a model's covariate set.

    ``selected_features`` (deep-feature names like 'f17') is required
    for deep_features mode and ignored otherwise. Ordering is stable:
    feature block, then age, the two smoking indicators, then the
    genotype block.
    """

    feature_mode: str
    genotype_mode: str = "none"
    selected_features: Optional[tuple] = None

    def __post_init__(self):
        if self.feature_mode not in FEATURE_MODES:
            raise ValidationError(f"unknown feature mode: {self.feature_mode!r}")
        if self.genotype_mode not in GENOTYPE_MODES:
            raise ValidationError(f"unknown genotype mode: {self.genotype_mode!r}")
        if self.selected_features is not None:
            object.__setattr__(
                self, "selected_features", tuple(self.selected_features)
            )

    def names(self) -> tuple:
        if self.feature_mode == "sss":
            raise ValidationError("sss mode does not define a covariate vector")
        if self.feature_mode == "calculator" and self.genotype_mode == "grs":
            raise ValidationError(
                "calculator mode supports genotype modes none/snps only"
            )
        geno = genotype_names(self.genotype_mode)
        if self.feature_mode == "deep_features":
            if not self.selected_features:
                raise ValidationError(
                    "deep_features mode requires selected feature names"
                )
            for name in self.selected_features:
                if feature_index(name) is None:
                    raise ValidationError(f"not a deep-feature name: {name!r}")
            lead = self.selected_features
        else:  # dl_grading and calculator share the four-grade block
            lead = GRADING_NAMES
        return lead + CLINICAL_NAMES + geno


def model_normalization(
    names: Sequence[str], feature_norm: Optional[Normalization]
) -> Normalization:
    """Per-covariate standardization aligned with ``names``.

    Deep-feature entries take their train-fitted mean/sd; every other
    covariate passes through unchanged (identity entry).
    """
    names = tuple(names)
    mean = np.zeros(len(names))
    sd = np.ones(len(names))
    constant = np.zeros(len(names), dtype=bool)
    for k, name in enumerate(names):
        j = feature_index(name)
        if j is None:
            continue
        if feature_norm is None:
            raise ValidationError(
                "deep-feature covariates need a fitted normalization"
            )
        if j >= feature_norm.dim:
            raise ValidationError(f"feature index out of range: {name}")
        mean[k] = feature_norm.mean[j]
        sd[k] = feature_norm.sd[j]
        constant[k] = bool(feature_norm.constant[j])
    return Normalization(names=names, mean=mean, sd=sd, constant=constant)
