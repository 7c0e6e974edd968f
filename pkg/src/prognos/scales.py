"""Clinical severity scoring and the hand-calculator covariate bridge.

The simplified severity score sums person-level risk factors from the
two-eye grading: one point per eye with large drusen, one point per eye
with pigmentary abnormality, and (optionally) one point when both eyes
carry medium drusen without reaching the large grade. Scores run 0-4
and map to five-year progression risks through a lookup table that
saturates at 50% for the top score.

Scoring presumes neither eye has already reached late disease at
baseline; such participants fall outside the scale's domain.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .cohort import Drusen, EyeGrade, Participant
from .covariates import CovariateSpec, build_vector
from .errors import ScoreOutOfRange, ValidationError

MAX_SCORE = 4


def sss_score(
    left: EyeGrade, right: EyeGrade, modifier_bilateral_medium: bool = True
) -> int:
    """Person-level severity score (0..4) from the two eye gradings."""
    points = sum(1 for eye in (left, right) if eye.drusen is Drusen.LARGE)
    points += sum(1 for eye in (left, right) if eye.pigment.ordinal == 1)
    if (
        modifier_bilateral_medium
        and left.drusen is Drusen.MEDIUM
        and right.drusen is Drusen.MEDIUM
    ):
        points += 1
    return min(points, MAX_SCORE)


@dataclass(frozen=True)
class RiskTable:
    """Five-year progression risk by severity score, strictly increasing."""

    risks: tuple

    def __post_init__(self):
        risks = tuple(float(r) for r in self.risks)
        if len(risks) != MAX_SCORE + 1:
            raise ValidationError(
                f"risk table needs {MAX_SCORE + 1} entries, got {len(risks)}"
            )
        if any(not (0.0 <= r <= 1.0) for r in risks):
            raise ValidationError("risks must lie in [0, 1]")
        if any(b <= a for a, b in zip(risks, risks[1:])):
            raise ValidationError("risks must be strictly increasing in score")
        object.__setattr__(self, "risks", risks)

    def risk_at(self, score) -> float:
        if isinstance(score, bool) or not isinstance(score, (int, np.integer)):
            raise ScoreOutOfRange(f"score must be an integer, got {score!r}")
        if not 0 <= int(score) <= MAX_SCORE:
            raise ScoreOutOfRange(f"score must be in 0..{MAX_SCORE}, got {score}")
        return self.risks[int(score)]

    @classmethod
    def from_json(cls, text: str) -> "RiskTable":
        raw = json.loads(text)
        try:
            risks = tuple(float(raw[str(s)]) for s in range(MAX_SCORE + 1))
        except KeyError as exc:
            raise ValidationError(f"risk table missing score {exc}") from None
        return cls(risks=risks)

    def to_json(self) -> str:
        return json.dumps({str(s): r for s, r in enumerate(self.risks)})


DEFAULT_RISK_TABLE = RiskTable(risks=(0.005, 0.03, 0.12, 0.25, 0.50))


def sss_risk(score: int, table: RiskTable = DEFAULT_RISK_TABLE) -> float:
    """Five-year progression risk for a severity score."""
    return table.risk_at(score)


@dataclass(frozen=True)
class SSSResult:
    score: int
    five_year_risk: float


def sss_assess(
    left: EyeGrade,
    right: EyeGrade,
    table: RiskTable = DEFAULT_RISK_TABLE,
    modifier_bilateral_medium: bool = True,
) -> SSSResult:
    score = sss_score(left, right, modifier_bilateral_medium)
    return SSSResult(score=score, five_year_risk=table.risk_at(score))


def calculator_names(with_genotype: bool = False) -> tuple:
    spec = CovariateSpec(
        feature_mode="calculator",
        genotype_mode="snps" if with_genotype else "none",
    )
    return spec.names()


def calculator_covariates(
    participant: Participant, with_genotype: bool = False
) -> np.ndarray:
    """Raw covariate vector for the calculator model.

    Order: drusen_le, drusen_re, pig_le, pig_re, age, smoking_former,
    smoking_current, then (with genotype) cfh, arms2 allele counts.
    Raises :class:`MissingGenotype` when genotype is requested but the
    participant lacks it.
    """
    return build_vector(participant, calculator_names(with_genotype))
