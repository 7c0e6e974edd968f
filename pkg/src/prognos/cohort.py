"""Participant data model, CSV ingestion, splitting, and standardization.

A cohort is an ordered, immutable collection of participants. Each
participant carries baseline demographics, per-eye macular gradings,
optional genotype, an optional 512-dimensional deep-feature vector,
and per-endpoint time-to-event outcomes.

The canonical interchange format is UTF-8 CSV with a header row:

    id,age,smoking,cfh,arms2,grs,drusen_le,drusen_re,pig_le,pig_re,
    f0..f511,time_lateamd,event_lateamd,time_ga,event_ga,time_nv,event_nv

The feature block ``f0..f511`` is optional as a whole; genotype columns
are optional individually; endpoint column pairs may be any nonempty
subset. A :class:`ColumnMap` remaps nonstandard headers.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

import numpy as np

from .errors import (
    DimensionMismatch,
    DuplicateId,
    EmptyCohort,
    MissingColumn,
    NoFeatures,
    OutOfRangeValue,
    ValidationError,
)

SCHEMA_VERSION = "1"
N_DEEP_FEATURES = 512


class Drusen(Enum):
    """Macular drusen size status, graded per eye."""

    NONE_SMALL = "none_small"
    MEDIUM = "medium"
    LARGE = "large"

    @property
    def ordinal(self) -> int:
        return _DRUSEN_ORDINAL[self]


_DRUSEN_ORDINAL = {Drusen.NONE_SMALL: 0, Drusen.MEDIUM: 1, Drusen.LARGE: 2}

_DRUSEN_ALIASES = {
    "none_small": Drusen.NONE_SMALL,
    "none/small": Drusen.NONE_SMALL,
    "nonesmall": Drusen.NONE_SMALL,
    "none": Drusen.NONE_SMALL,
    "small": Drusen.NONE_SMALL,
    "medium": Drusen.MEDIUM,
    "large": Drusen.LARGE,
    "0": Drusen.NONE_SMALL,
    "1": Drusen.MEDIUM,
    "2": Drusen.LARGE,
}


class Pigment(Enum):
    """Macular pigmentary abnormality, graded per eye."""

    ABSENT = "absent"
    PRESENT = "present"

    @property
    def ordinal(self) -> int:
        return 1 if self is Pigment.PRESENT else 0


_PIGMENT_ALIASES = {
    "absent": Pigment.ABSENT,
    "present": Pigment.PRESENT,
    "0": Pigment.ABSENT,
    "1": Pigment.PRESENT,
}


class Smoking(Enum):
    NEVER = "never"
    FORMER = "former"
    CURRENT = "current"


class Cfh(Enum):
    """CFH rs1061170 genotype; risk-allele count TT=0, CT=1, CC=2."""

    TT = "TT"
    CT = "CT"
    CC = "CC"

    @property
    def allele_count(self) -> int:
        return {"TT": 0, "CT": 1, "CC": 2}[self.value]


class Arms2(Enum):
    """ARMS2 rs10490924 genotype; risk-allele count GG=0, GT=1, TT=2."""

    GG = "GG"
    GT = "GT"
    TT = "TT"

    @property
    def allele_count(self) -> int:
        return {"GG": 0, "GT": 1, "TT": 2}[self.value]


class Endpoint(Enum):
    LATE_AMD = "late_amd"
    GA = "ga"
    NV = "nv"

    @property
    def column_suffix(self) -> str:
        return {"late_amd": "lateamd", "ga": "ga", "nv": "nv"}[self.value]


@dataclass(frozen=True)
class EyeGrade:
    drusen: Drusen
    pigment: Pigment


@dataclass(frozen=True)
class Genotype:
    cfh: Optional[Cfh] = None
    arms2: Optional[Arms2] = None
    grs: Optional[float] = None

    def __post_init__(self):
        if self.grs is not None and not math.isfinite(self.grs):
            raise OutOfRangeValue("grs must be finite when present")


@dataclass(frozen=True)
class Outcome:
    """Time to progression (years from baseline) and event status.

    ``event`` is True when progression was observed at ``time_years``,
    False when follow-up was censored at that time.
    """

    time_years: float
    event: bool

    def __post_init__(self):
        if not (math.isfinite(self.time_years) and self.time_years > 0):
            raise OutOfRangeValue(
                f"time_years must be finite and positive, got {self.time_years}"
            )


@dataclass(frozen=True)
class Participant:
    id: str
    age: float
    smoking: Smoking
    genotype: Genotype
    left_eye: EyeGrade
    right_eye: EyeGrade
    deep_features: Optional[np.ndarray] = None
    outcomes: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (math.isfinite(self.age) and self.age > 0):
            raise OutOfRangeValue(f"age must be finite and positive, got {self.age}")
        if self.deep_features is not None:
            feats = np.asarray(self.deep_features, dtype=float)
            if feats.shape != (N_DEEP_FEATURES,):
                raise DimensionMismatch(
                    f"deep_features must have length {N_DEEP_FEATURES}, "
                    f"got {feats.shape}"
                )
            if not np.all(np.isfinite(feats)):
                raise OutOfRangeValue("deep_features must be finite")
            feats.setflags(write=False)
            object.__setattr__(self, "deep_features", feats)


@dataclass(frozen=True)
class Cohort:
    participants: tuple
    schema_version: str = SCHEMA_VERSION

    def __post_init__(self):
        object.__setattr__(self, "participants", tuple(self.participants))
        presence = {p.deep_features is not None for p in self.participants}
        if len(presence) > 1:
            raise ValidationError(
                "all participants must share presence/absence of deep_features"
            )

    def __len__(self) -> int:
        return len(self.participants)

    def __iter__(self):
        return iter(self.participants)

    @property
    def ids(self) -> tuple:
        return tuple(p.id for p in self.participants)

    @property
    def has_features(self) -> bool:
        return len(self.participants) > 0 and (
            self.participants[0].deep_features is not None
        )

    @property
    def endpoints(self) -> tuple:
        if not self.participants:
            return ()
        return tuple(
            ep for ep in Endpoint if ep in self.participants[0].outcomes
        )

    def feature_matrix(self) -> np.ndarray:
        if not self.has_features:
            raise NoFeatures("cohort carries no deep features")
        return np.vstack([p.deep_features for p in self.participants])

    def outcome_arrays(self, endpoint: Endpoint):
        """Aligned (times, events) arrays for one endpoint."""
        times, events = [], []
        for p in self.participants:
            if endpoint not in p.outcomes:
                raise ValidationError(
                    f"participant {p.id} has no outcome for {endpoint.value}"
                )
            out = p.outcomes[endpoint]
            times.append(out.time_years)
            events.append(out.event)
        return np.asarray(times, dtype=float), np.asarray(events, dtype=bool)


# --------------------------------------------------------------------------
# Column mapping and CSV parsing
# --------------------------------------------------------------------------

BASE_COLUMNS = ("id", "age", "smoking", "drusen_le", "drusen_re", "pig_le", "pig_re")
GENOTYPE_COLUMNS = ("cfh", "arms2", "grs")


def _outcome_columns(endpoint: Endpoint):
    return f"time_{endpoint.column_suffix}", f"event_{endpoint.column_suffix}"


@dataclass(frozen=True)
class ColumnMap:
    """Maps canonical column names to the actual CSV header names.

    ``columns`` overrides individual names; ``feature_prefix`` names the
    deep-feature block (canonical ``f0 .. f511``).
    """

    columns: dict = field(default_factory=dict)
    feature_prefix: str = "f"

    def actual(self, canonical: str) -> str:
        return self.columns.get(canonical, canonical)

    def feature_column(self, j: int) -> str:
        return f"{self.feature_prefix}{j}"

    @classmethod
    def from_json(cls, text: str) -> "ColumnMap":
        raw = json.loads(text)
        prefix = raw.pop("feature_prefix", "f")
        return cls(columns=dict(raw), feature_prefix=prefix)


def _parse_enum(raw: str, aliases: dict, row: int, column: str):
    key = raw.strip().lower()
    if key not in aliases:
        raise OutOfRangeValue(f"row {row}, column {column}: invalid value {raw!r}")
    return aliases[key]


def _parse_float(raw: str, row: int, column: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise OutOfRangeValue(
            f"row {row}, column {column}: not a number: {raw!r}"
        ) from None
    if not math.isfinite(value):
        raise OutOfRangeValue(f"row {row}, column {column}: non-finite value")
    return value


def _parse_event(raw: str, row: int, column: str) -> bool:
    key = raw.strip().lower()
    if key in ("1", "true"):
        return True
    if key in ("0", "false"):
        return False
    raise OutOfRangeValue(f"row {row}, column {column}: invalid event flag {raw!r}")


_SMOKING_ALIASES = {s.value: s for s in Smoking}
_CFH_ALIASES = {g.value.lower(): g for g in Cfh}
_ARMS2_ALIASES = {g.value.lower(): g for g in Arms2}


def parse_cohort(csv_text: str, schema: Optional[ColumnMap] = None) -> Cohort:
    """Parse and validate a cohort CSV. Row order is preserved.

    Raises :class:`MissingColumn`, :class:`DuplicateId`, or
    :class:`OutOfRangeValue`, each naming the offending row/column.
    """
    schema = schema or ColumnMap()
    reader = csv.reader(io.StringIO(csv_text))
    try:
        header = next(reader)
    except StopIteration:
        raise MissingColumn("empty CSV: no header row") from None
    index = {name: i for i, name in enumerate(header)}

    def col(canonical: str) -> Optional[int]:
        return index.get(schema.actual(canonical))

    for canonical in BASE_COLUMNS:
        if col(canonical) is None:
            raise MissingColumn(f"missing required column {schema.actual(canonical)!r}")

    endpoints = []
    for ep in Endpoint:
        tcol, ecol = _outcome_columns(ep)
        has_t, has_e = col(tcol) is not None, col(ecol) is not None
        if has_t != has_e:
            raise MissingColumn(
                f"endpoint {ep.value}: need both {tcol!r} and {ecol!r} or neither"
            )
        if has_t:
            endpoints.append(ep)
    if not endpoints:
        raise MissingColumn("no endpoint outcome columns present")

    feature_cols = [index.get(schema.feature_column(j)) for j in range(N_DEEP_FEATURES)]
    n_present = sum(c is not None for c in feature_cols)
    if 0 < n_present < N_DEEP_FEATURES:
        raise MissingColumn(
            f"deep-feature block incomplete: {n_present}/{N_DEEP_FEATURES} columns"
        )
    has_features = n_present == N_DEEP_FEATURES

    participants = []
    seen_ids = set()
    for rownum, row in enumerate(reader, start=2):
        if len(row) != len(header):
            raise OutOfRangeValue(
                f"row {rownum}: expected {len(header)} cells, got {len(row)}"
            )

        def cell(canonical: str) -> str:
            return row[col(canonical)]

        pid = cell("id").strip()
        if not pid:
            raise OutOfRangeValue(f"row {rownum}, column id: empty id")
        if pid in seen_ids:
            raise DuplicateId(f"row {rownum}: duplicate id {pid!r}")
        seen_ids.add(pid)

        age = _parse_float(cell("age"), rownum, "age")
        smoking = _parse_enum(cell("smoking"), _SMOKING_ALIASES, rownum, "smoking")

        cfh = arms2 = grs = None
        if col("cfh") is not None and cell("cfh").strip():
            cfh = _parse_enum(cell("cfh"), _CFH_ALIASES, rownum, "cfh")
        if col("arms2") is not None and cell("arms2").strip():
            arms2 = _parse_enum(cell("arms2"), _ARMS2_ALIASES, rownum, "arms2")
        if col("grs") is not None and cell("grs").strip():
            grs = _parse_float(cell("grs"), rownum, "grs")

        left = EyeGrade(
            drusen=_parse_enum(cell("drusen_le"), _DRUSEN_ALIASES, rownum, "drusen_le"),
            pigment=_parse_enum(cell("pig_le"), _PIGMENT_ALIASES, rownum, "pig_le"),
        )
        right = EyeGrade(
            drusen=_parse_enum(cell("drusen_re"), _DRUSEN_ALIASES, rownum, "drusen_re"),
            pigment=_parse_enum(cell("pig_re"), _PIGMENT_ALIASES, rownum, "pig_re"),
        )

        feats = None
        if has_features:
            feats = np.array(
                [_parse_float(row[c], rownum, f"f{j}") for j, c in enumerate(feature_cols)],
                dtype=float,
            )

        outcomes = {}
        for ep in endpoints:
            tcol, ecol = _outcome_columns(ep)
            t = _parse_float(cell(tcol), rownum, tcol)
            if t <= 0:
                raise OutOfRangeValue(
                    f"row {rownum}, column {tcol}: time must be positive, got {t}"
                )
            outcomes[ep] = Outcome(time_years=t, event=_parse_event(cell(ecol), rownum, ecol))

        try:
            participants.append(
                Participant(
                    id=pid,
                    age=age,
                    smoking=smoking,
                    genotype=Genotype(cfh=cfh, arms2=arms2, grs=grs),
                    left_eye=left,
                    right_eye=right,
                    deep_features=feats,
                    outcomes=outcomes,
                )
            )
        except ValidationError as exc:
            raise OutOfRangeValue(f"row {rownum}: {exc}") from None

    return Cohort(participants=tuple(participants))


def serialize_cohort(cohort: Cohort) -> str:
    """Write a cohort back to canonical CSV (inverse of :func:`parse_cohort`)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    endpoints = cohort.endpoints or tuple(Endpoint)
    header = list(BASE_COLUMNS[:3]) + list(GENOTYPE_COLUMNS) + list(BASE_COLUMNS[3:])
    if cohort.has_features:
        header += [f"f{j}" for j in range(N_DEEP_FEATURES)]
    for ep in endpoints:
        header += list(_outcome_columns(ep))
    writer.writerow(header)
    for p in cohort:
        row = [
            p.id,
            repr(p.age),
            p.smoking.value,
            p.genotype.cfh.value if p.genotype.cfh else "",
            p.genotype.arms2.value if p.genotype.arms2 else "",
            repr(p.genotype.grs) if p.genotype.grs is not None else "",
            p.left_eye.drusen.value,
            p.right_eye.drusen.value,
            p.left_eye.pigment.value,
            p.right_eye.pigment.value,
        ]
        if cohort.has_features:
            row += [repr(v) for v in p.deep_features]
        for ep in endpoints:
            out = p.outcomes[ep]
            row += [repr(out.time_years), "1" if out.event else "0"]
        writer.writerow(row)
    return buf.getvalue()


# --------------------------------------------------------------------------
# Splitting
# --------------------------------------------------------------------------

def split_cohort(cohort: Cohort, ratios=(0.70, 0.10, 0.20), seed: int = 42):
    """Participant-level split into (train, dev, test).

    Membership comes from a seeded uniform shuffle followed by a
    contiguous cut at sizes floor(r0*n) / floor(r1*n) / remainder.
    Original row order is preserved within each split.
    """
    n = len(cohort)
    if n == 0:
        raise EmptyCohort("cannot split an empty cohort")
    if len(ratios) != 3 or any(r < 0 for r in ratios):
        raise ValidationError(f"need three nonnegative ratios, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValidationError(f"ratios must sum to 1, got {sum(ratios)}")

    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    # tolerate float products that land a hair under an integer
    n_train = int(ratios[0] * n + 1e-9)
    n_dev = int(ratios[1] * n + 1e-9)
    groups = (perm[:n_train], perm[n_train : n_train + n_dev], perm[n_train + n_dev :])

    def take(indices) -> Cohort:
        keep = np.sort(indices)
        return Cohort(
            participants=tuple(cohort.participants[i] for i in keep),
            schema_version=cohort.schema_version,
        )

    return take(groups[0]), take(groups[1]), take(groups[2])


# --------------------------------------------------------------------------
# Standardization
# --------------------------------------------------------------------------

CONSTANT_SD_FLOOR = 1e-12


@dataclass(frozen=True)
class Normalization:
    """Per-column standardization parameters, fit on training data only.

    Columns with population standard deviation below ``CONSTANT_SD_FLOOR``
    are flagged constant and their sd replaced by 1, so transformed
    values come out all-zero instead of dividing by zero.
    """

    names: tuple
    mean: np.ndarray
    sd: np.ndarray
    constant: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float))
        object.__setattr__(self, "sd", np.asarray(self.sd, dtype=float))
        object.__setattr__(self, "constant", np.asarray(self.constant, dtype=bool))
        if not (len(self.names) == self.mean.size == self.sd.size == self.constant.size):
            raise DimensionMismatch("normalization arrays must align with names")

    @property
    def dim(self) -> int:
        return self.mean.size

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.dim:
            raise DimensionMismatch(
                f"expected {self.dim} columns, got {X.shape[-1]}"
            )
        return (X - self.mean) / self.sd

    @classmethod
    def identity(cls, names) -> "Normalization":
        names = tuple(names)
        p = len(names)
        return cls(
            names=names,
            mean=np.zeros(p),
            sd=np.ones(p),
            constant=np.zeros(p, dtype=bool),
        )


def zscore_fit(train: Cohort) -> Normalization:
    """Fit per-column mean/sd (population) over the training split's features."""
    X = train.feature_matrix()
    mean = X.mean(axis=0)
    sd = X.std(axis=0)  # ddof=0
    constant = sd < CONSTANT_SD_FLOOR
    sd = np.where(constant, 1.0, sd)
    names = tuple(f"f{j}" for j in range(X.shape[1]))
    return Normalization(names=names, mean=mean, sd=sd, constant=constant)


def zscore_apply(norm: Normalization, cohort: Cohort) -> Cohort:
    """Apply train-fitted standardization to a cohort's deep features."""
    if not cohort.has_features:
        raise NoFeatures("cohort carries no deep features")
    transformed = []
    for p in cohort:
        feats = norm.transform(p.deep_features)
        transformed.append(
            Participant(
                id=p.id,
                age=p.age,
                smoking=p.smoking,
                genotype=p.genotype,
                left_eye=p.left_eye,
                right_eye=p.right_eye,
                deep_features=feats,
                outcomes=p.outcomes,
            )
        )
    return Cohort(participants=tuple(transformed), schema_version=cohort.schema_version)
