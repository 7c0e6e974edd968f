import numpy as np
import pytest

from prognos.cohort import (
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
from prognos.errors import (
    DimensionMismatch,
    DuplicateId,
    EmptyCohort,
    MissingColumn,
    OutOfRangeValue,
    ValidationError,
)

from synth import grading_cohort_csv

HEADER = (
    "id,age,smoking,cfh,arms2,grs,drusen_le,drusen_re,pig_le,pig_re,"
    "time_lateamd,event_lateamd"
)


def row(pid="P1", age="63", smoking="never", cfh="CT", arms2="GG", grs="0.5",
        dle="0", dre="2", ple="0", pre="1", t="4.5", e="1"):
    return ",".join([pid, age, smoking, cfh, arms2, grs, dle, dre, ple, pre, t, e])


def small_csv(*rows):
    return HEADER + "\n" + "\n".join(rows) + "\n"


def test_parse_happy_path():
    cohort = parse_cohort(small_csv(row(), row(pid="P2", dle="2", e="0")))
    assert len(cohort) == 2
    p = cohort.participants[0]
    assert p.id == "P1"
    assert p.age == 63.0
    assert p.smoking is Smoking.NEVER
    assert p.left_eye.drusen is Drusen.NONE_SMALL
    assert p.right_eye.drusen is Drusen.LARGE
    assert p.right_eye.pigment is Pigment.PRESENT
    assert p.genotype.cfh.allele_count == 1
    assert p.outcomes[Endpoint.LATE_AMD] == Outcome(time_years=4.5, event=True)
    assert cohort.endpoints == (Endpoint.LATE_AMD,)
    assert not cohort.has_features


def test_parse_accepts_word_grades():
    text = small_csv(row(dle="large", dre="medium", ple="absent", pre="present"))
    p = parse_cohort(text).participants[0]
    assert p.left_eye.drusen is Drusen.LARGE
    assert p.right_eye.drusen is Drusen.MEDIUM
    assert p.left_eye.pigment is Pigment.ABSENT


def test_parse_blank_genotype_cells():
    text = small_csv(row(cfh="", arms2="", grs=""))
    geno = parse_cohort(text).participants[0].genotype
    assert geno == Genotype()


def test_parse_missing_required_column():
    text = HEADER.replace("age,", "") + "\n" + row()[:0]
    with pytest.raises(MissingColumn, match="age"):
        parse_cohort(text + "\n")


def test_parse_duplicate_id():
    with pytest.raises(DuplicateId, match="P1"):
        parse_cohort(small_csv(row(), row()))


def test_parse_bad_enum_names_row_and_column():
    with pytest.raises(OutOfRangeValue, match="drusen_le"):
        parse_cohort(small_csv(row(dle="7")))
    with pytest.raises(OutOfRangeValue, match="smoking"):
        parse_cohort(small_csv(row(smoking="sometimes")))


def test_parse_nonpositive_time_rejected():
    with pytest.raises(OutOfRangeValue):
        parse_cohort(small_csv(row(t="0")))
    with pytest.raises(OutOfRangeValue):
        parse_cohort(small_csv(row(t="-1")))


def test_parse_ragged_row_rejected():
    text = small_csv(row() + ",extra")
    with pytest.raises(ValidationError):
        parse_cohort(text)


def test_endpoint_pair_must_be_complete():
    # time without its event column
    text = HEADER.replace(",event_lateamd", "") + "\n"
    with pytest.raises(MissingColumn, match="event_lateamd"):
        parse_cohort(text + row().rsplit(",", 1)[0] + "\n")


def test_feature_block_all_or_none():
    header = HEADER + "," + ",".join(f"f{j}" for j in range(511))  # one short
    with pytest.raises(MissingColumn, match="511/512"):
        parse_cohort(header + "\n")


def test_column_map_renames():
    text = small_csv(row()).replace("smoking", "smoker_status")
    schema = ColumnMap(columns={"smoking": "smoker_status"})
    cohort = parse_cohort(text, schema)
    assert cohort.participants[0].smoking is Smoking.NEVER


def test_serialize_round_trip():
    text, _ = grading_cohort_csv(n=40, seed=3)
    cohort = parse_cohort(text)
    canonical = serialize_cohort(cohort)
    again = parse_cohort(canonical)
    assert serialize_cohort(again) == canonical
    assert again.ids == cohort.ids
    for a, b in zip(again, cohort):
        assert a == b


def test_cohort_feature_presence_invariant():
    p1 = Participant(
        id="a", age=60.0, smoking=Smoking.NEVER, genotype=Genotype(),
        left_eye=EyeGrade(Drusen.NONE_SMALL, Pigment.ABSENT),
        right_eye=EyeGrade(Drusen.NONE_SMALL, Pigment.ABSENT),
        deep_features=np.zeros(512),
    )
    p2 = Participant(
        id="b", age=61.0, smoking=Smoking.NEVER, genotype=Genotype(),
        left_eye=EyeGrade(Drusen.NONE_SMALL, Pigment.ABSENT),
        right_eye=EyeGrade(Drusen.NONE_SMALL, Pigment.ABSENT),
    )
    with pytest.raises(ValidationError):
        Cohort(participants=(p1, p2))


def test_split_sizes_and_partition():
    text, _ = grading_cohort_csv(n=100, seed=5)
    cohort = parse_cohort(text)
    train, dev, test = split_cohort(cohort, seed=9)
    assert (len(train), len(dev), len(test)) == (70, 10, 20)
    ids = set(train.ids) | set(dev.ids) | set(test.ids)
    assert len(ids) == 100
    assert set(train.ids).isdisjoint(dev.ids)
    assert set(train.ids).isdisjoint(test.ids)
    # original row order preserved inside each split
    order = {pid: i for i, pid in enumerate(cohort.ids)}
    for part in (train, dev, test):
        ranks = [order[pid] for pid in part.ids]
        assert ranks == sorted(ranks)


def test_split_reference_sizes():
    """floor-based cut at the documented ratios."""
    for n, expected in ((3298, (2308, 329, 661)), (10, (7, 1, 2))):
        sizes = (int(0.7 * n + 1e-9), int(0.1 * n + 1e-9))
        sizes = (sizes[0], sizes[1], n - sizes[0] - sizes[1])
        assert sizes == expected
    text, _ = grading_cohort_csv(n=10, seed=2)
    train, dev, test = split_cohort(parse_cohort(text))
    assert (len(train), len(dev), len(test)) == (7, 1, 2)


def test_split_deterministic_and_seed_sensitive():
    text, _ = grading_cohort_csv(n=60, seed=1)
    cohort = parse_cohort(text)
    a = split_cohort(cohort, seed=4)
    b = split_cohort(cohort, seed=4)
    assert a[0].ids == b[0].ids and a[2].ids == b[2].ids
    c = split_cohort(cohort, seed=5)
    assert c[0].ids != a[0].ids


def test_split_bad_ratios():
    text, _ = grading_cohort_csv(n=10, seed=2)
    cohort = parse_cohort(text)
    with pytest.raises(ValidationError):
        split_cohort(cohort, ratios=(0.5, 0.2, 0.2))
    with pytest.raises(EmptyCohort):
        split_cohort(Cohort(participants=()))


def _feature_cohort(n=30, seed=0):
    rng = np.random.default_rng(seed)
    feats = rng.normal(2.0, 3.0, size=(n, 512))
    feats[:, 7] = 1.25  # constant column
    parts = []
    for i in range(n):
        parts.append(
            Participant(
                id=f"q{i}", age=60.0, smoking=Smoking.NEVER, genotype=Genotype(),
                left_eye=EyeGrade(Drusen.NONE_SMALL, Pigment.ABSENT),
                right_eye=EyeGrade(Drusen.NONE_SMALL, Pigment.ABSENT),
                deep_features=feats[i],
            )
        )
    return Cohort(participants=tuple(parts)), feats


def test_zscore_fit_apply():
    cohort, feats = _feature_cohort()
    norm = zscore_fit(cohort)
    assert norm.constant[7] and norm.sd[7] == 1.0
    assert not norm.constant[0]
    Z = zscore_apply(norm, cohort).feature_matrix()
    assert np.allclose(Z.mean(axis=0), 0.0, atol=1e-12)
    live = np.ones(512, dtype=bool)
    live[7] = False
    assert np.allclose(Z[:, live].std(axis=0), 1.0, atol=1e-12)
    assert np.all(Z[:, 7] == 0.0)  # constant column maps to zero, not inf


def test_normalization_transform_checks_width():
    cohort, _ = _feature_cohort(n=5)
    norm = zscore_fit(cohort)
    with pytest.raises(DimensionMismatch):
        norm.transform(np.zeros((3, 17)))


def test_normalization_identity():
    ident = Normalization.identity(("age", "x"))
    out = ident.transform(np.array([[63.0, 2.0]]))
    assert np.array_equal(out, np.array([[63.0, 2.0]]))
