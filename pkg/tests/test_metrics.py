import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavemorph import metrics as mt
from wavemorph.features import BONAFIDE, MORPHED

from oracles import auc_pairwise, bpcer_at_apcer_bf, deer_bf


def score_set(labels, scores):
    ids = [f"img{i}" for i in range(len(labels))]
    return mt.ScoreSet(ids, np.array(labels, dtype=bool), np.array(scores, dtype=np.float64))


def random_score_set(rng, max_size=50):
    """At least one entry per class; deliberately collision-prone scores."""
    n_m = int(rng.integers(1, max_size // 2))
    n_b = int(rng.integers(1, max_size // 2))
    labels = [True] * n_m + [False] * n_b
    # quantized uniforms produce many exact ties across classes
    scores = np.round(rng.random(n_m + n_b) * 10) / 10.0
    return score_set(labels, scores)


# --- pointwise rates --------------------------------------------------------


def test_apcer_bpcer_hand_case():
    s = score_set([False, False, True, True], [0.1, 0.3, 0.2, 0.9])
    assert mt.apcer(s, 0.3) == 0.5  # morph 0.2 misses
    assert mt.bpcer(s, 0.3) == 0.5  # bona 0.3 fires (>= rule)
    assert mt.apcer(s, -1.0) == 0.0 and mt.bpcer(s, -1.0) == 1.0
    assert mt.apcer(s, np.inf) == 1.0 and mt.bpcer(s, np.inf) == 0.0


def test_rates_need_their_class():
    only_bona = score_set([False, False], [0.1, 0.2])
    with pytest.raises(ValueError, match="no morphed"):
        mt.apcer(only_bona, 0.5)
    only_morph = score_set([True], [0.9])
    with pytest.raises(ValueError, match="no bona fide"):
        mt.bpcer(only_morph, 0.5)
    with pytest.raises(ValueError):
        mt.d_eer(only_bona)


def test_monotonicity_along_the_sweep(rng):
    # rising threshold lets more morphs through and fewer bona fide fire
    for _ in range(20):
        s = random_score_set(rng)
        _, ap, bp = mt.det_curve(s)
        assert np.all(np.diff(ap) >= 0)
        assert np.all(np.diff(bp) <= 0)
        assert ap[0] == 0.0 and bp[0] == 1.0  # threshold at the minimum score
        assert ap[-1] == 1.0 and bp[-1] == 0.0  # +inf sentinel


def test_det_curve_covers_distinct_scores_plus_sentinel():
    s = score_set([True, True, False, False], [0.2, 0.2, 0.1, 0.4])
    thresholds, ap, bp = mt.det_curve(s)
    assert np.array_equal(thresholds[:-1], [0.1, 0.2, 0.4])
    assert thresholds[-1] == np.inf
    assert len(ap) == len(bp) == 4


# --- oracle equivalence (exact) ----------------------------------------------


def test_deer_matches_brute_force_exactly(rng):
    for _ in range(200):
        s = random_score_set(rng)
        ours = mt.d_eer(s)
        ref = deer_bf(list(s.labels), list(s.scores))
        assert ours == ref


def test_bpcer_at_apcer_matches_brute_force_exactly(rng):
    for _ in range(200):
        s = random_score_set(rng)
        for target in (0.05, 0.10, 0.5, 1.0):
            assert mt.bpcer_at_apcer(s, target) == bpcer_at_apcer_bf(list(s.labels), list(s.scores), target)


def test_auc_matches_pairwise_count_exactly(rng):
    for _ in range(200):
        s = random_score_set(rng)
        assert mt.roc_auc(s) == auc_pairwise(list(s.labels), list(s.scores))


def test_auc_is_exactly_invariant_under_monotone_transforms(rng):
    # rank arithmetic only sees the ordering, so the value is bit-identical
    for _ in range(30):
        s = random_score_set(rng)
        base = mt.roc_auc(s)
        for mapped in (2.0 * s.scores + 3.0, np.exp(s.scores), s.scores**3 + s.scores):
            t = mt.ScoreSet(s.image_ids, s.labels, mapped)
            assert mt.roc_auc(t) == base


@settings(max_examples=120, deadline=None)
@given(
    morph=st.lists(st.integers(0, 8), min_size=1, max_size=12),
    bona=st.lists(st.integers(0, 8), min_size=1, max_size=12),
)
def test_metric_suite_matches_oracles_on_tie_heavy_grids(morph, bona):
    # integer score grids force ties within and across classes
    labels = [True] * len(morph) + [False] * len(bona)
    scores = [float(v) for v in morph + bona]
    s = score_set(labels, scores)
    assert mt.d_eer(s) == deer_bf(labels, scores)
    assert mt.roc_auc(s) == auc_pairwise(labels, scores)
    assert mt.bpcer_at_apcer(s, 0.05) == bpcer_at_apcer_bf(labels, scores, 0.05)
    assert mt.bpcer_at_apcer(s, 0.10) == bpcer_at_apcer_bf(labels, scores, 0.10)


# --- specific operating points ----------------------------------------------


def test_perfect_separation_zeroes_everything():
    s = score_set([False] * 5 + [True] * 5, [0.0, 0.1, 0.2, 0.3, 0.4, 0.6, 0.7, 0.8, 0.9, 1.0])
    deer, tau = mt.d_eer(s)
    assert deer == 0.0
    assert tau == 0.6  # lowest threshold achieving the zero gap
    assert mt.bpcer_at_apcer(s, 0.05) == 0.0
    assert mt.bpcer_at_apcer(s, 0.10) == 0.0
    assert mt.roc_auc(s) == 1.0


def test_reversed_scores_give_auc_zero():
    s = score_set([True, True, False, False], [0.1, 0.2, 0.8, 0.9])
    assert mt.roc_auc(s) == 0.0
    # discrete sweep: the zero gap sits at APCER = BPCER = 1, not at 0.5
    deer, tau = mt.d_eer(s)
    assert deer == 1.0 and tau == 0.8


def test_all_tied_scores():
    s = score_set([True, False, True, False], [0.5, 0.5, 0.5, 0.5])
    assert mt.roc_auc(s) == 0.5
    thresholds, ap, bp = mt.det_curve(s)
    assert np.array_equal(thresholds, [0.5, np.inf])
    deer, tau = mt.d_eer(s)
    # candidates: (ap=0, bp=1) at 0.5 and (ap=1, bp=0) at inf; tie -> lower
    assert deer == 0.5 and tau == 0.5


def test_deer_tie_breaks_toward_lower_threshold():
    # gap 0.5 at both tau=2 (midpoint 0.75) and tau=3 (midpoint 0.25);
    # the lower threshold must win even though it reports the worse rate
    labels = [True, True, True, True, False, False]
    scores = [1.0, 1.0, 3.0, 3.0, 2.0, 2.0]
    s = score_set(labels, scores)
    deer, tau = mt.d_eer(s)
    assert (deer, tau) == (0.75, 2.0)
    assert (deer, tau) == deer_bf(labels, scores)


def test_bpcer_at_apcer_validates_target():
    s = score_set([True, False], [0.9, 0.1])
    with pytest.raises(ValueError):
        mt.bpcer_at_apcer(s, 0.0)
    with pytest.raises(ValueError):
        mt.bpcer_at_apcer(s, 1.5)


def test_scoreset_validation():
    with pytest.raises(ValueError, match="equal length"):
        mt.ScoreSet(["a"], np.array([True, False]), np.array([0.1, 0.2]))
    with pytest.raises(ValueError, match="finite"):
        score_set([True, False], [np.nan, 0.2])
    with pytest.raises(ValueError, match="label"):
        mt.ScoreSet.from_entries([("a", "weird", 0.5)])


# --- serialization ----------------------------------------------------------


def test_scores_csv_roundtrip(tmp_path, rng):
    s = random_score_set(rng)
    path = tmp_path / "scores.csv"
    mt.write_scores_csv(path, s)
    back = mt.read_scores_csv(path)
    assert back.image_ids == s.image_ids
    assert np.array_equal(back.labels, s.labels)
    assert np.array_equal(back.scores, s.scores)


def test_scores_csv_validation(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("image_id,label\n")
    with pytest.raises(ValueError, match="missing columns"):
        mt.read_scores_csv(p)
    p.write_text("image_id,label,score\n")
    with pytest.raises(ValueError, match="no score rows"):
        mt.read_scores_csv(p)


def test_metrics_json_and_det_csv(tmp_path):
    import csv as csv_mod
    import json

    s = score_set([False, False, True, True], [0.1, 0.3, 0.2, 0.9])
    doc = mt.write_metrics_json(tmp_path / "m.json", s)
    with open(tmp_path / "m.json") as fh:
        assert json.load(fh) == doc
    assert doc == mt.summary(s)
    mt.write_det_csv(tmp_path / "det.csv", s)
    with open(tmp_path / "det.csv", newline="") as fh:
        rows = list(csv_mod.DictReader(fh))
    thresholds, ap, bp = mt.det_curve(s)
    assert len(rows) == thresholds.size
    assert [float(r["threshold"]) for r in rows] == list(thresholds)
    assert [float(r["apcer"]) for r in rows] == list(ap)
    assert [float(r["bpcer"]) for r in rows] == list(bp)
