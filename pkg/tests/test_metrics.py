import math
from dataclasses import astuple

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from avsal.metrics import (
    MetricReport,
    compute_metrics,
    metric_auc_judd,
    metric_cc,
    metric_nss,
    metric_sauc,
    metric_sim,
    read_report,
    roc_auc,
    shuffled_negatives,
    write_report,
)

# -- brute-force oracles ---------------------------------------------------------


def cc_oracle(p, g):
    p, g = list(np.ravel(p)), list(np.ravel(g))
    n = len(p)
    mp, mg = sum(p) / n, sum(g) / n
    cov = sum((a - mp) * (b - mg) for a, b in zip(p, g))
    vp = sum((a - mp) ** 2 for a in p)
    vg = sum((b - mg) ** 2 for b in g)
    return cov / math.sqrt(vp * vg)


def nss_oracle(p, fixations):
    vals = list(np.ravel(p))
    n = len(vals)
    mean = sum(vals) / n
    std = math.sqrt(sum((v - mean) ** 2 for v in vals) / n)
    return sum((p[r][c] - mean) / std for r, c in fixations) / len(fixations)


def pairwise_auc(pos, neg):
    score = 0.0
    for a in pos:
        for b in neg:
            score += 1.0 if a > b else 0.5 if a == b else 0.0
    return score / (len(pos) * len(neg))


def auc_judd_oracle(p, fixations):
    fixated = set(map(tuple, fixations))
    pos = [p[r][c] for r, c in fixations]
    neg = [p[r][c] for r in range(len(p)) for c in range(len(p[0])) if (r, c) not in fixated]
    return pairwise_auc(pos, neg)


def sim_oracle(p, g):
    sp, sg = float(np.sum(p)), float(np.sum(g))
    return sum(min(a / sp, b / sg) for a, b in zip(np.ravel(p), np.ravel(g)))


def random_instance(rng, quantize=False):
    h, w = rng.integers(2, 9, size=2)
    p = rng.random((h, w))
    if quantize:
        p = np.round(p * 4) / 4  # forces ties
    g = rng.random((h, w))
    k = int(rng.integers(1, min(5, h * w - 1) + 1))
    flat = rng.choice(h * w, size=k, replace=False)
    fix = [tuple(map(int, divmod(i, w))) for i in flat]
    others = [tuple(map(int, rng.integers(0, (h, w)))) for _ in range(int(rng.integers(1, 40)))]
    return p, g, fix, others


# -- examples ----------------------------------------------------------------------


def test_cc_examples():
    p = np.random.default_rng(0).random((5, 5))
    assert metric_cc(p, p) == pytest.approx(1.0, abs=1e-12)
    two = np.array([[0.2, 0.8]])
    assert metric_cc(two, 1 - two) == pytest.approx(-1.0, abs=1e-12)
    assert metric_cc(np.ones((3, 3)), p[:3, :3], with_flag=True) == (0.0, True)


def test_nss_examples():
    one_hot = np.array([[0.0, 1.0], [0.0, 0.0]])
    assert metric_nss(one_hot, [(0, 1)]) == pytest.approx(0.75 / math.sqrt(0.1875), abs=1e-12)
    assert metric_nss(one_hot, [(0, 1)]) == pytest.approx(1.7320508075688772, abs=1e-12)
    assert metric_nss(np.full((3, 3), 0.2), [(1, 1)], with_flag=True) == (0.0, True)
    p = np.arange(9.0).reshape(3, 3)
    assert metric_nss(p, [(0, 0)]) < 0


def test_auc_judd_examples():
    p = np.zeros((4, 4))
    p[1, 2] = p[3, 0] = 1.0
    assert metric_auc_judd(p, [(1, 2), (3, 0)]) == 1.0
    assert metric_auc_judd(np.full((4, 4), 0.3), [(0, 0), (2, 2)]) == 0.5


def test_sauc_examples():
    p = np.random.default_rng(3).random((6, 6))
    fix = [(0, 1), (4, 4), (2, 5)]
    assert metric_sauc(p, fix, fix) == pytest.approx(0.5, abs=1e-12)
    q = np.zeros((6, 6))
    for r, c in fix:
        q[r, c] = 1.0
    assert metric_sauc(q, fix, [(0, 0), (5, 5), (3, 3)]) == 1.0


def test_sim_examples():
    p = np.random.default_rng(1).random((4, 4))
    assert metric_sim(p, p) == pytest.approx(1.0, abs=1e-12)
    a, b = np.zeros((3, 3)), np.zeros((3, 3))
    a[0, 0], b[2, 1] = 1, 1
    assert metric_sim(a, b) == 0.0


def test_roc_rejects_empty_sets():
    with pytest.raises(ValueError):
        roc_auc([], [0.1])


# -- oracle equivalence on random instances -------------------------------------------


@pytest.mark.parametrize("quantize", [False, True])
def test_metrics_match_oracles(quantize):
    rng = np.random.default_rng(7 if quantize else 8)
    for _ in range(100):
        p, g, fix, others = random_instance(rng, quantize)
        assert metric_cc(p, g) == pytest.approx(cc_oracle(p, g), abs=1e-9)
        assert metric_nss(p, fix) == pytest.approx(nss_oracle(p, fix), abs=1e-9)
        assert metric_auc_judd(p, fix) == pytest.approx(auc_judd_oracle(p, fix), abs=1e-9)
        neg = shuffled_negatives(others, len(fix), 11)
        expected = pairwise_auc([p[r][c] for r, c in fix], [p[r][c] for r, c in neg])
        assert metric_sauc(p, fix, others, 11) == pytest.approx(expected, abs=1e-9)
        assert metric_sim(p, g) == pytest.approx(sim_oracle(p, g), abs=1e-9)


def test_shuffled_negative_sampling():
    others = [(i % 7, i // 7) for i in range(49)]
    assert len(shuffled_negatives(others, 10, 0)) == 49  # fewer than 10x: keep all
    picked = shuffled_negatives(others, 2, 5)
    assert len(picked) == 20
    assert len({tuple(x) for x in picked}) == 20
    assert set(map(tuple, picked)) <= set(others)
    assert np.array_equal(picked, shuffled_negatives(others, 2, 5))
    assert not np.array_equal(picked, shuffled_negatives(others, 2, 6))


# -- invariants ---------------------------------------------------------------------


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10**6), a=st.floats(0.01, 100), b=st.floats(-100, 100))
def test_cc_positive_affine_invariance(seed, a, b):
    rng = np.random.default_rng(seed)
    p, g = rng.random((6, 6)), rng.random((6, 6))
    assert abs(metric_cc(a * p + b, g) - metric_cc(p, g)) < 1e-9
    assert abs(metric_cc(p, a * g + b) - metric_cc(p, g)) < 1e-9


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_auc_monotone_transform_invariance(seed):
    rng = np.random.default_rng(seed)
    p = np.round(rng.random((7, 7)) * 6) / 6
    fix = [(int(r), int(c)) for r, c in rng.integers(0, 7, size=(4, 2))]
    fix = list(dict.fromkeys(fix))
    for transform in (np.exp, lambda x: x**3 + 2 * x, lambda x: np.log1p(x) * 5 - 3):
        assert metric_auc_judd(transform(p), fix) == metric_auc_judd(p, fix)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_sim_is_symmetric(seed):
    rng = np.random.default_rng(seed)
    p, g = rng.random((5, 4)), rng.random((5, 4))
    assert metric_sim(p, g) == metric_sim(g, p)
    assert 0 <= metric_sim(p, g) <= 1 + 1e-12


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_metric_ranges(seed):
    rng = np.random.default_rng(seed)
    p, g, fix, others = random_instance(rng)
    rep = compute_metrics(p, g, fix, others, seed)
    assert -1 - 1e-12 <= rep.cc <= 1 + 1e-12
    assert 0 <= rep.auc_j <= 1 and 0 <= rep.sauc <= 1
    assert 0 <= rep.sim <= 1 + 1e-12


# -- report files ---------------------------------------------------------------------


def test_report_round_trip(tmp_path):
    rows = [("a", MetricReport(0.5, 1.0, 0.75, 0.6, 0.4)), ("b", MetricReport(0.1, -1.0, 0.25, 0.4, 0.2))]
    mean = write_report(tmp_path / "r.csv", rows)
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "clip_id,cc,nss,auc_j,sauc,sim"
    assert len(lines) == 4 and lines[-1].startswith("MEAN,")
    assert astuple(mean) == pytest.approx((0.3, 0.0, 0.5, 0.5, 0.3), abs=1e-12)
    back = read_report(tmp_path / "r.csv")
    assert back["a"] == rows[0][1]
    assert back["MEAN"].cc == pytest.approx(0.3)
