"""Saliency evaluation metrics: CC, NSS, AUC-Judd, shuffled AUC and SIM.

All functions take numpy-compatible 2-D maps and (row, col) fixation lists.
"""
import csv
from dataclasses import astuple, dataclass, fields

import numpy as np

SAUC_NEGATIVE_RATIO = 10


def _as_map(x):
    return np.asarray(x, dtype=np.float64)


def _values_at(p, points):
    points = np.asarray(points, dtype=int).reshape(-1, 2)
    return p[points[:, 0], points[:, 1]]


def metric_cc(p, g, with_flag=False):
    """Pearson correlation over pixels; 0 (flagged degenerate) if either map is constant."""
    p, g = _as_map(p).ravel(), _as_map(g).ravel()
    pc, gc = p - p.mean(), g - g.mean()
    denom = np.sqrt((pc**2).sum() * (gc**2).sum())
    degenerate = denom == 0
    score = 0.0 if degenerate else float((pc * gc).sum() / denom)
    return (score, degenerate) if with_flag else score


def metric_nss(p, fixations, with_flag=False):
    p = _as_map(p)
    std = p.std()
    degenerate = std == 0
    score = 0.0 if degenerate else float(_values_at((p - p.mean()) / std, fixations).mean())
    return (score, degenerate) if with_flag else score


def roc_auc(positives, negatives):
    """Area under the ROC curve swept over every distinct score (trapezoid rule).

    Tied positive/negative pairs contribute one half.
    """
    positives = np.sort(np.asarray(positives, dtype=np.float64))
    negatives = np.sort(np.asarray(negatives, dtype=np.float64))
    if positives.size == 0 or negatives.size == 0:
        raise ValueError("AUC needs at least one positive and one negative")
    thresholds = np.unique(np.concatenate([positives, negatives]))[::-1]
    tpr = (positives.size - np.searchsorted(positives, thresholds, side="left")) / positives.size
    fpr = (negatives.size - np.searchsorted(negatives, thresholds, side="left")) / negatives.size
    tpr = np.concatenate([[0.0], tpr])
    fpr = np.concatenate([[0.0], fpr])
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))


def metric_auc_judd(p, fixations):
    """Positives: saliency at fixated pixels; negatives: every other pixel."""
    p = _as_map(p)
    fixated = np.zeros(p.shape, dtype=bool)
    pts = np.asarray(fixations, dtype=int).reshape(-1, 2)
    fixated[pts[:, 0], pts[:, 1]] = True
    return roc_auc(_values_at(p, fixations), p[~fixated])


def shuffled_negatives(other_fixations, n_positive, rng_seed, ratio=SAUC_NEGATIVE_RATIO):
    """Other clips' fixations, subsampled without replacement to ``ratio * n_positive`` if larger."""
    other = np.asarray(other_fixations, dtype=int).reshape(-1, 2)
    limit = ratio * n_positive
    if len(other) <= limit:
        return other
    rng = np.random.default_rng(rng_seed)
    return other[np.sort(rng.choice(len(other), size=limit, replace=False))]


def metric_sauc(p, fixations, other_fixations, rng_seed=0):
    p = _as_map(p)
    negatives = shuffled_negatives(other_fixations, len(fixations), rng_seed)
    return roc_auc(_values_at(p, fixations), _values_at(p, negatives))


def metric_sim(p, g):
    """Histogram intersection of the two maps after normalizing each to sum 1."""
    p, g = _as_map(p), _as_map(g)
    return float(np.minimum(p / p.sum(), g / g.sum()).sum())


@dataclass
class MetricReport:
    cc: float
    nss: float
    auc_j: float
    sauc: float
    sim: float

    @classmethod
    def mean(cls, reports):
        arr = np.array([astuple(r) for r in reports], dtype=np.float64)
        return cls(*arr.mean(axis=0).tolist())


def compute_metrics(pred, gt_map, fixations, other_fixations, rng_seed=0):
    return MetricReport(
        cc=metric_cc(pred, gt_map),
        nss=metric_nss(pred, fixations),
        auc_j=metric_auc_judd(pred, fixations),
        sauc=metric_sauc(pred, fixations, other_fixations, rng_seed),
        sim=metric_sim(pred, gt_map),
    )


REPORT_COLUMNS = ("clip_id",) + tuple(f.name for f in fields(MetricReport))


def write_report(path, rows):
    """``rows`` is [(clip_id, MetricReport)]; a trailing MEAN row is appended."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_COLUMNS)
        for clip_id, rep in rows:
            writer.writerow([clip_id, *(f"{v:.6f}" for v in astuple(rep))])
        mean = MetricReport.mean([r for _, r in rows])
        writer.writerow(["MEAN", *(f"{v:.6f}" for v in astuple(mean))])
    return mean


def read_report(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return {row["clip_id"]: MetricReport(*(float(row[c]) for c in REPORT_COLUMNS[1:])) for row in reader}
