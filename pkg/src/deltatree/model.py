"""Conditional multinomial model of paired binary classifications.

Two classifiers score the same population; after restricting rows by the
metric's outcome condition, each record falls into one of three events per
sensitive group: the models disagree (0,1), disagree (1,0), or agree.  The
target parameter is the difference-in-differences of the per-model group
rates, which is a linear function of the disagreement probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GROUP_A1 = 0
GROUP_A2 = 1

CELL_01 = 0   # model1 = 0, model2 = 1
CELL_10 = 1   # model1 = 1, model2 = 0
CELL_AGREE = 2

METRICS = ("fpr", "fnr", "accept")

ROUNDTRIP_TOL = 1e-12
PROB_SLACK = 1e-12


class DegenerateNodeError(Exception):
    """The multinomial cannot be estimated or scored on this sample."""


class InvalidParameterError(Exception):
    """Parameter vector maps outside the probability simplex."""


@dataclass(frozen=True)
class ConditionedSample:
    """Per-record classifications and group codes after metric conditioning.

    For the FNR metric both classifications arrive already bit-flipped, so
    all downstream formulas are metric-agnostic.
    """

    yhat1: np.ndarray
    yhat2: np.ndarray
    group: np.ndarray

    @property
    def n(self):
        return int(self.yhat1.shape[0])

    def cell_index(self):
        """Combined index group * 3 + cell for each record."""
        cell = np.full(self.n, CELL_AGREE, dtype=np.int64)
        cell[(self.yhat1 == 0) & (self.yhat2 == 1)] = CELL_01
        cell[(self.yhat1 == 1) & (self.yhat2 == 0)] = CELL_10
        return self.group.astype(np.int64) * 3 + cell


@dataclass(frozen=True)
class CellCounts:
    n01_a1: int
    n10_a1: int
    ndot_a1: int
    n01_a2: int
    n10_a2: int
    ndot_a2: int

    @property
    def n_a1(self):
        return self.n01_a1 + self.n10_a1 + self.ndot_a1

    @property
    def n_a2(self):
        return self.n01_a2 + self.n10_a2 + self.ndot_a2

    @property
    def n(self):
        return self.n_a1 + self.n_a2

    @property
    def n_disagree(self):
        return self.n01_a1 + self.n10_a1 + self.n01_a2 + self.n10_a2

    def as_matrix(self):
        """(2, 3) array indexed [group, cell]."""
        return np.array(
            [[self.n01_a1, self.n10_a1, self.ndot_a1],
             [self.n01_a2, self.n10_a2, self.ndot_a2]], dtype=float)


@dataclass(frozen=True)
class ThetaHat:
    """Free parameters of the three-event multinomial, one pair per group."""

    p01_a1: float
    p10_a1: float
    p01_a2: float
    p10_a2: float

    @property
    def pdot_a1(self):
        return 1.0 - self.p01_a1 - self.p10_a1

    @property
    def pdot_a2(self):
        return 1.0 - self.p01_a2 - self.p10_a2

    def validate(self):
        for name, p in (("p01_a1", self.p01_a1), ("p10_a1", self.p10_a1),
                        ("p01_a2", self.p01_a2), ("p10_a2", self.p10_a2),
                        ("pdot_a1", self.pdot_a1), ("pdot_a2", self.pdot_a2)):
            if not (-PROB_SLACK <= p <= 1.0 + PROB_SLACK):
                raise InvalidParameterError(f"{name}={p!r} outside [0, 1]")


@dataclass(frozen=True)
class ReparamTheta:
    """Rotated coordinates that isolate the target parameter in the last slot."""

    eta_plus: float
    eta_minus: float
    delta_small: float
    delta_big: float


def condition_sample(records, metric):
    """Apply the metric's outcome condition to a record table.

    records needs .outcome, .yhat1, .yhat2 and .group array attributes.
    FPR keeps outcome==0 rows as-is, FNR keeps outcome==1 rows with both
    classifications flipped, accept keeps everything.  May return an empty
    sample; callers treat that as a degenerate node.
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    yhat1 = np.asarray(records.yhat1)
    yhat2 = np.asarray(records.yhat2)
    group = np.asarray(records.group)
    if metric == "accept":
        return ConditionedSample(yhat1.copy(), yhat2.copy(), group.copy())
    outcome = getattr(records, "outcome", None)
    if outcome is None:
        raise ValueError(f"metric {metric!r} requires an outcome column")
    outcome = np.asarray(outcome)
    if metric == "fpr":
        keep = outcome == 0
        return ConditionedSample(yhat1[keep], yhat2[keep], group[keep])
    keep = outcome == 1
    return ConditionedSample(1 - yhat1[keep], 1 - yhat2[keep], group[keep])


def count_cells(sample):
    """Tally disagreement and pooled agreement cells per group."""
    idx = sample.cell_index()
    counts = np.bincount(idx, minlength=6)
    return CellCounts(
        n01_a1=int(counts[0]), n10_a1=int(counts[1]), ndot_a1=int(counts[2]),
        n01_a2=int(counts[3]), n10_a2=int(counts[4]), ndot_a2=int(counts[5]))


def mle(counts):
    """Null maximum-likelihood estimate: per-group empirical frequencies."""
    if counts.n_a1 == 0 or counts.n_a2 == 0:
        raise DegenerateNodeError("a sensitive group has no conditioned observations")
    return ThetaHat(
        p01_a1=counts.n01_a1 / counts.n_a1,
        p10_a1=counts.n10_a1 / counts.n_a1,
        p01_a2=counts.n01_a2 / counts.n_a2,
        p10_a2=counts.n10_a2 / counts.n_a2)


def delta_hat(theta):
    """Plug-in difference-in-differences of the per-model group rates."""
    return theta.p01_a2 - theta.p01_a1 - theta.p10_a2 + theta.p10_a1


def reparameterize(theta):
    """Map cell probabilities to (eta+, eta-, delta, Delta) coordinates."""
    eta_plus = theta.p01_a1 + theta.p10_a1
    eta_minus = theta.p01_a1 - theta.p10_a1
    return ReparamTheta(
        eta_plus=eta_plus,
        eta_minus=eta_minus,
        delta_small=theta.p01_a2 + theta.p10_a2 - eta_plus,
        delta_big=theta.p01_a2 - theta.p10_a2 - eta_minus)


def inverse_reparameterize(rep):
    """Invert the coordinate map back to cell probabilities."""
    theta = ThetaHat(
        p01_a1=(rep.eta_plus + rep.eta_minus) / 2.0,
        p10_a1=(rep.eta_plus - rep.eta_minus) / 2.0,
        p01_a2=(rep.eta_plus + rep.delta_small + rep.eta_minus + rep.delta_big) / 2.0,
        p10_a2=(rep.eta_plus + rep.delta_small - rep.eta_minus - rep.delta_big) / 2.0)
    theta.validate()
    return theta


def log_likelihood(counts, theta):
    """Multinomial log-likelihood with the 0 * log 0 := 0 convention.

    Returns -inf when a zero-probability cell carries a positive count;
    callers report that as degenerate rather than raising.
    """
    total = 0.0
    cells = [
        (counts.n01_a1, theta.p01_a1), (counts.n10_a1, theta.p10_a1),
        (counts.ndot_a1, theta.pdot_a1),
        (counts.n01_a2, theta.p01_a2), (counts.n10_a2, theta.p10_a2),
        (counts.ndot_a2, theta.pdot_a2)]
    for n_cell, p_cell in cells:
        if n_cell == 0:
            continue
        if p_cell <= 0.0:
            return float("-inf")
        total += n_cell * np.log(p_cell)
    return float(total)


def cell_score_table(theta):
    """(2, 3, 4) table of per-record score vectors, one row per event cell.

    Coordinates are ordered (eta+, eta-, delta, Delta).  Cells with zero
    probability get a zero row; they are unreachable at the sample MLE.
    """
    table = np.zeros((2, 3, 4))

    def _inv2(p):
        return 1.0 / (2.0 * p) if p > 0.0 else 0.0

    def _inv(p):
        return 1.0 / p if p > 0.0 else 0.0

    i01a1 = _inv2(theta.p01_a1)
    i10a1 = _inv2(theta.p10_a1)
    i01a2 = _inv2(theta.p01_a2)
    i10a2 = _inv2(theta.p10_a2)
    idota1 = _inv(theta.pdot_a1)
    idota2 = _inv(theta.pdot_a2)

    table[GROUP_A1, CELL_01] = (i01a1, i01a1, 0.0, 0.0)
    table[GROUP_A1, CELL_10] = (i10a1, -i10a1, 0.0, 0.0)
    table[GROUP_A1, CELL_AGREE] = (-idota1, 0.0, 0.0, 0.0)
    table[GROUP_A2, CELL_01] = (i01a2, i01a2, i01a2, i01a2)
    table[GROUP_A2, CELL_10] = (i10a2, -i10a2, i10a2, -i10a2)
    table[GROUP_A2, CELL_AGREE] = (-idota2, 0.0, -idota2, 0.0)
    return table


def score_contribution(yhat1, yhat2, group, theta):
    """Score vector of a single record at theta, in rotated coordinates."""
    if yhat1 == 0 and yhat2 == 1:
        cell = CELL_01
        p = theta.p01_a1 if group == GROUP_A1 else theta.p01_a2
    elif yhat1 == 1 and yhat2 == 0:
        cell = CELL_10
        p = theta.p10_a1 if group == GROUP_A1 else theta.p10_a2
    else:
        cell = CELL_AGREE
        p = theta.pdot_a1 if group == GROUP_A1 else theta.pdot_a2
    if p <= 0.0:
        raise DegenerateNodeError("record falls in a zero-probability cell")
    return cell_score_table(theta)[group, cell].copy()


def score_matrix(sample, theta):
    """(n, 4) matrix of per-record score contributions at theta."""
    table = cell_score_table(theta).reshape(6, 4)
    idx = sample.cell_index()
    counts = np.bincount(idx, minlength=6)
    probs = np.array([theta.p01_a1, theta.p10_a1, theta.pdot_a1,
                      theta.p01_a2, theta.p10_a2, theta.pdot_a2])
    if np.any((counts > 0) & (probs <= 0.0)):
        raise DegenerateNodeError("records fall in a zero-probability cell")
    return table[idx]
