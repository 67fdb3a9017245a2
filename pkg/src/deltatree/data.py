"""Record-level dataset container shared by ingestion, synthesis and the tree."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MISSING_LABEL = "(missing)"


@dataclass
class Covariate:
    """One splitting covariate: kind plus a per-record value array.

    Categorical values are strings (missing replaced by the explicit
    MISSING_LABEL level); ordinal/numeric values are floats with NaN for
    missing.
    """

    name: str
    kind: str
    values: np.ndarray


@dataclass
class ObservationTable:
    """Columnar record table: outcome, both classifications, group, covariates.

    group holds codes 0/1 for the ordered sensitive level pair in
    group_labels.  outcome may be None for acceptance-rate audits.  scores
    retains the raw model columns (binarization audit trail) when present.
    """

    yhat1: np.ndarray
    yhat2: np.ndarray
    group: np.ndarray
    group_labels: tuple
    outcome: np.ndarray = None
    covariates: dict = field(default_factory=dict)
    scores: dict = field(default_factory=dict)
    cutoffs: dict = field(default_factory=dict)
    row_index: np.ndarray = None
    source: str = ""
    rejections: list = field(default_factory=list)

    @property
    def n(self):
        return int(self.yhat1.shape[0])

    def __post_init__(self):
        n = self.n
        for name, arr in (("yhat2", self.yhat2), ("group", self.group)):
            if arr.shape[0] != n:
                raise ValueError(f"{name} length {arr.shape[0]} != {n}")
        if self.outcome is not None and self.outcome.shape[0] != n:
            raise ValueError("outcome length mismatch")
        for cov in self.covariates.values():
            if cov.values.shape[0] != n:
                raise ValueError(f"covariate {cov.name!r} length mismatch")
        if self.row_index is None:
            self.row_index = np.arange(n)
