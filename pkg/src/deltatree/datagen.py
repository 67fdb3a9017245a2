"""Synthetic tables with planted cell-level disparity structure.

Scenarios declare covariates, a partition of the covariate space into
cells, and per-cell per-group disagreement probabilities.  The generator
draws everything with a seeded PCG64 stream, so tables are reproducible
byte for byte.  The module also houses the brute-force rate oracle used
to cross-check the multinomial pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import yaml

from .data import Covariate, ObservationTable

GENERATOR = "numpy.random.Generator(PCG64)"


class ScenarioError(Exception):
    pass


@dataclass
class CovariateSpec:
    name: str
    kind: str = "categorical"
    levels: tuple = ()          # categorical: values; probs optional
    probs: tuple = None
    low: float = 0.0            # numeric/ordinal: uniform range
    high: float = 1.0
    integer: bool = False


@dataclass
class Cell:
    """One region of covariate space with its own multinomial probabilities.

    where maps covariate name -> allowed values (categorical) or
    (low, high] range (numeric).  An empty mapping matches everything.
    """

    where: dict
    p01_a1: float
    p10_a1: float
    p01_a2: float
    p10_a2: float

    def delta(self):
        return self.p01_a2 - self.p01_a1 - self.p10_a2 + self.p10_a1

    def validate(self):
        for g in ("a1", "a2"):
            p01 = getattr(self, f"p01_{g}")
            p10 = getattr(self, f"p10_{g}")
            if min(p01, p10) < 0 or p01 + p10 > 1:
                raise ScenarioError(f"invalid cell probabilities for group {g}")


@dataclass
class Scenario:
    n: int
    seed: int
    cells: list
    covariates: list = field(default_factory=list)
    p_a2: float = 0.5
    prevalence_a1: float = 0.5      # P(Y=1 | group)
    prevalence_a2: float = 0.5
    agree_positive: float = 0.3     # P(both classify 1 | models agree)
    group_labels: tuple = ("a1", "a2")

    def validate(self):
        if self.n < 1:
            raise ScenarioError("n must be positive")
        if not self.cells:
            raise ScenarioError("at least one cell is required")
        for cell in self.cells:
            cell.validate()
        for p in (self.p_a2, self.prevalence_a1, self.prevalence_a2, self.agree_positive):
            if not 0.0 <= p <= 1.0:
                raise ScenarioError("probabilities must lie in [0, 1]")
        return self

    @classmethod
    def from_dict(cls, raw):
        raw = dict(raw)
        covs = [CovariateSpec(**c) if isinstance(c, dict) else CovariateSpec(name=c)
                for c in raw.pop("covariates", [])]
        for c in covs:
            c.levels = tuple(c.levels)
            c.probs = tuple(c.probs) if c.probs else None
        cells = [Cell(where=dict(c.get("where", {})),
                      p01_a1=float(c["p01_a1"]), p10_a1=float(c["p10_a1"]),
                      p01_a2=float(c["p01_a2"]), p10_a2=float(c["p10_a2"]))
                 for c in raw.pop("cells")]
        if "group_labels" in raw:
            raw["group_labels"] = tuple(raw["group_labels"])
        return cls(covariates=covs, cells=cells, **raw)

    @classmethod
    def from_yaml(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(yaml.safe_load(fh))


def _cell_mask(cell, columns, n):
    mask = np.ones(n, dtype=bool)
    for name, constraint in cell.where.items():
        values = columns[name]
        if values.dtype.kind == "f":
            low, high = constraint
            mask &= (values > low) & (values <= high)
        else:
            mask &= np.isin(values, list(constraint))
    return mask


def generate(scenario):
    """Draw an observation table from a validated scenario."""
    scenario.validate()
    rng = np.random.default_rng(scenario.seed)
    n = scenario.n

    columns = {}
    covs = {}
    for spec in scenario.covariates:
        if spec.kind == "categorical":
            levels = list(spec.levels) or ["u", "v"]
            probs = list(spec.probs) if spec.probs else None
            vals = rng.choice(np.array(levels, dtype=object), size=n, p=probs)
        else:
            vals = rng.uniform(spec.low, spec.high, size=n)
            if spec.integer:
                vals = np.floor(vals)
        columns[spec.name] = vals
        covs[spec.name] = Covariate(name=spec.name, kind=spec.kind, values=vals)

    group = (rng.random(n) < scenario.p_a2).astype(np.int8)
    prev = np.where(group == 1, scenario.prevalence_a2, scenario.prevalence_a1)
    outcome = (rng.random(n) < prev).astype(np.int8)

    cell_id = np.full(n, -1, dtype=np.int64)
    for i, cell in enumerate(scenario.cells):
        mask = _cell_mask(cell, columns, n)
        if np.any(cell_id[mask] >= 0):
            raise ScenarioError("cell predicates overlap")
        cell_id[mask] = i
    if np.any(cell_id < 0):
        raise ScenarioError("cell predicates do not tile the covariate space")

    p01 = np.empty(n)
    p10 = np.empty(n)
    for i, cell in enumerate(scenario.cells):
        for g, suffix in ((0, "a1"), (1, "a2")):
            sel = (cell_id == i) & (group == g)
            p01[sel] = getattr(cell, f"p01_{suffix}")
            p10[sel] = getattr(cell, f"p10_{suffix}")

    u = rng.random(n)
    yhat1 = np.zeros(n, dtype=np.int8)
    yhat2 = np.zeros(n, dtype=np.int8)
    is01 = u < p01
    is10 = (u >= p01) & (u < p01 + p10)
    agree_pos = rng.random(n) < scenario.agree_positive
    yhat2[is01] = 1
    yhat1[is10] = 1
    both = ~is01 & ~is10 & agree_pos
    yhat1[both] = 1
    yhat2[both] = 1

    return ObservationTable(
        yhat1=yhat1, yhat2=yhat2, group=group,
        group_labels=tuple(scenario.group_labels), outcome=outcome,
        covariates=covs, source=f"synthetic(seed={scenario.seed}, rng={GENERATOR})")


def oracle_delta(table, metric, predicate=None):
    """Brute-force difference-in-differences computed from raw row rates.

    Deliberately bypasses the multinomial machinery: filter rows, take the
    per-group means of each model's relevant classification, difference
    twice.  predicate is an optional boolean mask or callable on the table.
    """
    keep = np.ones(table.n, dtype=bool)
    if predicate is not None:
        keep = predicate(table) if callable(predicate) else np.asarray(predicate, dtype=bool)
    if metric == "fpr":
        keep = keep & (table.outcome == 0)
        hit1, hit2 = table.yhat1 == 1, table.yhat2 == 1
    elif metric == "fnr":
        keep = keep & (table.outcome == 1)
        hit1, hit2 = table.yhat1 == 0, table.yhat2 == 0
    elif metric == "accept":
        hit1, hit2 = table.yhat1 == 1, table.yhat2 == 1
    else:
        raise ValueError(f"unknown metric {metric!r}")

    in_a1 = keep & (table.group == 0)
    in_a2 = keep & (table.group == 1)
    if not in_a1.any() or not in_a2.any():
        raise ValueError("a sensitive group is empty under this predicate")

    def rate(hits, members):
        return float(np.sum(hits & members)) / float(np.sum(members))

    disparity_m1 = rate(hit1, in_a2) - rate(hit1, in_a1)
    disparity_m2 = rate(hit2, in_a2) - rate(hit2, in_a1)
    return disparity_m2 - disparity_m1


def spawn_seeds(master_seed, count):
    """Independent child seeds for parallel replications."""
    return [int(s.generate_state(1)[0]) for s in
            np.random.SeedSequence(master_seed).spawn(count)]
