"""Recursive binary partitioning driven by the per-covariate instability test.

Splits are chosen in two stages: the covariate whose test survives the
Bonferroni-adjusted significance threshold with the smallest p-value, then
the deviance-minimizing binary grouping of that covariate's levels.  A
final pruning pass collapses subtrees whose leaf disparity differences are
below the practical-significance threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import model, split_test
from .data import ObservationTable  # noqa: F401  (duck-typed input, kept for reference)


@dataclass(frozen=True)
class Atom:
    """One conjunct of a node predicate."""

    var: str
    op: str                 # "in", "not_in", "<=", ">"
    value: tuple            # level tuple, or 1-tuple holding the threshold
    missing_here: bool = False   # numeric atoms: missing rows routed to this side

    def describe(self):
        if self.op == "in":
            return f"{self.var} in {{{', '.join(map(str, self.value))}}}"
        if self.op == "not_in":
            return f"{self.var} not in {{{', '.join(map(str, self.value))}}}"
        suffix = " (incl. missing)" if self.missing_here else ""
        return f"{self.var} {self.op} {self.value[0]:g}{suffix}"


@dataclass
class SplitInfo:
    var: str
    kind: str
    left_levels: tuple = None    # categorical: raw level values routed left
    threshold: float = None      # ordinal/numeric: v <= threshold goes left
    missing_side: str = None     # "left"/"right" for numeric splits
    statistic: float = None
    df: int = None
    p_raw: float = None
    p_bonferroni: float = None
    deviance: float = None
    n_candidates: int = None


@dataclass
class TreeNode:
    id: int
    depth: int
    atoms: tuple
    n_rows: int
    n_cond: int = 0
    n_cond_a1: int = 0
    n_cond_a2: int = 0
    theta: model.ThetaHat = None
    delta: float = None
    rates: tuple = None          # (m1_a1, m1_a2, m2_a1, m2_a2)
    status: str = "internal"     # leaf reason, or "internal"
    split: SplitInfo = None
    children: list = field(default_factory=list)
    pruned: bool = False         # inside a collapsed subtree
    collapsed: bool = False      # internal node turned leaf by pruning

    @property
    def is_leaf(self):
        return not self.children

    @property
    def is_effective_leaf(self):
        return self.is_leaf or self.collapsed

    def predicate_string(self):
        if not self.atoms:
            return "(all)"
        return " and ".join(a.describe() for a in self.atoms)

    def effective_leaves(self):
        if self.is_effective_leaf:
            return [self]
        out = []
        for child in self.children:
            out.extend(child.effective_leaves())
        return out

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass
class InstabilityTree:
    root: TreeNode
    metric: str
    group_labels: tuple
    n_rows: int

    def nodes(self):
        return list(self.root.walk())

    def leaves(self):
        return self.root.effective_leaves()


def _counts_from_row(row):
    return model.CellCounts(
        n01_a1=int(row[0]), n10_a1=int(row[1]), ndot_a1=int(row[2]),
        n01_a2=int(row[3]), n10_a2=int(row[4]), ndot_a2=int(row[5]))


def _loglik_at_mle(row):
    # sum over nonzero cells of n * log(n / n_group)
    total = 0.0
    for g in (0, 1):
        n_g = row[3 * g] + row[3 * g + 1] + row[3 * g + 2]
        if n_g == 0:
            continue
        for c in range(3):
            n_cell = row[3 * g + c]
            if n_cell > 0:
                total += n_cell * np.log(n_cell / n_g)
    return total


def _group_sizes(row):
    return (row[0] + row[1] + row[2], row[3] + row[4] + row[5])


def best_binary_partition(sample, candidate, min_per_group=25, exhaustive_limit=12):
    """Deviance-minimizing bipartition of the selected covariate's levels.

    Categorical levels are searched exhaustively up to exhaustive_limit,
    then greedily by level-wise disparity ordering; ordered kinds only get
    order-respecting cuts.  Groupings leaving a child below min_per_group
    conditioned observations in either sensitive group are skipped.
    Returns (left_level_ids, deviance) or None when nothing is feasible.
    """
    per_level = split_test.level_cell_counts(candidate, sample).astype(float)
    k = candidate.n_levels
    if k < 2:
        return None
    nonempty = [i for i in range(k) if per_level[i].sum() > 0]
    if len(nonempty) < 2:
        return None

    if candidate.kind == "categorical":
        if len(nonempty) <= exhaustive_limit:
            groupings = []
            rest = nonempty[1:]
            for mask in range(1, 1 << len(rest)):
                left = [nonempty[0]] + [lv for j, lv in enumerate(rest) if mask >> j & 1]
                groupings.append(tuple(left))
            groupings.append((nonempty[0],))
        else:
            # greedy: order levels by level-wise disparity estimate, cut contiguously
            deltas = []
            for lv in nonempty:
                d = split_test._level_delta(per_level[lv])
                deltas.append(0.0 if d is None else d)
            order = [nonempty[i] for i in np.argsort(deltas, kind="stable")]
            groupings = [tuple(order[: j + 1]) for j in range(len(order) - 1)]
    else:
        groupings = [tuple(lv for lv in nonempty[: j + 1])
                     for j in range(len(nonempty) - 1)]

    best = None
    for left in groupings:
        left_set = set(left)
        right = [lv for lv in nonempty if lv not in left_set]
        if not right:
            continue
        left_row = per_level[list(left)].sum(axis=0)
        right_row = per_level[right].sum(axis=0)
        ok = True
        for row in (left_row, right_row):
            n_a1, n_a2 = _group_sizes(row)
            if n_a1 < min_per_group or n_a2 < min_per_group:
                ok = False
                break
        if not ok:
            continue
        deviance = -2.0 * (_loglik_at_mle(left_row) + _loglik_at_mle(right_row))
        if best is None or deviance < best[1]:
            best = (tuple(sorted(left)), deviance)
    return best


def _node_rates(sample):
    rates = []
    for m_arr in (sample.yhat1, sample.yhat2):
        for g in (model.GROUP_A1, model.GROUP_A2):
            mask = sample.group == g
            rates.append(float(np.mean(m_arr[mask])) if mask.any() else float("nan"))
    return tuple(rates)


class _Grower:
    def __init__(self, table, config):
        self.table = table
        self.config = config
        self.yhat1 = table.yhat1.astype(np.int8)
        self.yhat2 = table.yhat2.astype(np.int8)
        if config.metric == "fnr":
            self.yhat1 = (1 - self.yhat1).astype(np.int8)
            self.yhat2 = (1 - self.yhat2).astype(np.int8)
        if config.metric == "accept":
            self.cond_mask = np.ones(table.n, dtype=bool)
        else:
            wanted = 0 if config.metric == "fpr" else 1
            self.cond_mask = np.asarray(table.outcome) == wanted
        self.next_id = 0

    def _sample(self, rows):
        cond = rows[self.cond_mask[rows]]
        return model.ConditionedSample(
            self.yhat1[cond], self.yhat2[cond], self.table.group[cond])

    def build(self, rows, atoms, depth):
        cfg = self.config
        sample = self._sample(rows)
        counts = model.count_cells(sample)
        node = TreeNode(id=self.next_id, depth=depth, atoms=tuple(atoms),
                        n_rows=int(rows.shape[0]), n_cond=sample.n,
                        n_cond_a1=counts.n_a1, n_cond_a2=counts.n_a2)
        self.next_id += 1

        if counts.n_a1 == 0 or counts.n_a2 == 0:
            node.status = "degenerate:empty-group"
            return node
        node.theta = model.mle(counts)
        node.delta = model.delta_hat(node.theta)
        node.rates = _node_rates(sample)
        if counts.n_disagree < cfg.min_disagreements:
            node.status = "degenerate:few-disagreements"
            return node
        if counts.n_a1 < cfg.min_node or counts.n_a2 < cfg.min_node:
            node.status = "min-size"
            return node
        if depth >= cfg.max_depth:
            node.status = "max-depth"
            return node

        candidates = {}
        tests = []
        for sv in cfg.split_vars:
            values = self.table.covariates[sv.name].values[rows[self.cond_mask[rows]]]
            cand = split_test.make_candidate(sv.name, sv.kind, values,
                                             max_bins=cfg.max_bins)
            candidates[sv.name] = cand
            tests.append(split_test.score_test(sample, cand, theta=node.theta))
        split_test.adjust_bonferroni(tests)
        chosen = split_test.select_split_variable(tests, cfg.alpha)
        if chosen is None:
            node.status = "no-significant-split"
            return node
        test = next(t for t in tests if t.covariate == chosen)
        cand = candidates[chosen]

        part = best_binary_partition(sample, cand, min_per_group=cfg.min_node,
                                     exhaustive_limit=cfg.exhaustive_limit)
        if part is None:
            node.status = "no-feasible-partition"
            return node
        left_levels, deviance = part
        kind = cand.kind
        info = SplitInfo(var=chosen, kind=kind, statistic=test.statistic,
                         df=test.df, p_raw=test.p_raw,
                         p_bonferroni=test.p_bonferroni, deviance=deviance,
                         n_candidates=sum(1 for t in tests if t.testable))

        full_values = self.table.covariates[chosen].values[rows]
        if kind == "categorical":
            left_values = tuple(cand.level_values[i] for i in left_levels)
            info.left_levels = left_values
            left_mask = np.isin(full_values, left_values)
            left_atom = Atom(chosen, "in", left_values)
            # right side is the complement so unseen levels stay routable
            right_atom = Atom(chosen, "not_in", left_values)
        else:
            cut = max(left_levels)
            if kind == "numeric":
                threshold = cand.edges[cut]
            else:
                threshold = cand.level_values[cut]
            info.threshold = float(threshold)
            vals = np.asarray(full_values, dtype=float)
            left_mask = vals <= threshold
            missing = np.isnan(vals)
            if missing.any():
                n_left = int(np.sum(left_mask & ~missing))
                n_right = int(np.sum(~left_mask & ~missing))
                info.missing_side = "left" if n_left >= n_right else "right"
                left_mask = np.where(missing, info.missing_side == "left", left_mask)
            left_atom = Atom(chosen, "<=", (float(threshold),),
                             missing_here=info.missing_side == "left")
            right_atom = Atom(chosen, ">", (float(threshold),),
                              missing_here=info.missing_side == "right")

        node.split = info
        node.children = [
            self.build(rows[left_mask], atoms + (left_atom,), depth + 1),
            self.build(rows[~left_mask], atoms + (right_atom,), depth + 1)]
        return node


def grow(table, config):
    """Grow the full instability tree on an observation table."""
    grower = _Grower(table, config)
    rows = np.arange(table.n)
    root = grower.build(rows, (), 0)
    return InstabilityTree(root=root, metric=config.metric,
                           group_labels=tuple(table.group_labels), n_rows=table.n)


def prune(tree, tau):
    """Collapse subtrees whose leaf disparity spread is below tau.

    Bottom-up: an internal node whose effective leaves all carry estimates
    within tau of one another is marked collapsed; its descendants keep
    their structure but are flagged pruned for provenance.
    """
    if tau < 0:
        raise ValueError("tau must be nonnegative")

    def visit(node):
        if node.is_leaf:
            return
        for child in node.children:
            visit(child)
        deltas = [leaf.delta for leaf in node.effective_leaves()]
        if any(d is None for d in deltas):
            return
        if max(deltas) - min(deltas) < tau:
            node.collapsed = True
            for desc in node.walk():
                if desc is not node:
                    desc.pruned = True

    visit(tree.root)
    return tree
