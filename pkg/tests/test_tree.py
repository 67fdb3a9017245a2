import itertools
from dataclasses import replace

import numpy as np
import pytest

from deltatree import model, split_test, tree
from deltatree.config import AuditConfig, ModelSpec, SplitVar
from deltatree.datagen import Cell, CovariateSpec, Scenario, generate, spawn_seeds
from deltatree.model import condition_sample, count_cells, log_likelihood, mle
from conftest import make_table


def base_config(metric="accept", split_vars=None, **kw):
    cfg = AuditConfig(metric=metric, outcome_column="y",
                      model_a=ModelSpec("m1"), model_b=ModelSpec("m2"),
                      sensitive_column="g", a1="a1", a2="a2",
                      split_vars=split_vars or [SplitVar("x")], **kw)
    return cfg


PLANTED = Scenario(
    n=4000, seed=3,
    covariates=[CovariateSpec(name="seg", levels=("u", "v")),
                CovariateSpec(name="noise", levels=("a", "b", "c"))],
    cells=[Cell(where={"seg": ["u"]}, p01_a1=0.1, p10_a1=0.1, p01_a2=0.1, p10_a2=0.1),
           Cell(where={"seg": ["v"]}, p01_a1=0.1, p10_a1=0.1, p01_a2=0.28, p10_a2=0.1)])


def atoms_mask(table, atoms):
    mask = np.ones(table.n, dtype=bool)
    for atom in atoms:
        vals = table.covariates[atom.var].values
        if atom.op == "in":
            mask &= np.isin(vals, atom.value)
        elif atom.op == "not_in":
            mask &= ~np.isin(vals, atom.value)
        else:
            v = np.asarray(vals, dtype=float)
            hit = v <= atom.value[0] if atom.op == "<=" else v > atom.value[0]
            hit = np.where(np.isnan(v), atom.missing_here, hit)
            mask &= hit
    return mask


def partition_oracle(sample, candidate, min_per_group):
    # independent enumeration: try every bipartition, refit each side
    per_level = split_test.level_cell_counts(candidate, sample)
    levels = [i for i in range(candidate.n_levels) if per_level[i].sum() > 0]
    best = None
    for r in range(1, len(levels)):
        for left in itertools.combinations(levels, r):
            right = [lv for lv in levels if lv not in left]
            rows = [per_level[list(side)].sum(axis=0) for side in (left, right)]
            counts = [model.CellCounts(*[int(v) for v in row]) for row in rows]
            if any(c.n_a1 < min_per_group or c.n_a2 < min_per_group for c in counts):
                continue
            dev = -2.0 * sum(log_likelihood(c, mle(c)) for c in counts)
            key = (dev, tuple(sorted(left)))
            if best is None or dev < best[0]:
                best = (dev, frozenset(left) if 0 not in left else frozenset(left))
    return best


class TestBestBinaryPartition:
    def _sample_cand(self, scenario, covariate, kind="categorical"):
        table = generate(scenario)
        sample = condition_sample(table, "accept")
        cand = split_test.make_candidate(covariate, kind,
                                         table.covariates[covariate].values)
        return sample, cand

    def test_two_levels_single_choice(self):
        sample, cand = self._sample_cand(PLANTED, "seg")
        left, dev = tree.best_binary_partition(sample, cand, min_per_group=10)
        assert left in ((0,), (1,))
        oracle = partition_oracle(sample, cand, 10)
        assert dev == pytest.approx(oracle[0], rel=1e-12)

    def test_three_level_categorical_matches_oracle(self):
        sample, cand = self._sample_cand(PLANTED, "noise")
        left, dev = tree.best_binary_partition(sample, cand, min_per_group=10)
        oracle = partition_oracle(sample, cand, 10)
        assert dev == pytest.approx(oracle[0], rel=1e-12)
        assert frozenset(left) in (oracle[1], frozenset(
            lv for lv in range(cand.n_levels) if lv not in oracle[1]))

    def test_numeric_cut_matches_oracle(self):
        scenario = replace(PLANTED, covariates=[
            CovariateSpec(name="seg", levels=("u", "v")),
            CovariateSpec(name="z", kind="numeric", low=0.0, high=1.0)])
        table = generate(scenario)
        sample = condition_sample(table, "accept")
        cand = split_test.bin_numeric("z", table.covariates["z"].values, max_bins=4)
        left, dev = tree.best_binary_partition(sample, cand, min_per_group=10)
        # order-respecting cuts only: left side is a prefix of the bins
        assert left == tuple(range(len(left)))
        per_level = split_test.level_cell_counts(cand, sample)
        best = None
        for cut in range(cand.n_levels - 1):
            rows = [per_level[: cut + 1].sum(axis=0), per_level[cut + 1:].sum(axis=0)]
            counts = [model.CellCounts(*[int(v) for v in r]) for r in rows]
            d = -2.0 * sum(log_likelihood(c, mle(c)) for c in counts)
            best = d if best is None else min(best, d)
        assert dev == pytest.approx(best, rel=1e-12)

    def test_min_size_infeasible_returns_none(self):
        sample, cand = self._sample_cand(PLANTED, "seg")
        assert tree.best_binary_partition(sample, cand, min_per_group=10 ** 6) is None


class TestGrow:
    def test_identical_models_single_leaf(self):
        n = 400
        y = np.tile([0, 1], n // 2)
        yhat = np.tile([0, 1, 1, 0], n // 4)
        t = make_table(outcome=y, yhat1=yhat, yhat2=yhat,
                       group=np.tile([0, 0, 1, 1], n // 4),
                       covariates={"x": ("categorical", np.tile(["p", "q"], n // 2))})
        result = tree.grow(t, base_config())
        assert result.root.is_leaf
        assert result.root.status == "degenerate:few-disagreements"
        assert result.root.delta == 0.0

    def test_planted_split_found(self):
        table = generate(PLANTED)
        cfg = base_config(split_vars=[SplitVar("seg"), SplitVar("noise")])
        result = tree.grow(table, cfg)
        assert result.root.split is not None
        assert result.root.split.var == "seg"
        kids = result.root.children
        assert {k.predicate_string() for k in kids} == {"seg in {u}", "seg not in {u}"}

    def test_children_partition_parent_rows(self):
        table = generate(PLANTED)
        cfg = base_config(split_vars=[SplitVar("seg"), SplitVar("noise")])
        result = tree.grow(table, cfg)
        for node in result.nodes():
            if node.children:
                assert sum(c.n_rows for c in node.children) == node.n_rows
                assert sum(c.n_cond for c in node.children) == node.n_cond

    def test_every_record_in_exactly_one_leaf(self):
        table = generate(PLANTED)
        cfg = base_config(split_vars=[SplitVar("seg"), SplitVar("noise")])
        result = tree.grow(table, cfg)
        leaf_rows = sum(leaf.n_rows for leaf in result.root.effective_leaves())
        assert leaf_rows == table.n

    def test_deviance_improvement(self):
        # per-child refits can only raise the total log-likelihood
        table = generate(PLANTED)
        cfg = base_config(split_vars=[SplitVar("seg"), SplitVar("noise")], alpha=0.5)
        result = tree.grow(table, cfg)

        def node_loglik(node):
            mask = atoms_mask(table, node.atoms)
            sample = condition_sample(make_table(
                outcome=table.outcome[mask], yhat1=table.yhat1[mask],
                yhat2=table.yhat2[mask], group=table.group[mask]), cfg.metric)
            counts = count_cells(sample)
            return log_likelihood(counts, mle(counts))

        checked = 0
        for node in result.nodes():
            if not node.children:
                continue
            child_sum = sum(node_loglik(c) for c in node.children)
            assert child_sum >= node_loglik(node) - 1e-9
            checked += 1
        assert checked >= 1

    def test_root_delta_matches_direct_rates(self):
        table = generate(PLANTED)
        cfg = base_config(split_vars=[SplitVar("seg")])
        result = tree.grow(table, cfg)
        g, y1, y2 = table.group, table.yhat1, table.yhat2
        direct = ((np.mean(y2[g == 1]) - np.mean(y2[g == 0]))
                  - (np.mean(y1[g == 1]) - np.mean(y1[g == 0])))
        assert result.root.delta == pytest.approx(direct, abs=1e-12)

    def test_stricter_alpha_never_more_leaves(self):
        table = generate(PLANTED)
        split_vars = [SplitVar("seg"), SplitVar("noise")]
        leaves = []
        for alpha in (0.5, 0.05, 0.001, 1e-12):
            cfg = base_config(split_vars=split_vars, alpha=alpha)
            leaves.append(len(tree.grow(table, cfg).leaves()))
        assert leaves == sorted(leaves, reverse=True)

    def test_max_depth_respected(self):
        table = generate(PLANTED)
        cfg = base_config(split_vars=[SplitVar("seg"), SplitVar("noise")],
                          alpha=0.9, max_depth=1)
        result = tree.grow(table, cfg)
        assert max(node.depth for node in result.nodes()) <= 1

    def test_recovery_rate_planted_partition(self):
        cfg = base_config(split_vars=[SplitVar("seg"), SplitVar("noise")], alpha=0.01)
        hits = 0
        runs = 60   # acceptance suite runs the full 200
        for seed in spawn_seeds(21, runs):
            table = generate(replace(PLANTED, seed=seed))
            result = tree.prune(tree.grow(table, cfg), cfg.tau)
            leaves = result.leaves()
            hits += (len(leaves) == 2 and
                     sorted(l.predicate_string() for l in leaves)
                     == ["seg in {u}", "seg not in {u}"])
        assert hits / runs >= 0.9


class TestPrune:
    def _leaf(self, node_id, delta):
        return tree.TreeNode(id=node_id, depth=1, atoms=(), n_rows=10,
                             delta=delta, status="no-significant-split")

    def _internal(self, node_id, children, delta=0.0):
        node = tree.TreeNode(id=node_id, depth=0, atoms=(), n_rows=10,
                             delta=delta)
        node.children = children
        return node

    def _tree(self, root):
        return tree.InstabilityTree(root=root, metric="fpr",
                                    group_labels=("a1", "a2"), n_rows=10)

    def test_tau_zero_never_collapses(self):
        root = self._internal(0, [self._leaf(1, 0.1), self._leaf(2, 0.1)])
        result = tree.prune(self._tree(root), 0.0)
        assert not result.root.collapsed

    def test_small_spread_collapses(self):
        # spread of {0.001, 0.006, -0.006} is 0.012 < 0.02
        inner = self._internal(1, [self._leaf(3, 0.006), self._leaf(4, -0.006)],
                               delta=0.0)
        root = self._internal(0, [self._leaf(2, 0.001), inner], delta=0.001)
        result = tree.prune(self._tree(root), 0.02)
        assert result.root.collapsed
        assert all(n.pruned for n in result.root.walk() if n is not result.root)

    def test_large_spread_stays(self):
        root = self._internal(0, [self._leaf(1, 0.10), self._leaf(2, -0.10)])
        result = tree.prune(self._tree(root), 0.02)
        assert not result.root.collapsed

    def test_partial_collapse_inner_only(self):
        inner = self._internal(1, [self._leaf(3, 0.001), self._leaf(4, 0.004)])
        root = self._internal(0, [inner, self._leaf(2, 0.30)])
        result = tree.prune(self._tree(root), 0.02)
        assert result.root.children[0].collapsed
        assert not result.root.collapsed
        assert len(result.leaves()) == 2

    def test_pruning_never_increases_leaves(self):
        table = generate(PLANTED)
        cfg = base_config(split_vars=[SplitVar("seg"), SplitVar("noise")], alpha=0.5)
        grown = tree.grow(table, cfg)
        before = len(grown.leaves())
        after = len(tree.prune(grown, 0.05).leaves())
        assert after <= before
