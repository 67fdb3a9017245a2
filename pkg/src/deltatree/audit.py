"""Dataset ingestion, baseline model comparison, audit orchestration, exports."""

from __future__ import annotations

import itertools
import json
from dataclasses import replace

import numpy as np
import pandas as pd
from scipy.stats import rankdata

from . import model
from .config import AuditConfig, ConfigError
from .data import MISSING_LABEL, Covariate, ObservationTable
from .tree import Atom, InstabilityTree, SplitInfo, TreeNode, grow, prune

SCHEMA_VERSION = 1

REPORT_COLUMNS = (
    "node_id", "role", "predicate", "n", "n_cond_a1", "n_cond_a2",
    "rate_m1_a1", "rate_m1_a2", "rate_m2_a1", "rate_m2_a2",
    "disparity_m1", "disparity_m2", "delta",
    "split_var", "statistic", "df", "p_raw", "p_bonferroni")


class IngestError(Exception):
    """Input file problem, with file/row/column context in the message."""


class DegenerateRootError(Exception):
    """The full dataset cannot support the multinomial model."""


def _parse_numeric(series, path, column):
    out = pd.to_numeric(series, errors="coerce")
    bad = out.isna() & series.notna()
    if bad.any():
        row = int(series.index[bad][0])
        raise IngestError(
            f"{path}: column {column!r}, row {row}: "
            f"unparseable numeric value {series[bad].iloc[0]!r}")
    return out


def _binarize(df, spec, path, rejections, name):
    col = spec.column
    if col not in df.columns:
        raise IngestError(f"{path}: missing model column {col!r}")
    raw = df[col]
    missing = raw.isna()
    for idx in df.index[missing]:
        rejections.append((int(idx), f"missing {name} value in {col!r}"))
    if spec.cutoff is not None:
        scores = _parse_numeric(raw, path, col)
        yhat = (scores >= spec.cutoff).astype(np.int8)
        return yhat, scores, missing
    vals = raw.fillna("")
    ok = vals.isin(["0", "1", 0, 1])
    for idx in df.index[~ok & ~missing]:
        rejections.append((int(idx), f"non-binary value {vals[idx]!r} in {col!r}"))
    yhat = (vals == "1") | (vals == 1)
    scores = _parse_numeric(raw.where(raw.isin(["0", "1", 0, 1])), path, col)
    return yhat.astype(np.int8), scores, missing | ~ok


def ingest(path, config):
    """Read a delimited file into a typed, validated observation table.

    Rows missing an outcome, prediction or group value are rejected with a
    per-row diagnostic, as are rows whose group label is not one of the
    audited pair.  Structural problems (missing columns, unparseable
    numerics, empty file) raise IngestError.
    """
    config.validate()
    try:
        df = pd.read_csv(path, sep=config.delimiter, dtype=str,
                         na_values=list(config.missing_tokens), keep_default_na=False)
    except pd.errors.EmptyDataError as exc:
        raise IngestError(f"{path}: empty file") from exc
    if df.empty:
        raise IngestError(f"{path}: no data rows")

    needed = [config.sensitive_column] + [sv.name for sv in config.split_vars]
    if config.outcome_column:
        needed.append(config.outcome_column)
    for col in needed:
        if col not in df.columns:
            raise IngestError(f"{path}: missing column {col!r}")

    rejections = []
    yhat1, scores1, bad1 = _binarize(df, config.model_a, path, rejections, "model_a")
    yhat2, scores2, bad2 = _binarize(df, config.model_b, path, rejections, "model_b")
    bad = bad1.to_numpy() | bad2.to_numpy()

    group_raw = df[config.sensitive_column]
    miss_g = group_raw.isna().to_numpy()
    for idx in df.index[miss_g]:
        rejections.append((int(idx), "missing group label"))
    mappable = group_raw.isin([config.a1, config.a2]).to_numpy()
    for idx in df.index[~mappable & ~miss_g]:
        rejections.append((int(idx), f"group label {group_raw[idx]!r} not in audited pair"))
    bad |= ~mappable

    outcome = None
    if config.outcome_column:
        raw = df[config.outcome_column]
        miss_o = raw.isna().to_numpy()
        for idx in df.index[miss_o]:
            rejections.append((int(idx), "missing outcome"))
        bad |= miss_o
        outcome = (raw == config.positive_label).astype(np.int8).to_numpy()

    keep = ~bad
    covs = {}
    for sv in config.split_vars:
        col = df[sv.name]
        if sv.kind == "categorical":
            values = col.fillna(MISSING_LABEL).to_numpy(dtype=object)[keep]
        else:
            values = _parse_numeric(col, path, sv.name).to_numpy(dtype=float)[keep]
        covs[sv.name] = Covariate(name=sv.name, kind=sv.kind, values=values)

    table = ObservationTable(
        yhat1=yhat1.to_numpy()[keep], yhat2=yhat2.to_numpy()[keep],
        group=(group_raw == config.a2).astype(np.int8).to_numpy()[keep],
        group_labels=(config.a1, config.a2),
        outcome=outcome[keep] if outcome is not None else None,
        covariates=covs,
        scores={"m1": scores1.to_numpy(dtype=float)[keep],
                "m2": scores2.to_numpy(dtype=float)[keep]},
        cutoffs={"m1": (config.model_a.column, config.model_a.cutoff),
                 "m2": (config.model_b.column, config.model_b.cutoff)},
        row_index=np.flatnonzero(keep), source=str(path),
        rejections=sorted(set(rejections)))
    return table


def _auc_midrank(scores, outcome):
    keep = ~np.isnan(scores)
    scores, outcome = scores[keep], outcome[keep]
    n_pos = int(np.sum(outcome == 1))
    n_neg = int(np.sum(outcome == 0))
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(scores)
    return float((np.sum(ranks[outcome == 1]) - n_pos * (n_pos + 1) / 2.0)
                 / (n_pos * n_neg))


def baseline_metrics(table):
    """Whole-population comparison of the two classifiers.

    Accuracy, PPV, TNR, TPR on the binarized classifications, AUC by the
    midrank statistic on raw scores (skipped when absent), plus the
    high-risk fraction of each model and the inter-model disagreement rate.
    """
    if table.outcome is None:
        raise ValueError("baseline metrics need an outcome column")
    y = table.outcome
    out = {"n": table.n, "models": {}}
    for name, yhat in (("m1", table.yhat1), ("m2", table.yhat2)):
        pos = yhat == 1
        rec = {
            "accuracy": float(np.mean(yhat == y)),
            "ppv": float(np.mean(y[pos] == 1)) if pos.any() else None,
            "tnr": float(np.mean(yhat[y == 0] == 0)) if (y == 0).any() else None,
            "tpr": float(np.mean(yhat[y == 1] == 1)) if (y == 1).any() else None,
            "high_risk_fraction": float(np.mean(pos)),
            "auc": None,
        }
        scores = table.scores.get(name) if table.scores else None
        if scores is not None and not np.all(np.isnan(scores)):
            rec["auc"] = _auc_midrank(scores, y)
        out["models"][name] = rec
    out["disagreement_rate"] = float(np.mean(table.yhat1 != table.yhat2))
    return out


def build_report(tree):
    """Per-node disparity rows, root ('Overall') first, then preorder."""
    rows = []
    for node in tree.nodes():
        if node.rates is not None:
            r11, r12, r21, r22 = node.rates
            disparity_m1 = r12 - r11
            disparity_m2 = r22 - r21
            delta = disparity_m2 - disparity_m1
        else:
            r11 = r12 = r21 = r22 = disparity_m1 = disparity_m2 = delta = None
        if node.id == 0:
            role = "overall"
        elif node.pruned:
            role = "pruned"
        elif node.is_effective_leaf:
            role = "leaf"
        else:
            role = "internal"
        split = node.split
        rows.append({
            "node_id": node.id, "role": role,
            "predicate": node.predicate_string() if node.id else "Overall",
            "n": node.n_rows,
            "n_cond_a1": node.n_cond_a1, "n_cond_a2": node.n_cond_a2,
            "rate_m1_a1": r11, "rate_m1_a2": r12,
            "rate_m2_a1": r21, "rate_m2_a2": r22,
            "disparity_m1": disparity_m1, "disparity_m2": disparity_m2,
            "delta": delta,
            "split_var": split.var if split else None,
            "statistic": split.statistic if split else None,
            "df": split.df if split else None,
            "p_raw": split.p_raw if split else None,
            "p_bonferroni": split.p_bonferroni if split else None})
    return rows


def run_audit(table, config):
    """Grow and prune the tree, then assemble the disparity report."""
    config.validate()
    full_tree = grow(table, config)
    if full_tree.root.status.startswith("degenerate") and full_tree.root.theta is None:
        raise DegenerateRootError(
            f"root node is degenerate ({full_tree.root.status}): "
            f"conditioned counts a1={full_tree.root.n_cond_a1}, "
            f"a2={full_tree.root.n_cond_a2}")
    pruned = prune(full_tree, config.tau)
    return pruned, build_report(pruned)


def run_all_pairs(frame_path, config, levels):
    """One audit per unordered level pair of a multi-level sensitive attribute."""
    results = {}
    for a1, a2 in itertools.combinations(levels, 2):
        cfg = replace(config, a1=str(a1), a2=str(a2))
        table = ingest(frame_path, cfg)
        results[(a1, a2)] = run_audit(table, cfg)
    return results


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def report_to_tsv(report, config=None):
    """Deterministic TSV with a resolved-config header block."""
    lines = []
    if config is not None:
        lines.append("# resolved_config\t" +
                     json.dumps(config.resolved(), sort_keys=True))
    lines.append("\t".join(REPORT_COLUMNS))
    for row in report:
        lines.append("\t".join(_fmt(row[c]) for c in REPORT_COLUMNS))
    return ("\n".join(lines) + "\n").encode("utf-8")


def metrics_to_tsv(metrics):
    lines = ["model\taccuracy\tauc\tppv\ttnr\ttpr\thigh_risk_fraction"]
    for name in ("m1", "m2"):
        rec = metrics["models"][name]
        lines.append("\t".join([name] + [_fmt(rec[k]) for k in
                                         ("accuracy", "auc", "ppv", "tnr", "tpr",
                                          "high_risk_fraction")]))
    lines.append(f"# disagreement_rate\t{_fmt(metrics['disagreement_rate'])}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def _atom_dict(atom):
    return {"var": atom.var, "op": atom.op, "value": list(atom.value),
            "missing_here": atom.missing_here}


def _node_dict(node):
    d = {
        "id": node.id,
        "depth": node.depth,
        "predicate": node.predicate_string(),
        "atoms": [_atom_dict(a) for a in node.atoms],
        "n": node.n_rows,
        "n_cond": node.n_cond,
        "n_cond_a1": node.n_cond_a1,
        "n_cond_a2": node.n_cond_a2,
        "status": node.status,
        "pruned": node.pruned,
        "collapsed": node.collapsed,
    }
    if node.theta is not None:
        d["theta"] = {"p01_a1": node.theta.p01_a1, "p10_a1": node.theta.p10_a1,
                      "p01_a2": node.theta.p01_a2, "p10_a2": node.theta.p10_a2}
        d["delta"] = node.delta
        d["rates"] = list(node.rates)
    if node.split is not None:
        s = node.split
        d["split"] = {
            "var": s.var, "kind": s.kind,
            "left_levels": list(s.left_levels) if s.left_levels is not None else None,
            "threshold": s.threshold, "missing_side": s.missing_side,
            "statistic": s.statistic, "df": s.df, "p_raw": s.p_raw,
            "p_bonferroni": s.p_bonferroni, "deviance": s.deviance,
            "n_candidates": s.n_candidates}
    if node.children:
        d["children"] = [_node_dict(c) for c in node.children]
    return d


def tree_to_json(tree):
    doc = {"schema_version": SCHEMA_VERSION, "metric": tree.metric,
           "group_labels": list(tree.group_labels), "n_rows": tree.n_rows,
           "root": _node_dict(tree.root)}
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


def _node_from_dict(d):
    atoms = tuple(Atom(var=a["var"], op=a["op"], value=tuple(a["value"]),
                       missing_here=a["missing_here"]) for a in d["atoms"])
    node = TreeNode(id=d["id"], depth=d["depth"], atoms=atoms, n_rows=d["n"],
                    n_cond=d["n_cond"], n_cond_a1=d["n_cond_a1"],
                    n_cond_a2=d["n_cond_a2"], status=d["status"],
                    pruned=d["pruned"], collapsed=d["collapsed"])
    if "theta" in d:
        t = d["theta"]
        node.theta = model.ThetaHat(p01_a1=t["p01_a1"], p10_a1=t["p10_a1"],
                                    p01_a2=t["p01_a2"], p10_a2=t["p10_a2"])
        node.delta = d["delta"]
        node.rates = tuple(d["rates"])
    if "split" in d:
        s = d["split"]
        node.split = SplitInfo(
            var=s["var"], kind=s["kind"],
            left_levels=tuple(s["left_levels"]) if s["left_levels"] is not None else None,
            threshold=s["threshold"], missing_side=s["missing_side"],
            statistic=s["statistic"], df=s["df"], p_raw=s["p_raw"],
            p_bonferroni=s["p_bonferroni"], deviance=s["deviance"],
            n_candidates=s["n_candidates"])
    node.children = [_node_from_dict(c) for c in d.get("children", [])]
    return node


def tree_from_json(blob):
    doc = json.loads(blob)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema version {doc.get('schema_version')!r}")
    return InstabilityTree(root=_node_from_dict(doc["root"]), metric=doc["metric"],
                           group_labels=tuple(doc["group_labels"]),
                           n_rows=doc["n_rows"])


def _dot_label(node):
    head = "Overall" if node.id == 0 else node.atoms[-1].describe()
    parts = [head, f"n_cond={node.n_cond}"]
    if node.delta is not None:
        parts.append(f"delta={node.delta:.4f}")
    if node.collapsed:
        parts.append("[collapsed]")
    return "\\n".join(parts)


def tree_to_dot(tree):
    lines = ["digraph instability_tree {", "  node [shape=box];"]
    for node in tree.nodes():
        style = ' style=dashed' if node.pruned else ""
        lines.append(f'  n{node.id} [label="{_dot_label(node)}"{style}];')
    for node in tree.nodes():
        for child in node.children:
            p = node.split.p_raw if node.split else None
            label = f' [label="p={p:.3g}"]' if p is not None else ""
            lines.append(f"  n{node.id} -> n{child.id}{label};")
    lines.append("}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def tree_to_text(tree):
    lines = []

    def visit(node, indent):
        head = "Overall" if node.id == 0 else node.atoms[-1].describe()
        tags = []
        if node.collapsed:
            tags.append("collapsed")
        if node.pruned:
            tags.append("pruned")
        delta = f" delta={node.delta:.4f}" if node.delta is not None else ""
        tag = f" [{', '.join(tags)}]" if tags else ""
        lines.append(f"{'  ' * indent}{head} (n_cond={node.n_cond}{delta}){tag}")
        for child in node.children:
            visit(child, indent + 1)

    visit(tree.root, 0)
    return ("\n".join(lines) + "\n").encode("utf-8")


def export_tree(tree, fmt):
    if fmt == "json":
        return tree_to_json(tree)
    if fmt == "dot":
        return tree_to_dot(tree)
    if fmt == "text":
        return tree_to_text(tree)
    raise ValueError(f"unknown export format {fmt!r}")
