"""Command-line entry points: metrics, audit, simulate.

Exit codes: 0 success, 2 configuration/input validation error,
3 degenerate root (the dataset cannot support the model at all).
"""

from __future__ import annotations

import sys
from dataclasses import replace

import click
import numpy as np

from . import audit as audit_mod
from . import datagen, split_test
from .config import AuditConfig, ConfigError, ModelSpec, SplitVar
from .model import DegenerateNodeError, condition_sample, count_cells, mle

EXIT_VALIDATION = 2
EXIT_DEGENERATE = 3


def _fail(message, code):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _build_config(config_path, metric, model_a, model_b, outcome, sensitive,
                  split_vars, alpha, min_node, tau, max_bins):
    cfg = AuditConfig.from_yaml(config_path) if config_path else AuditConfig()
    if metric:
        cfg.metric = metric
    if model_a:
        cfg.model_a = ModelSpec.parse(model_a)
    if model_b:
        cfg.model_b = ModelSpec.parse(model_b)
    if outcome:
        if "=" in outcome:
            col, pos = outcome.split("=", 1)
            cfg.outcome_column, cfg.positive_label = col, pos
        else:
            cfg.outcome_column = outcome
    if sensitive:
        try:
            col, pair = sensitive.split(":", 1)
            a1, a2 = pair.split(",", 1)
        except ValueError:
            raise ConfigError(
                f"--sensitive must look like column:a1,a2 (got {sensitive!r})")
        cfg.sensitive_column, cfg.a1, cfg.a2 = col, a1, a2
    if split_vars:
        cfg.split_vars = [SplitVar.parse(s.strip())
                          for s in split_vars.split(",") if s.strip()]
    if alpha is not None:
        cfg.alpha = alpha
    if min_node is not None:
        cfg.min_node = min_node
    if tau is not None:
        cfg.tau = tau
    if max_bins is not None:
        cfg.max_bins = max_bins
    return cfg


def _write(out, blob):
    if out:
        with open(out, "wb") as fh:
            fh.write(blob)
    else:
        sys.stdout.buffer.write(blob)


_common = [
    click.option("--data", required=True, type=click.Path(exists=True)),
    click.option("--config", "config_path", type=click.Path(exists=True)),
    click.option("--metric", type=click.Choice(["fpr", "fnr", "accept"])),
    click.option("--model-a", help="column or column:cutoff for the first model"),
    click.option("--model-b", help="column or column:cutoff for the second model"),
    click.option("--outcome", help="column or column=positive-label"),
    click.option("--sensitive", help="column:a1,a2"),
    click.option("--split-vars", help="comma list of name or name:kind"),
    click.option("--alpha", type=float),
    click.option("--min-node", type=int),
    click.option("--tau", type=float),
    click.option("--max-bins", type=int),
    click.option("--out", type=click.Path()),
]


def _with_common(fn):
    for opt in reversed(_common):
        fn = opt(fn)
    return fn


@click.group()
def main():
    """Compare two classifiers and locate subgroups where their disparities differ."""


@main.command()
@_with_common
def metrics(data, config_path, out, **overrides):
    """Baseline whole-population comparison of the two models."""
    try:
        cfg = _build_config(config_path, **overrides)
        table = audit_mod.ingest(data, cfg)
        result = audit_mod.baseline_metrics(table)
    except (ConfigError, audit_mod.IngestError, ValueError) as exc:
        _fail(str(exc), EXIT_VALIDATION)
    click.echo(f"rows accepted: {table.n}, rejected: {len(table.rejections)}", err=True)
    _write(out, audit_mod.metrics_to_tsv(result))


@main.command(name="audit")
@_with_common
@click.option("--format", "fmt", default="tsv",
              type=click.Choice(["json", "dot", "text", "tsv"]))
def audit_cmd(data, config_path, out, fmt, **overrides):
    """Grow, prune and export the instability tree / disparity report."""
    try:
        cfg = _build_config(config_path, **overrides)
        table = audit_mod.ingest(data, cfg)
    except (ConfigError, audit_mod.IngestError) as exc:
        _fail(str(exc), EXIT_VALIDATION)
    try:
        tree, report = audit_mod.run_audit(table, cfg)
    except audit_mod.DegenerateRootError as exc:
        _fail(str(exc), EXIT_DEGENERATE)
    click.echo(f"rows accepted: {table.n}, rejected: {len(table.rejections)}; "
               f"leaves: {len(tree.leaves())}", err=True)
    if fmt == "tsv":
        _write(out, audit_mod.report_to_tsv(report, cfg))
    else:
        _write(out, audit_mod.export_tree(tree, fmt))


@main.command()
@click.option("--scenario", required=True, type=click.Path(exists=True))
@click.option("--out", type=click.Path())
@click.option("--what", default="table", type=click.Choice(["table", "calibration"]))
@click.option("--replications", default=200, type=int)
@click.option("--covariate", help="splitting variable to test during calibration")
@click.option("--alpha", default=0.05, type=float)
@click.option("--metric", default="fpr", type=click.Choice(["fpr", "fnr", "accept"]))
def simulate(scenario, out, what, replications, covariate, alpha, metric):
    """Generate synthetic tables or a null-calibration summary."""
    try:
        scn = datagen.Scenario.from_yaml(scenario).validate()
    except (datagen.ScenarioError, KeyError, TypeError) as exc:
        _fail(str(exc), EXIT_VALIDATION)

    if what == "table":
        table = datagen.generate(scn)
        cols = ["row", "outcome", "yhat1", "yhat2", "group"] + list(table.covariates)
        lines = ["\t".join(cols)]
        labels = table.group_labels
        for i in range(table.n):
            row = [str(i), str(int(table.outcome[i])), str(int(table.yhat1[i])),
                   str(int(table.yhat2[i])), labels[int(table.group[i])]]
            row += [str(table.covariates[c].values[i]) for c in table.covariates]
            lines.append("\t".join(row))
        _write(out, ("\n".join(lines) + "\n").encode("utf-8"))
        return

    if not covariate:
        _fail("--covariate is required for calibration runs", EXIT_VALIDATION)
    spec = next((c for c in scn.covariates if c.name == covariate), None)
    if spec is None:
        _fail(f"scenario has no covariate {covariate!r}", EXIT_VALIDATION)
    seeds = datagen.spawn_seeds(scn.seed, replications)
    lines = ["rep\tseed\tstatistic\tdf\tp_raw"]
    rejected = 0
    for rep, seed in enumerate(seeds):
        table = datagen.generate(replace(scn, seed=seed))
        sample = condition_sample(table, metric)
        try:
            theta = mle(count_cells(sample))
        except DegenerateNodeError:
            continue
        cand = split_test.make_candidate(
            covariate, spec.kind, table.covariates[covariate].values[
                _cond_mask(table, metric)])
        test = split_test.score_test(sample, cand, theta=theta)
        rejected += test.p_raw < alpha
        lines.append(f"{rep}\t{seed}\t{test.statistic!r}\t{test.df}\t{test.p_raw!r}")
    _write(out, ("\n".join(lines) + "\n").encode("utf-8"))
    click.echo(f"rejection rate at alpha={alpha}: {rejected / len(seeds):.4f}", err=True)


def _cond_mask(table, metric):
    if metric == "accept":
        return np.ones(table.n, dtype=bool)
    return table.outcome == (0 if metric == "fpr" else 1)


if __name__ == "__main__":
    main()
