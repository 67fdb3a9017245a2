"""Audit configuration: columns, metric, and all tree-growing knobs."""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import yaml

from .model import METRICS

SPLIT_KINDS = ("categorical", "ordinal", "numeric")


class ConfigError(Exception):
    """Invalid or inconsistent audit configuration."""


@dataclass
class ModelSpec:
    column: str
    cutoff: float = None     # None: column is already a 0/1 classification

    @classmethod
    def parse(cls, text):
        """Parse a 'column' or 'column:cutoff' flag value."""
        if ":" in text:
            column, cut = text.rsplit(":", 1)
            try:
                return cls(column=column, cutoff=float(cut))
            except ValueError as exc:
                raise ConfigError(f"bad cutoff in model spec {text!r}") from exc
        return cls(column=text)


@dataclass
class SplitVar:
    name: str
    kind: str = "categorical"

    def __post_init__(self):
        if self.kind not in SPLIT_KINDS:
            raise ConfigError(f"split variable {self.name!r}: unknown kind {self.kind!r}")

    @classmethod
    def parse(cls, text):
        if ":" in text:
            name, kind = text.rsplit(":", 1)
            return cls(name=name, kind=kind)
        return cls(name=text)


@dataclass
class AuditConfig:
    metric: str = "fpr"
    outcome_column: str = None
    positive_label: str = "1"
    model_a: ModelSpec = None
    model_b: ModelSpec = None
    sensitive_column: str = None
    a1: str = None
    a2: str = None
    split_vars: list = field(default_factory=list)
    alpha: float = 0.05
    min_node: int = 25            # conditioned observations per group
    tau: float = 0.02             # practical-significance pruning threshold
    max_bins: int = 10
    max_depth: int = 5
    min_disagreements: int = 5    # degenerate-node floor, summed over groups
    exhaustive_limit: int = 12    # categorical levels searched exhaustively
    delimiter: str = ","
    missing_tokens: tuple = ("", "NA")

    def validate(self):
        if self.metric not in METRICS:
            raise ConfigError(f"unknown metric {self.metric!r}")
        if self.metric != "accept" and not self.outcome_column:
            raise ConfigError(f"metric {self.metric!r} requires an outcome column")
        if self.model_a is None or self.model_b is None:
            raise ConfigError("both model columns must be specified")
        if not self.sensitive_column:
            raise ConfigError("sensitive column must be specified")
        if self.a1 is None or self.a2 is None or self.a1 == self.a2:
            raise ConfigError("sensitive levels a1 and a2 must be distinct")
        if any(c.cutoff is not None and c.cutoff < 0 for c in (self.model_a, self.model_b)):
            raise ConfigError("cutoffs must be nonnegative")
        if not self.split_vars:
            raise ConfigError("at least one splitting covariate is required")
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError("alpha must lie in (0, 1]")
        if self.tau < 0.0:
            raise ConfigError("tau must be nonnegative")
        if self.min_node < 1 or self.max_bins < 2 or self.max_depth < 0:
            raise ConfigError("min_node >= 1, max_bins >= 2, max_depth >= 0 required")
        return self

    def resolved(self):
        """Plain-dict snapshot written into report headers for reproducibility."""
        d = asdict(self)
        d["missing_tokens"] = list(self.missing_tokens)
        return d

    @classmethod
    def from_dict(cls, raw):
        raw = dict(raw)
        cfg = cls()
        if "outcome" in raw:
            out = raw.pop("outcome")
            cfg.outcome_column = out.get("column")
            cfg.positive_label = str(out.get("positive", "1"))
        for key, attr in (("model_a", "model_a"), ("model_b", "model_b")):
            if key in raw:
                m = raw.pop(key)
                spec = ModelSpec(column=m["column"],
                                 cutoff=float(m["cutoff"]) if "cutoff" in m and m["cutoff"] is not None else None) \
                    if isinstance(m, dict) else ModelSpec.parse(str(m))
                setattr(cfg, attr, spec)
        if "sensitive" in raw:
            s = raw.pop("sensitive")
            cfg.sensitive_column = s.get("column")
            cfg.a1 = str(s.get("a1"))
            cfg.a2 = str(s.get("a2"))
        if "split_vars" in raw:
            parsed = []
            for sv in raw.pop("split_vars"):
                if isinstance(sv, dict):
                    parsed.append(SplitVar(name=sv["name"], kind=sv.get("kind", "categorical")))
                else:
                    parsed.append(SplitVar.parse(str(sv)))
            cfg.split_vars = parsed
        for key, value in raw.items():
            if not hasattr(cfg, key):
                raise ConfigError(f"unknown config key {key!r}")
            if key == "missing_tokens":
                value = tuple(str(v) for v in value)
            setattr(cfg, key, value)
        return cfg

    @classmethod
    def from_yaml(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
        if not isinstance(raw, dict):
            raise ConfigError(f"config file {path} must hold a mapping")
        return cls.from_dict(raw)
