"""deltatree: locate subgroups where two classifiers' fairness disparities differ.

Given an outcome, two black-box classifications, a binary sensitive
attribute and a set of splitting covariates, the package grows a
score-test-driven instability tree whose leaves are subgroups with
distinct differences-in-differences of FPR, FNR or acceptance rate.
"""

from .audit import (
    DegenerateRootError,
    IngestError,
    baseline_metrics,
    build_report,
    export_tree,
    ingest,
    run_all_pairs,
    run_audit,
    tree_from_json,
)
from .config import AuditConfig, ConfigError, ModelSpec, SplitVar
from .data import Covariate, ObservationTable
from .datagen import Cell, CovariateSpec, Scenario, generate, oracle_delta
from .model import (
    CellCounts,
    ConditionedSample,
    DegenerateNodeError,
    ReparamTheta,
    ThetaHat,
    condition_sample,
    count_cells,
    delta_hat,
    inverse_reparameterize,
    log_likelihood,
    mle,
    reparameterize,
    score_contribution,
)
from .numerics import chisq_sf, empirical_information, inv_sqrt, jacobi_eigh
from .split_test import (
    SplitCandidate,
    SplitTest,
    bin_numeric,
    score_test,
    select_split_variable,
)
from .tree import InstabilityTree, TreeNode, best_binary_partition, grow, prune

__version__ = "0.1.0"
