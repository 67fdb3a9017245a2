import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

import numpy as np
import pytest

from deltatree.data import Covariate, ObservationTable

COMPAS_ENV = "COMPAS_DATA"
COMPAS_DEFAULT = os.path.join(os.path.dirname(__file__), "..", "data",
                              "compas-scores-two-years.csv")


def compas_path():
    """Location of the public Broward County dataset, if the user provided it."""
    path = os.environ.get(COMPAS_ENV, COMPAS_DEFAULT)
    return path if os.path.exists(path) else None


def make_table(outcome, yhat1, yhat2, group, covariates=None, labels=("a1", "a2")):
    covs = {}
    for name, (kind, values) in (covariates or {}).items():
        dtype = object if kind == "categorical" else float
        covs[name] = Covariate(name=name, kind=kind,
                               values=np.asarray(values, dtype=dtype))
    return ObservationTable(
        yhat1=np.asarray(yhat1, dtype=np.int8),
        yhat2=np.asarray(yhat2, dtype=np.int8),
        group=np.asarray(group, dtype=np.int8),
        group_labels=labels,
        outcome=None if outcome is None else np.asarray(outcome, dtype=np.int8),
        covariates=covs)


@pytest.fixture
def rng():
    return np.random.default_rng(20260824)
