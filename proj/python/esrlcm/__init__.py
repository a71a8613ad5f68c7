"""Python bindings for equivalence set restricted latent class models."""

import json

from . import _core
from ._core import (
    ConfigError,
    DimensionError,
    DomainError,
    SamplingError,
    canonicalize,
    check_identifiability,
    q_matrix_to_base,
    repelled_beta_log_density,
    repelled_beta_normalizer,
    repelled_beta_sample,
)

__all__ = [
    "ConfigError",
    "DimensionError",
    "DomainError",
    "SamplingError",
    "bell",
    "canonicalize",
    "check_identifiability",
    "fit",
    "mode_restrictions",
    "predictive_loglik",
    "q_matrix_to_base",
    "repelled_beta_log_density",
    "repelled_beta_normalizer",
    "repelled_beta_sample",
    "restriction_metrics",
    "simulate",
    "stirling2",
]


def stirling2(n, k):
    return int(_core.stirling2(n, k))


def bell(n):
    return int(_core.bell(n))


def simulate(classes, n, seed=1, holdout_n=0):
    """Returns (data, holdout, truth) with truth as a dict."""
    data, holdout, truth = _core.simulate(classes, n, seed, holdout_n)
    return data, holdout, json.loads(truth)


def fit(data, classes, prior=None, mcmc=None, unrestricted=False, threads=0):
    """Runs the sampler. Returns one list of draw dicts per chain.

    `prior` and `mcmc` use the same keys as the run config JSON.
    """
    config = {
        "classes": classes,
        "prior": prior if prior is not None else {"lambda": 1.0},
        "mcmc": mcmc or {},
        "unrestricted": unrestricted,
        "paths": {"data": ""},
    }
    chains = _core.fit(data, json.dumps(config), threads)
    return [[json.loads(line) for line in chain.splitlines()] for chain in chains]


def _jsonl(draws):
    return "".join(json.dumps(d) + "\n" for d in draws)


def predictive_loglik(draws, holdout, mode="predictive_mean"):
    return _core.predictive_loglik(_jsonl(draws), holdout, mode)


def mode_restrictions(draws):
    """Per-item modal base-class columns after aligning the draws."""
    return _core.mode_restrictions(_jsonl(draws))


def restriction_metrics(truth, draws):
    """(sensitivity, specificity); either may be None when undefined."""
    return _core.restriction_metrics(json.dumps(truth), _jsonl(draws))
