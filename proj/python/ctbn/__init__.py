"""Continuous-time Bayesian networks: simulation, star-approximation inference and structure learning."""

from ._ctbn import (
    CtbnError,
    auroc_aupr,
    glauber_network,
    infer,
    learn,
    named_graph,
    observe,
    simulate,
)

__all__ = [
    "CtbnError",
    "auroc_aupr",
    "glauber_network",
    "infer",
    "learn",
    "named_graph",
    "observe",
    "simulate",
]
