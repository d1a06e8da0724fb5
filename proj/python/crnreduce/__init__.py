"""Graphical Tikhonov-Fenichel reduction of mass-action reaction networks.

Thin wrapper over the compiled core: every function takes the network file
text (and optionally the non-interacting species), and returns parsed JSON
reports in the same schema the command-line tool emits.
"""

import json as _json

from crnreduce import _core
from crnreduce._core import CrnError

__all__ = ["validate", "graph_dot", "tfpv", "reduce", "simulate", "CrnError"]


def validate(text, z=()):
    """Parse a network, check the non-interacting condition and the
    conservation structure; returns the diagnostics dict."""
    return _json.loads(_core.validate(text, list(z)))


def graph_dot(text, z=()):
    """DOT rendering of the labelled multi-digraph on Z and *."""
    return _core.graph_dot(text, list(z))


def tfpv(text, z=()):
    """All sign patterns passing the blanket conditions, with reports."""
    return _json.loads(_core.tfpv(text, list(z)))


def reduce(text, z, kappa, alpha=""):
    """Symbolic Tikhonov-Fenichel and QSS reductions for one sign pattern.

    `kappa`/`alpha` are strings of '+' and '0', one character per rate
    constant / conserved amount.
    """
    return _json.loads(_core.reduce(text, list(z), kappa, alpha))


def simulate(text, z, kappa, alpha="", values=None, epsilons=(1e-2, 5e-3, 2.5e-3, 1.25e-3),
             T=10.0, t0=-1.0, x0=(), near_manifold=False, seed=0):
    """Epsilon-convergence experiment for one sign pattern.

    `values` maps parameter names to numbers; a trailing '*' selects the
    perturbation direction of a zero-signed parameter. Unset values are 1.
    """
    return _json.loads(
        _core.simulate(text, list(z), kappa, alpha, dict(values or {}),
                       list(epsilons), T, t0, list(x0), near_manifold, seed))
