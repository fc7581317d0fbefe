"""Inferential quantities shared by every analysis."""

from bayesics.inference.schema import BayesFactor, InferenceSummary
from bayesics.inference.core import (
    KEEP_DROP,
    default_rope,
    epr,
    epr_draws,
    exp_bounds,
    jeffreys_label,
    summarize_closed_form,
    summarize_draws,
)
from bayesics.inference.elicit import BetaParms, InvGammaParms, find_beta_parms, find_invgamma_parms

__all__ = [
    "KEEP_DROP",
    "BayesFactor",
    "BetaParms",
    "InferenceSummary",
    "InvGammaParms",
    "default_rope",
    "epr",
    "epr_draws",
    "exp_bounds",
    "find_beta_parms",
    "find_invgamma_parms",
    "jeffreys_label",
    "summarize_closed_form",
    "summarize_draws",
]
