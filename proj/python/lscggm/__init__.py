"""Latent-variable sparse conditional Gaussian graphical models."""

from ._core import (
    METHODS,
    fit,
    gamma_range,
    lambda_max,
    mu,
    pr_auc,
    sdp_text,
    simulate,
    xi,
)

__all__ = [
    "METHODS",
    "fit",
    "gamma_range",
    "lambda_max",
    "mu",
    "pr_auc",
    "sdp_text",
    "simulate",
    "xi",
]
