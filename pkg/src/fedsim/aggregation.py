"""Staleness-aware aggregation weights and their control-parameter updates.

Server side: an uploaded local model is merged into the global model with
weight alpha computed from staleness through adjustable controls
(lambda, sigma, iota); the controls follow the loss downhill using a
closed-form chain rule whose global-gradient term is approximated by
(w_upload - w_base) / (eta * local_epochs), so no extra communication is
needed.

Device side: a freshly fetched global model is blended into the
in-progress local model with weight beta governed by (gamma, upsilon),
updated analogously from the local minibatch gradient.

All functions are pure; control structs are replaced, never mutated.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidArgumentError

ALPHA_MIN = 1e-3
ALPHA_MAX = 1.0 - 1e-3
BETA_MAX = 1.0 - 1e-3
SIGMA_FLOOR = 1e-6

CORRECTED_LN = "corrected-ln"
PAPER_LITERAL = "paper-literal"

KEEP = "keep"
DISCARD = "discard"


@dataclass(frozen=True)
class ServerControls:
    lam: float = 1.0
    sigma: float = 1.0
    iota: float = 0.0
    eta_lambda: float = 1e-4
    eta_sigma: float = 1e-4
    eta_iota: float = 1e-4
    mu_alpha: float = 1.0

    def __post_init__(self):
        if min(self.eta_lambda, self.eta_sigma, self.eta_iota) <= 0 or self.mu_alpha <= 0:
            raise InvalidArgumentError("learning rates and mu_alpha must be positive")
        if self.sigma < SIGMA_FLOOR:
            object.__setattr__(self, "sigma", SIGMA_FLOOR)


@dataclass(frozen=True)
class DeviceControls:
    gamma: float = 1.0
    upsilon: float = 0.5
    eta_gamma: float = 1e-4
    eta_upsilon: float = 1e-4
    mu_beta: float = 1.0

    def __post_init__(self):
        if min(self.eta_gamma, self.eta_upsilon) <= 0 or self.mu_beta <= 0:
            raise InvalidArgumentError("learning rates and mu_beta must be positive")


@dataclass(frozen=True)
class AggregationContext:
    """Inputs for one server-side control update.

    o is the device's current base version, o_prime the base version of
    its previous accepted aggregation. w_o / w_o_minus_1 are the global
    models at versions o and o-1; w_o_i is the current upload and
    w_o_prime_i the previous one.
    """

    t: int
    o: int
    o_prime: int
    w_t: np.ndarray
    w_o: np.ndarray
    w_o_i: np.ndarray
    w_o_prime_i: np.ndarray
    w_o_minus_1: np.ndarray
    eta_i: float
    local_epochs: int


def _squash(mu, value):
    """mu*value / (1 + mu*value), the monotone map onto (-inf, 1).

    Below the pole (1 + mu*value <= 0) the monotone branch runs to -inf,
    so callers clamp to their lower bound.
    """
    scaled = mu * value
    denom = 1.0 + scaled
    if denom <= 0.0:
        return -math.inf
    return scaled / denom


def _alpha_from_staleness(sc, version_scale, staleness):
    xi = sc.lam / (math.sqrt(version_scale) * staleness**sc.sigma) + sc.iota
    return float(min(max(_squash(sc.mu_alpha, xi), ALPHA_MIN), ALPHA_MAX))


def alpha_weight(sc, t, o):
    """Server-side aggregation weight for an upload with base version o
    at global version t. Clamped to [1e-3, 1-1e-3]."""
    if not t >= o >= 1:
        raise InvalidArgumentError(f"require t >= o >= 1, got t={t}, o={o}")
    return _alpha_from_staleness(sc, t, t - o + 1)


def _alpha_partials_from_staleness(sc, version_scale, staleness, mode=CORRECTED_LN):
    base = 1.0 / (math.sqrt(version_scale) * staleness**sc.sigma)
    xi = sc.lam * base + sc.iota
    denom = 1.0 + sc.mu_alpha * xi
    if denom <= 0.0:
        return 0.0, 0.0, 0.0
    common = sc.mu_alpha / denom**2
    d_lam = common * base
    if mode == CORRECTED_LN:
        d_sigma = -common * sc.lam * math.log(staleness) * base
    elif mode == PAPER_LITERAL:
        d_sigma = -common * math.log(sc.sigma) * base
    else:
        raise InvalidArgumentError(f"unknown sigma gradient mode: {mode!r}")
    return d_lam, d_sigma, common


def alpha_partials(sc, t, o, mode=CORRECTED_LN):
    """(d alpha/d lambda, d alpha/d sigma, d alpha/d iota) of the
    unclamped weight formula at (t, o).

    In corrected-ln mode the sigma partial is the exact derivative; in
    paper-literal mode it reproduces the printed ln(sigma) factor
    instead. At clamp boundaries the true derivative of alpha_weight is
    zero; these partials describe the interior formula.
    """
    if not t >= o >= 1:
        raise InvalidArgumentError(f"require t >= o >= 1, got t={t}, o={o}")
    return _alpha_partials_from_staleness(sc, t, t - o + 1, mode)


def server_merge(w_t, w_o_i, alpha):
    """(1 - alpha) * w_t + alpha * w_o_i elementwise."""
    if w_t.shape != w_o_i.shape:
        raise InvalidArgumentError("model dimension mismatch in server_merge")
    if not 0.0 <= alpha <= 1.0:
        raise InvalidArgumentError(f"alpha must be in [0, 1], got {alpha}")
    return (1.0 - alpha) * w_t + alpha * w_o_i


def check_staleness(t, o, tau):
    """DISCARD an upload whose staleness t - o + 1 strictly exceeds tau."""
    if t < o:
        raise InvalidArgumentError(f"require t >= o, got t={t}, o={o}")
    return DISCARD if t - o + 1 > tau else KEEP


def _server_control_step(
    sc,
    prev_round,
    prev_staleness,
    w_base,
    w_upload,
    w_prev_premerge,
    w_prev_upload,
    eta_i,
    local_epochs,
    mode=CORRECTED_LN,
):
    """One gradient step on (lambda, sigma, iota).

    prev_round / prev_staleness locate the device's previous accepted
    aggregation, where the partials of alpha are evaluated; the loss
    direction comes from the surrogate global gradient
    (w_upload - w_base) / (eta * epochs) dotted with the model shift the
    previous aggregation applied (w_prev_upload - w_prev_premerge).
    """
    if prev_round < 1 or prev_staleness < 1:
        return sc
    inner = float(np.dot(w_upload - w_base, w_prev_upload - w_prev_premerge)) / (
        eta_i * local_epochs
    )
    d_lam, d_sigma, d_iota = _alpha_partials_from_staleness(
        sc, prev_round, prev_staleness, mode
    )
    return replace(
        sc,
        lam=sc.lam - sc.eta_lambda * inner * d_lam,
        sigma=max(sc.sigma - sc.eta_sigma * inner * d_sigma, SIGMA_FLOOR),
        iota=sc.iota - sc.eta_iota * inner * d_iota,
    )


def update_server_controls(sc, ctx, mode=CORRECTED_LN):
    """Move the server controls one gradient step; returns sc unchanged
    (skip signal) when the recursion's base case is undefined
    (ctx.o < 2 or o_prime not strictly older than o)."""
    if ctx.o < 2 or ctx.o_prime >= ctx.o:
        return sc
    for w in (ctx.w_o, ctx.w_o_i, ctx.w_o_prime_i, ctx.w_o_minus_1):
        if w.shape != ctx.w_t.shape:
            raise InvalidArgumentError("model dimension mismatch in update_server_controls")
    return _server_control_step(
        sc,
        prev_round=ctx.o - 1,
        prev_staleness=ctx.o - ctx.o_prime,
        w_base=ctx.w_o,
        w_upload=ctx.w_o_i,
        w_prev_premerge=ctx.w_o_minus_1,
        w_prev_upload=ctx.w_o_prime_i,
        eta_i=ctx.eta_i,
        local_epochs=ctx.local_epochs,
        mode=mode,
    )


def _beta_from_staleness(dc, version_scale, staleness):
    phi = (dc.gamma / math.sqrt(version_scale)) * (1.0 - dc.upsilon / math.sqrt(staleness))
    if phi < 0.0:
        return 0.0  # negative mix would be extrapolation; merge becomes a no-op
    return float(min(max(_squash(dc.mu_beta, phi), 0.0), BETA_MAX))


def beta_weight(dc, g, o):
    """Device-side weight of a fresh global model of version g merged
    into a local model based on version o. Clamped to [0, 1-1e-3]."""
    if not g >= o >= 1:
        raise InvalidArgumentError(f"require g >= o >= 1, got g={g}, o={o}")
    return _beta_from_staleness(dc, g, g - o + 1)


def _beta_partials_from_staleness(dc, version_scale, staleness):
    root_g = math.sqrt(version_scale)
    root_s = math.sqrt(staleness)
    phi = (dc.gamma / root_g) * (1.0 - dc.upsilon / root_s)
    denom = 1.0 + dc.mu_beta * phi
    if denom <= 0.0:
        return 0.0, 0.0
    common = dc.mu_beta / denom**2
    d_gamma = common * (1.0 - dc.upsilon / root_s) / root_g
    d_upsilon = -common * dc.gamma / (root_g * root_s)
    return d_gamma, d_upsilon


def beta_partials(dc, g, o):
    """(d beta/d gamma, d beta/d upsilon) of the unclamped weight formula."""
    if not g >= o >= 1:
        raise InvalidArgumentError(f"require g >= o >= 1, got g={g}, o={o}")
    return _beta_partials_from_staleness(dc, g, g - o + 1)


def device_merge(w_local, w_fresh, beta):
    """(1 - beta) * w_local + beta * w_fresh elementwise."""
    if w_local.shape != w_fresh.shape:
        raise InvalidArgumentError("model dimension mismatch in device_merge")
    if not 0.0 <= beta <= 1.0:
        raise InvalidArgumentError(f"beta must be in [0, 1], got {beta}")
    return (1.0 - beta) * w_local + beta * w_fresh


def _device_control_step(dc, version_scale, staleness, w_fresh, w_local_after, local_grad):
    inner = float(np.dot(w_fresh - w_local_after, local_grad))
    d_gamma, d_upsilon = _beta_partials_from_staleness(dc, version_scale, staleness)
    return replace(
        dc,
        gamma=dc.gamma - dc.eta_gamma * inner * d_gamma,
        upsilon=dc.upsilon - dc.eta_upsilon * inner * d_upsilon,
    )


def update_device_controls(dc, g, o, w_fresh, w_local_after, local_grad):
    """Move the device controls one gradient step after a merge.

    local_grad is the minibatch gradient at the pre-merge local model;
    w_local_after is the merged model.
    """
    if not g >= o >= 1:
        raise InvalidArgumentError(f"require g >= o >= 1, got g={g}, o={o}")
    if not (w_fresh.shape == w_local_after.shape == local_grad.shape):
        raise InvalidArgumentError("model dimension mismatch in update_device_controls")
    return _device_control_step(dc, g, g - o + 1, w_fresh, w_local_after, local_grad)
