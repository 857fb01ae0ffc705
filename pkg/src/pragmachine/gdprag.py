"""Gradient-descent pragmatic agents over a single context.

The listener is parameterized by an utterance encoder f1 (3 -> 3) and a
context encoder f2 (3|U| -> 3); the speaker by a target encoder g1
(|U| -> |U|) and a context encoder g2 (3|U| -> |U|). All encoders are
affine. Distributions are softmax readouts of encoder differences anchored
by the frozen log-lexicon:

    listener logits over m, per u:  f1(L_u)_m - f2(L_C)_m + log lex(u,m)
    speaker  logits over u, per m:  g1(L_m)_u - g2(L_C)_u + log lex(u,m) - cost(u)

Both parameter sets are re-initialized per context and updated jointly by
plain gradient steps on the chosen objective (ascent for least-effort,
descent for rate-distortion). Gradients are closed-form: the
distribution-level gradients chained through the softmax readouts and the
affine encoders; the finite-difference verifier is the arbiter.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .lexicon import ContextLexicon
from .rsa import ObjectiveReport, objective_report
from .validation import DataError, NumericalError

__all__ = [
    "GdListenerParams",
    "GdSpeakerParams",
    "GdConfig",
    "GdResult",
    "FdCheckResult",
    "init_gd_params",
    "gd_listener_dist",
    "gd_speaker_dist",
    "grad_le",
    "grad_rd",
    "run_gd",
    "finite_diff_check",
    "derive_context_seed",
]


@dataclass
class GdListenerParams:
    f1_w: np.ndarray
    f1_b: np.ndarray
    f2_w: np.ndarray
    f2_b: np.ndarray

    def blocks(self) -> list[tuple[str, np.ndarray]]:
        return [("f1_w", self.f1_w), ("f1_b", self.f1_b),
                ("f2_w", self.f2_w), ("f2_b", self.f2_b)]

    def copy(self) -> "GdListenerParams":
        return GdListenerParams(*(a.copy() for _, a in self.blocks()))

    def add_scaled(self, other: "GdListenerParams", scale: float) -> None:
        self.f1_w += scale * other.f1_w
        self.f1_b += scale * other.f1_b
        self.f2_w += scale * other.f2_w
        self.f2_b += scale * other.f2_b


@dataclass
class GdSpeakerParams:
    g1_w: np.ndarray
    g1_b: np.ndarray
    g2_w: np.ndarray
    g2_b: np.ndarray

    def blocks(self) -> list[tuple[str, np.ndarray]]:
        return [("g1_w", self.g1_w), ("g1_b", self.g1_b),
                ("g2_w", self.g2_w), ("g2_b", self.g2_b)]

    def copy(self) -> "GdSpeakerParams":
        return GdSpeakerParams(*(a.copy() for _, a in self.blocks()))

    def add_scaled(self, other: "GdSpeakerParams", scale: float) -> None:
        self.g1_w += scale * other.g1_w
        self.g1_b += scale * other.g1_b
        self.g2_w += scale * other.g2_w
        self.g2_b += scale * other.g2_b


@dataclass(frozen=True)
class GdConfig:
    """Per-context optimization settings (defaults are the tuned values:
    9 steps at learning rate 0.357 with alpha 1.17 on the least-effort
    objective)."""

    steps: int = 9
    lr: float = 0.357
    alpha: float = 1.17
    objective: Literal["le", "rd"] = "le"
    init_range: float = 0.01
    seed: int = 0
    use_cost: bool = True

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.lr <= 0:
            raise ValueError(f"learning rate must be positive, got {self.lr}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be nonnegative, got {self.alpha}")
        if self.objective not in ("le", "rd"):
            raise ValueError(f"objective must be 'le' or 'rd', got {self.objective!r}")


@dataclass
class GdResult:
    speaker: np.ndarray
    listener: np.ndarray
    trace: list[ObjectiveReport]
    initial_report: ObjectiveReport
    listener_params: GdListenerParams = field(repr=False, default=None)
    speaker_params: GdSpeakerParams = field(repr=False, default=None)


def init_gd_params(n_utterances: int, seed: int, init_range: float = 0.01) -> tuple[GdListenerParams, GdSpeakerParams]:
    """Seeded uniform(-init_range, init_range) weights, biases exactly zero."""
    if n_utterances < 2:
        raise DataError(f"need at least 2 utterances, got {n_utterances}")
    rng = np.random.default_rng(seed)
    u = n_utterances
    lp = GdListenerParams(
        f1_w=rng.uniform(-init_range, init_range, size=(3, 3)),
        f1_b=np.zeros(3),
        f2_w=rng.uniform(-init_range, init_range, size=(3, 3 * u)),
        f2_b=np.zeros(3),
    )
    sp = GdSpeakerParams(
        g1_w=rng.uniform(-init_range, init_range, size=(u, u)),
        g1_b=np.zeros(u),
        g2_w=rng.uniform(-init_range, init_range, size=(u, 3 * u)),
        g2_b=np.zeros(u),
    )
    return lp, sp


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    peak = logits.max(axis=1, keepdims=True)
    with np.errstate(under="ignore"):
        w = np.exp(logits - peak)
    return w / w.sum(axis=1, keepdims=True)


def _listener_logits(p: GdListenerParams, cl: ContextLexicon) -> np.ndarray:
    values, flat = cl.values, cl.flat
    enc_u = (p.f1_w @ values).T + p.f1_b  # (U, 3): row u is f1(L_u)
    enc_c = p.f2_w @ flat + p.f2_b  # (3,)
    return enc_u - enc_c[None, :] + cl.log_values.T


def _speaker_logits(p: GdSpeakerParams, cl: ContextLexicon, kappa: np.ndarray, use_cost: bool) -> np.ndarray:
    values, flat = cl.values, cl.flat
    enc_m = values @ p.g1_w.T + p.g1_b  # (3, U): row m is g1(L_m)
    enc_c = p.g2_w @ flat + p.g2_b  # (U,)
    logits = enc_m - enc_c[None, :] + cl.log_values
    if use_cost:
        logits = logits - np.asarray(kappa, dtype=float)[None, :]
    return logits


def gd_listener_dist(p: GdListenerParams, cl: ContextLexicon) -> np.ndarray:
    """Listener matrix (n_utterances, 3); zero parameters reduce to the
    literal listener under a uniform prior."""
    if p.f2_w.shape[1] != 3 * cl.n_utterances:
        raise DataError(
            f"listener context encoder expects {p.f2_w.shape[1]} inputs, "
            f"context lexicon provides {3 * cl.n_utterances}")
    return _softmax_rows(_listener_logits(p, cl))


def gd_speaker_dist(p: GdSpeakerParams, cl: ContextLexicon, kappa: np.ndarray, use_cost: bool = True) -> np.ndarray:
    """Speaker matrix (3, n_utterances); zero parameters reduce to the base
    speaker."""
    if p.g1_w.shape[0] != cl.n_utterances:
        raise DataError(
            f"speaker target encoder is for {p.g1_w.shape[0]} utterances, "
            f"context lexicon provides {cl.n_utterances}")
    return _softmax_rows(_speaker_logits(p, cl, kappa, use_cost))


def _chain_listener(weight: np.ndarray, listener: np.ndarray, cl: ContextLexicon) -> GdListenerParams:
    """Chain a distribution-level gradient sum_{m,u} weight[m,u] * dlog l(m|u)
    through the softmax readout and the affine encoders."""
    col_tot = weight.sum(axis=0)  # (U,)
    a = weight.T - col_tot[:, None] * listener  # (U, 3): d objective / d logits
    a_tot = a.sum(axis=0)
    return GdListenerParams(
        f1_w=a.T @ cl.values.T,
        f1_b=a_tot,
        f2_w=-np.outer(a_tot, cl.flat),
        f2_b=-a_tot,
    )


def _chain_speaker(coeff: np.ndarray, speaker: np.ndarray, cl: ContextLexicon) -> GdSpeakerParams:
    """Chain sum_{m,u} coeff[m,u] * ds(u|m) through the softmax readout and
    the affine encoders."""
    row_mean = (coeff * speaker).sum(axis=1, keepdims=True)
    r = speaker * (coeff - row_mean)  # (3, U): d objective / d logits
    r_tot = r.sum(axis=0)
    return GdSpeakerParams(
        g1_w=r.T @ cl.values,
        g1_b=r_tot,
        g2_w=-np.outer(r_tot, cl.flat),
        g2_b=-r_tot,
    )


def _utility_bracket(speaker, listener, kappa, alpha, use_cost):
    log_s = np.log(speaker)
    log_l = np.log(listener.T)  # (3, U)
    if use_cost:
        log_l = log_l - np.asarray(kappa, dtype=float)[None, :]
    return log_s, log_l


def grad_le(
    lp: GdListenerParams,
    sp: GdSpeakerParams,
    cl: ContextLexicon,
    prior: np.ndarray,
    kappa: np.ndarray,
    alpha: float,
    use_cost: bool = True,
) -> tuple[GdListenerParams, GdSpeakerParams]:
    """Exact gradients of the least-effort objective g_alpha with respect to
    the listener and speaker parameters (ascent direction)."""
    listener = gd_listener_dist(lp, cl)
    speaker = gd_speaker_dist(sp, cl, kappa, use_cost)
    prior = np.asarray(prior, dtype=float)
    log_s, log_util = _utility_bracket(speaker, listener, kappa, alpha, use_cost)

    w_listener = alpha * prior[:, None] * speaker
    d_lp = _chain_listener(w_listener, listener, cl)

    b_speaker = -prior[:, None] * (log_s - alpha * log_util + 1.0)
    d_sp = _chain_speaker(b_speaker, speaker, cl)
    _check_grads_finite(d_lp, d_sp)
    return d_lp, d_sp


def grad_rd(
    lp: GdListenerParams,
    sp: GdSpeakerParams,
    cl: ContextLexicon,
    prior: np.ndarray,
    kappa: np.ndarray,
    alpha: float,
    use_cost: bool = True,
) -> tuple[GdListenerParams, GdSpeakerParams]:
    """Exact gradients of the rate-distortion objective f_alpha (descent
    direction), the listener part being the negation of the least-effort
    listener gradient."""
    listener = gd_listener_dist(lp, cl)
    speaker = gd_speaker_dist(sp, cl, kappa, use_cost)
    prior = np.asarray(prior, dtype=float)
    log_s, log_util = _utility_bracket(speaker, listener, kappa, alpha, use_cost)

    w_listener = -alpha * prior[:, None] * speaker
    d_lp = _chain_listener(w_listener, listener, cl)

    marginal = prior @ speaker  # (U,)
    if np.any(marginal <= 0.0):
        raise NumericalError("speaker marginal has a zero entry")
    # The marginal correction sum_u S(u) * dlog S(u) equals d(sum_u S(u)) = 0,
    # so only the bracket term contributes.
    b_speaker = prior[:, None] * (log_s - np.log(marginal)[None, :] - alpha * log_util + 1.0)
    d_sp = _chain_speaker(b_speaker, speaker, cl)
    _check_grads_finite(d_lp, d_sp)
    return d_lp, d_sp


def _check_grads_finite(d_lp: GdListenerParams, d_sp: GdSpeakerParams) -> None:
    for name, arr in (*d_lp.blocks(), *d_sp.blocks()):
        if not np.all(np.isfinite(arr)):
            raise NumericalError(f"non-finite gradient in block {name}")


def run_gd(
    cl: ContextLexicon,
    prior: np.ndarray,
    kappa: np.ndarray,
    cfg: GdConfig,
    warm_params: tuple[GdListenerParams, GdSpeakerParams] | None = None,
) -> GdResult:
    """Optimize both parameter sets jointly for cfg.steps plain-gradient
    steps, recording the objective after every update."""
    if warm_params is not None:
        lp, sp = warm_params[0].copy(), warm_params[1].copy()
    else:
        lp, sp = init_gd_params(cl.n_utterances, cfg.seed, cfg.init_range)
    grad_fn = grad_le if cfg.objective == "le" else grad_rd
    direction = cfg.lr if cfg.objective == "le" else -cfg.lr

    listener = gd_listener_dist(lp, cl)
    speaker = gd_speaker_dist(sp, cl, kappa, cfg.use_cost)
    initial = objective_report(speaker, listener, prior, kappa, cfg.alpha, cfg.use_cost)
    trace: list[ObjectiveReport] = []
    for step in range(1, cfg.steps + 1):
        d_lp, d_sp = grad_fn(lp, sp, cl, prior, kappa, cfg.alpha, cfg.use_cost)
        lp.add_scaled(d_lp, direction)
        sp.add_scaled(d_sp, direction)
        listener = gd_listener_dist(lp, cl)
        speaker = gd_speaker_dist(sp, cl, kappa, cfg.use_cost)
        report = objective_report(speaker, listener, prior, kappa, cfg.alpha, cfg.use_cost)
        value = report.g_alpha if cfg.objective == "le" else report.f_alpha
        if not np.isfinite(value):
            raise NumericalError(f"non-finite objective at step {step}")
        trace.append(report)
    return GdResult(
        speaker=speaker,
        listener=listener,
        trace=trace,
        initial_report=initial,
        listener_params=lp,
        speaker_params=sp,
    )


@dataclass
class FdCheckResult:
    max_rel_error: float
    worst_block: str
    worst_index: tuple[int, ...]
    n_parameters: int

    def __str__(self) -> str:
        return (f"max relative error {self.max_rel_error:.3e} at "
                f"{self.worst_block}{list(self.worst_index)} over {self.n_parameters} parameters")


def _objective_value(objective, lp, sp, cl, prior, kappa, alpha, use_cost) -> float:
    listener = gd_listener_dist(lp, cl)
    speaker = gd_speaker_dist(sp, cl, kappa, use_cost)
    report = objective_report(speaker, listener, prior, kappa, alpha, use_cost)
    return report.g_alpha if objective == "le" else report.f_alpha


def finite_diff_check(
    objective: Literal["le", "rd"],
    lp: GdListenerParams,
    sp: GdSpeakerParams,
    cl: ContextLexicon,
    prior: np.ndarray,
    kappa: np.ndarray,
    alpha: float,
    use_cost: bool = True,
    h: float = 1e-5,
) -> FdCheckResult:
    """Compare analytic gradients against central finite differences for
    every parameter entry. Relative error uses max(1, |analytic|, |numeric|)
    as denominator so exactly-zero gradients (e.g. alpha = 0 listener) are
    judged on absolute scale."""
    if h <= 0:
        raise ValueError("finite-difference step h must be positive")
    grad_fn = grad_le if objective == "le" else grad_rd
    d_lp, d_sp = grad_fn(lp, sp, cl, prior, kappa, alpha, use_cost)
    analytic = dict((*d_lp.blocks(), *d_sp.blocks()))

    worst = FdCheckResult(0.0, "", (), 0)
    n_params = 0
    for name, arr in (*lp.blocks(), *sp.blocks()):
        grad_block = analytic[name]
        it = np.nditer(arr, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            orig = arr[idx]
            arr[idx] = orig + h
            f_plus = _objective_value(objective, lp, sp, cl, prior, kappa, alpha, use_cost)
            arr[idx] = orig - h
            f_minus = _objective_value(objective, lp, sp, cl, prior, kappa, alpha, use_cost)
            arr[idx] = orig
            numeric = (f_plus - f_minus) / (2.0 * h)
            a = float(grad_block[idx])
            rel = abs(a - numeric) / max(1.0, abs(a), abs(numeric))
            n_params += 1
            if rel > worst.max_rel_error:
                worst = FdCheckResult(rel, name, idx, 0)
            it.iternext()
    return FdCheckResult(worst.max_rel_error, worst.worst_block, worst.worst_index, n_params)


def derive_context_seed(global_seed: int, ctx) -> int:
    """Stable per-context seed: digest of the context's CIELUV coordinates
    mixed with the global seed."""
    hasher = hashlib.blake2b(digest_size=8)
    hasher.update(struct.pack("<q", global_seed))
    for c in ctx:
        hasher.update(struct.pack("<3d", c.l_star, c.u_star, c.v_star))
    return int.from_bytes(hasher.digest(), "little")
