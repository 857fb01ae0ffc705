"""Tabular pragmatic-agent machinery over a single reference context.

Conventions: a speaker matrix has shape (n_meanings, n_utterances) with
row m holding s(u|m); a listener matrix has shape (n_utterances, n_meanings)
with row u holding l(m|u). Every row is a probability distribution. Lexicon
value tables are (n_meanings, n_utterances), row i giving the graded truth
values of all utterances applied to context color i.

All entropies and informations are in nats. The least-effort objective
g_alpha = H(U|M) + alpha * E[log l(M|U) - cost(U)] is maximized; the
rate-distortion objective f_alpha = I(M;U) - alpha * E[same utility] is
minimized. The recursion's speaker/listener half-steps are coordinate
ascent on g_alpha, which the trace makes observable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .validation import DataError, check_probability_vector

__all__ = [
    "RsaConfig",
    "ObjectiveReport",
    "AmResult",
    "uniform_prior",
    "literal_listener",
    "base_speaker",
    "am_speaker_step",
    "am_listener_step",
    "run_am",
    "objective_le",
    "objective_rd",
    "objective_report",
]


def uniform_prior(n: int = 3) -> np.ndarray:
    return np.full(n, 1.0 / n)


@dataclass(frozen=True)
class RsaConfig:
    """Recursion settings: rationality alpha, depth t, cost usage."""

    alpha: float = 1.17
    t: int = 1
    use_cost: bool = True

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError(f"alpha must be nonnegative, got {self.alpha}")
        if self.t < 0:
            raise ValueError(f"t must be nonnegative, got {self.t}")


@dataclass(frozen=True)
class ObjectiveReport:
    """Information-theoretic summary of a (speaker, listener) pair."""

    h_u_given_m: float
    i_mu: float
    expected_utility: float
    g_alpha: float
    f_alpha: float
    alpha: float
    use_cost: bool

    def to_dict(self) -> dict:
        return {
            "h_u_given_m": self.h_u_given_m,
            "i_mu": self.i_mu,
            "expected_utility": self.expected_utility,
            "g_alpha": self.g_alpha,
            "f_alpha": self.f_alpha,
            "alpha": self.alpha,
            "use_cost": self.use_cost,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ObjectiveReport":
        return cls(**{k: d[k] for k in (
            "h_u_given_m", "i_mu", "expected_utility", "g_alpha", "f_alpha", "alpha", "use_cost")})


@dataclass
class AmResult:
    speaker: np.ndarray
    listener: np.ndarray
    trace: list[ObjectiveReport] = field(default_factory=list)


def _normalize_rows(weights: np.ndarray, empty_row: Literal["error", "prior"], prior: np.ndarray | None, what: str) -> np.ndarray:
    sums = weights.sum(axis=1, keepdims=True)
    empty = sums[:, 0] == 0.0
    if np.any(empty):
        if empty_row == "error":
            idx = int(np.flatnonzero(empty)[0])
            raise DataError(f"{what}: index {idx}")
        out = np.empty_like(weights)
        out[~empty] = weights[~empty] / sums[~empty]
        out[empty] = prior
        return out
    return weights / sums


def literal_listener(lexicon_values: np.ndarray, prior: np.ndarray) -> np.ndarray:
    """Listener at depth 0: l0(m|u) proportional to lexicon(u,m) * prior(m)."""
    values = np.asarray(lexicon_values, dtype=float)
    prior = check_probability_vector(np.asarray(prior, dtype=float))
    if np.any(values < 0):
        raise DataError("lexicon values must be nonnegative")
    weights = values.T * prior[None, :]
    return _normalize_rows(weights, "error", None, "utterance with empty extension")


def base_speaker(lexicon_values: np.ndarray, kappa: np.ndarray) -> np.ndarray:
    """Speaker at depth 0: s0(u|m) proportional to lexicon(u,m) * exp(-cost(u))."""
    values = np.asarray(lexicon_values, dtype=float)
    kappa = np.asarray(kappa, dtype=float)
    weights = values * np.exp(-kappa)[None, :]
    return _normalize_rows(weights, "error", None, "meaning with no describable utterance")


def am_speaker_step(listener: np.ndarray, kappa: np.ndarray, alpha: float) -> np.ndarray:
    """One pragmatic speaker half-step:
    s(u|m) proportional to exp(alpha * (log l(m|u) - cost(u))).

    Zero listener entries carry zero speaker weight (the alpha > 0 limit);
    at alpha = 0 every row is exactly uniform.
    """
    listener = np.asarray(listener, dtype=float)
    n_utt, n_meanings = listener.shape
    if alpha == 0.0:
        return np.full((n_meanings, n_utt), 1.0 / n_utt)
    with np.errstate(divide="ignore"):
        log_l = np.log(listener.T)  # (n_meanings, n_utt)
    logits = alpha * (log_l - np.asarray(kappa, dtype=float)[None, :])
    return _softmax_rows(logits, "meaning unreachable")


def am_listener_step(speaker: np.ndarray, prior: np.ndarray) -> np.ndarray:
    """One pragmatic listener half-step: l(m|u) proportional to s(u|m) * prior(m).

    An utterance produced by no meaning has an undefined posterior; such rows
    fall back to the prior.
    """
    speaker = np.asarray(speaker, dtype=float)
    prior = check_probability_vector(np.asarray(prior, dtype=float))
    weights = speaker.T * prior[None, :]
    return _normalize_rows(weights, "prior", prior, "")


def _softmax_rows(logits: np.ndarray, empty_msg: str) -> np.ndarray:
    peak = logits.max(axis=1, keepdims=True)
    dead = ~np.isfinite(peak[:, 0])
    if np.any(dead):
        raise DataError(f"{empty_msg}: index {int(np.flatnonzero(dead)[0])}")
    with np.errstate(under="ignore"):
        w = np.exp(logits - peak)
    return w / w.sum(axis=1, keepdims=True)


def run_am(
    lexicon_values: np.ndarray,
    prior: np.ndarray,
    kappa: np.ndarray,
    cfg: RsaConfig,
) -> AmResult:
    """Iterate the speaker/listener half-steps from the literal listener for
    cfg.t rounds, recording the objective after every half-step."""
    if cfg.t < 1:
        raise ValueError(f"run_am requires t >= 1, got {cfg.t}")
    kappa = np.asarray(kappa, dtype=float)
    effective_kappa = kappa if cfg.use_cost else np.zeros_like(kappa)
    listener = literal_listener(lexicon_values, prior)
    speaker = None
    trace: list[ObjectiveReport] = []
    for _ in range(cfg.t):
        speaker = am_speaker_step(listener, effective_kappa, cfg.alpha)
        trace.append(objective_report(speaker, listener, prior, kappa, cfg.alpha, cfg.use_cost))
        listener = am_listener_step(speaker, prior)
        trace.append(objective_report(speaker, listener, prior, kappa, cfg.alpha, cfg.use_cost))
    return AmResult(speaker=speaker, listener=listener, trace=trace)


def objective_report(
    speaker: np.ndarray,
    listener: np.ndarray,
    prior: np.ndarray,
    kappa: np.ndarray,
    alpha: float,
    use_cost: bool = True,
) -> ObjectiveReport:
    """Compute H(U|M), I(M;U), expected utility, and both objective values.

    Uses the conventions 0*log(0) = 0 and expected utility -inf when the
    speaker assigns positive mass where the listener is exactly zero.
    """
    s = np.asarray(speaker, dtype=float)
    l = np.asarray(listener, dtype=float)
    prior = np.asarray(prior, dtype=float)
    kappa = np.asarray(kappa, dtype=float)
    n_meanings, n_utt = s.shape
    if l.shape != (n_utt, n_meanings):
        raise DataError(
            f"listener shape {l.shape} incompatible with speaker shape {s.shape}")
    if prior.shape != (n_meanings,) or kappa.shape != (n_utt,):
        raise DataError("prior/cost shapes incompatible with speaker matrix")

    joint = prior[:, None] * s  # P(m) s(u|m)
    support = joint > 0.0

    with np.errstate(divide="ignore"):
        log_s = np.log(s)
        log_marginal = np.log(prior @ s)
        log_l = np.log(l.T)  # (n_meanings, n_utt)

    log_s_safe = np.where(support, log_s, 0.0)
    h = -float(np.sum(joint * log_s_safe))
    i = float(np.sum(joint * np.where(support, log_s - log_marginal[None, :], 0.0)))

    utility = log_l - (kappa[None, :] if use_cost else 0.0)
    if np.any(support & np.isneginf(utility)):
        eu = float("-inf")
    else:
        eu = float(np.sum(joint * np.where(support, utility, 0.0)))

    return ObjectiveReport(
        h_u_given_m=h,
        i_mu=i,
        expected_utility=eu,
        g_alpha=h + alpha * eu,
        f_alpha=i - alpha * eu,
        alpha=alpha,
        use_cost=use_cost,
    )


def objective_le(speaker, listener, prior, kappa, alpha, use_cost=True) -> ObjectiveReport:
    """Least-effort objective g_alpha (maximized); returns the full report."""
    return objective_report(speaker, listener, prior, kappa, alpha, use_cost)


def objective_rd(speaker, listener, prior, kappa, alpha, use_cost=True) -> ObjectiveReport:
    """Rate-distortion objective f_alpha (minimized); returns the full report."""
    return objective_report(speaker, listener, prior, kappa, alpha, use_cost)
