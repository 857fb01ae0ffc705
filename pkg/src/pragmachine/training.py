"""Lexicon learning: the decontextualized route and the supervised baseline.

Decontextualized training maximizes the likelihood of isolated
(target color, utterance) pairs under the context-free production model
p(u|m) proportional to lex(u,m) * exp(-cost(u)), normalized over the whole
vocabulary. The supervised baseline instead maximizes the likelihood of the
human listener choice under the depth-1 pragmatic listener built from the
current lexicon over each round's full context, backpropagating through the
recursion. Both use hand-derived gradients; an adaptive-moments update is
the default, with plain gradient steps retained for audits.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np
from scipy.special import logsumexp

from .corpus import CostTable, Round, Vocabulary
from .lexicon import LexiconParams, color_features
from .validation import NumericalError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    batch_size: int = 64
    epochs: int = 50
    patience: int = 5
    seed: int = 0
    optimizer: Literal["adam", "sgd"] = "adam"

    def __post_init__(self):
        if self.lr <= 0 or self.batch_size < 1 or self.epochs < 0 or self.patience < 1:
            raise ValueError(f"invalid training configuration: {self}")


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_ll: float
    val_ll: float


def save_history(history: list[EpochStats], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_ll", "val_ll"])
        for h in history:
            writer.writerow([h.epoch, repr(h.train_ll), repr(h.val_ll)])


# ---------------------------------------------------------------------------
# Shared forward/backward through the scoring network
# ---------------------------------------------------------------------------


def _forward(params: LexiconParams, colors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Logits (rows, n_utt) plus the tanh activations kept for backprop."""
    d = params.d
    emb_part = params.embeddings @ params.hidden_w[:, :d].T  # (U, h)
    col_part = colors @ params.hidden_w[:, d:].T  # (R, h)
    hid = np.tanh(emb_part[None, :, :] + col_part[:, None, :] + params.hidden_b)
    logits = hid @ params.score_w + params.score_b  # (R, U)
    return logits, hid


def _backward(
    params: LexiconParams,
    colors: np.ndarray,
    hid: np.ndarray,
    g_logits: np.ndarray,
) -> LexiconParams:
    """Accumulate d objective / d theta from d objective / d logits."""
    d = params.d
    d_score_w = np.einsum("ru,ruh->h", g_logits, hid)
    d_score_b = float(g_logits.sum())
    d_pre = (g_logits[:, :, None] * params.score_w) * (1.0 - hid ** 2)  # (R, U, h)
    d_hidden_w = np.empty_like(params.hidden_w)
    d_hidden_w[:, :d] = np.einsum("ruh,ud->hd", d_pre, params.embeddings)
    d_hidden_w[:, d:] = np.einsum("ruh,rc->hc", d_pre, colors)
    d_hidden_b = d_pre.sum(axis=(0, 1))
    d_emb = np.einsum("ruh,hd->ud", d_pre, params.hidden_w[:, :d])
    return LexiconParams(
        embeddings=d_emb,
        hidden_w=d_hidden_w,
        hidden_b=d_hidden_b,
        score_w=d_score_w,
        score_b=d_score_b,
        vocab_hash=params.vocab_hash,
    )


def _log_sigmoid(x: np.ndarray) -> np.ndarray:
    return -np.logaddexp(0.0, -x)


# ---------------------------------------------------------------------------
# Optimizer
# ---------------------------------------------------------------------------


class _Ascender:
    """Gradient-ascent update on a LexiconParams-shaped gradient."""

    _FIELDS = ("embeddings", "hidden_w", "hidden_b", "score_w")

    def __init__(self, params: LexiconParams, cfg: TrainConfig):
        self.cfg = cfg
        self.t = 0
        if cfg.optimizer == "adam":
            self.m = {f: np.zeros_like(getattr(params, f)) for f in self._FIELDS}
            self.v = {f: np.zeros_like(getattr(params, f)) for f in self._FIELDS}
            self.m_b = 0.0
            self.v_b = 0.0

    def step(self, params: LexiconParams, grads: LexiconParams) -> None:
        lr = self.cfg.lr
        if self.cfg.optimizer == "sgd":
            for f in self._FIELDS:
                getattr(params, f)[...] += lr * getattr(grads, f)
            params.score_b += lr * grads.score_b
            return
        beta1, beta2, eps = 0.9, 0.999, 1e-8
        self.t += 1
        corr1 = 1.0 - beta1 ** self.t
        corr2 = 1.0 - beta2 ** self.t
        for f in self._FIELDS:
            g = getattr(grads, f)
            self.m[f] = beta1 * self.m[f] + (1.0 - beta1) * g
            self.v[f] = beta2 * self.v[f] + (1.0 - beta2) * g * g
            getattr(params, f)[...] += lr * (self.m[f] / corr1) / (np.sqrt(self.v[f] / corr2) + eps)
        g = grads.score_b
        self.m_b = beta1 * self.m_b + (1.0 - beta1) * g
        self.v_b = beta2 * self.v_b + (1.0 - beta2) * g * g
        params.score_b += lr * (self.m_b / corr1) / (np.sqrt(self.v_b / corr2) + eps)


# ---------------------------------------------------------------------------
# Decontextualized training
# ---------------------------------------------------------------------------


def decontextualized_examples(rounds: list[Round]) -> tuple[np.ndarray, np.ndarray]:
    """Isolated (target color, utterance) pairs; contexts are discarded."""
    colors = np.stack([color_features(r.context[r.target_index]) for r in rounds])
    utt = np.array([r.utterance_id for r in rounds], dtype=int)
    return colors, utt


def decontextualized_log_likelihood(
    params: LexiconParams, colors: np.ndarray, utt: np.ndarray, kappa: np.ndarray
) -> float:
    """Mean log p(u*|m) under the context-free production model."""
    logits, _ = _forward(params, colors)
    q = _log_sigmoid(logits) - kappa[None, :]
    ll = q[np.arange(len(utt)), utt] - logsumexp(q, axis=1)
    return float(ll.mean())


def _decontextualized_batch_grad(
    params: LexiconParams, colors: np.ndarray, utt: np.ndarray, kappa: np.ndarray
) -> tuple[LexiconParams, float]:
    logits, hid = _forward(params, colors)
    q = _log_sigmoid(logits) - kappa[None, :]
    lse = logsumexp(q, axis=1)
    ll = q[np.arange(len(utt)), utt] - lse
    p = np.exp(q - lse[:, None])
    g_q = -p
    g_q[np.arange(len(utt)), utt] += 1.0
    g_q /= len(utt)
    # d log_sigmoid(x) / dx = sigmoid(-x)
    g_logits = g_q * _sigmoid(-logits)
    return _backward(params, colors, hid, g_logits), float(ll.mean())


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def train_lexicon_decontextualized(
    train_rounds: list[Round],
    val_rounds: list[Round],
    vocab: Vocabulary,
    costs: CostTable,
    p0: LexiconParams,
    cfg: TrainConfig,
) -> tuple[LexiconParams, list[EpochStats]]:
    """Mini-batch gradient ascent on the decontextualized likelihood with
    early stopping on validation likelihood; returns the best checkpoint."""
    if not train_rounds:
        raise ValueError("training requires at least one round")
    kappa = costs.kappa
    colors, utt = decontextualized_examples(train_rounds)
    if val_rounds:
        val_colors, val_utt = decontextualized_examples(val_rounds)
    else:
        val_colors, val_utt = colors, utt

    params = p0.copy()
    best = p0.copy()
    best_val = decontextualized_log_likelihood(params, val_colors, val_utt, kappa)
    history: list[EpochStats] = []
    optimizer = _Ascender(params, cfg)
    rng = np.random.default_rng(cfg.seed)
    stale = 0
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(utt))
        total = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            grads, batch_ll = _decontextualized_batch_grad(
                params, colors[batch], utt[batch], kappa)
            if not np.isfinite(batch_ll):
                raise NumericalError(
                    f"non-finite loss in epoch {epoch}, batch {start // cfg.batch_size}")
            optimizer.step(params, grads)
            total += batch_ll * len(batch)
        train_ll = total / len(order)
        val_ll = decontextualized_log_likelihood(params, val_colors, val_utt, kappa)
        history.append(EpochStats(epoch, train_ll, val_ll))
        if val_ll > best_val:
            best_val = val_ll
            best = params.copy()
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                logger.info("early stop at epoch %d (best val_ll %.5f)", epoch, best_val)
                break
    return best, history


# ---------------------------------------------------------------------------
# Supervised baseline: likelihood of human choices under the depth-1 listener
# ---------------------------------------------------------------------------


def _round_inputs(rounds: list[Round]) -> np.ndarray:
    return np.stack([np.stack([color_features(c) for c in r.context]) for r in rounds])


def _l1_forward(params: LexiconParams, ctx_colors: np.ndarray, kappa: np.ndarray, alpha: float):
    """Depth-1 listener for a batch of rounds.

    ctx_colors: (B, 3, 3) scaled color features. Returns the per-round
    intermediate distributions needed for backprop, all in (B, ...) shape.
    """
    b = ctx_colors.shape[0]
    flat_colors = ctx_colors.reshape(b * 3, 3)
    logits, hid = _forward(params, flat_colors)  # (3B, U)
    t = _log_sigmoid(logits).reshape(b, 3, -1)  # log lex per (round, meaning, utt)
    # literal listener over meanings (uniform prior cancels in the softmax)
    log_l0 = t - logsumexp(t, axis=1, keepdims=True)  # (B, 3, U): log l0(m|u)
    a = alpha * (log_l0 - kappa[None, None, :])
    log_s1 = a - logsumexp(a, axis=2, keepdims=True)  # (B, 3, U): log s1(u|m)
    log_l1 = log_s1 - logsumexp(log_s1, axis=1, keepdims=True)  # (B, 3, U): log l1(m|u)
    return logits, hid, t, log_l0, log_s1, log_l1


def sl_log_likelihood(
    params: LexiconParams, rounds: list[Round], kappa: np.ndarray, alpha: float
) -> float:
    """Mean log l1(chosen color | human utterance) over rounds."""
    if not rounds:
        return float("nan")
    ctx = _round_inputs(rounds)
    _, _, _, _, _, log_l1 = _l1_forward(params, ctx, kappa, alpha)
    idx = np.arange(len(rounds))
    choices = np.array([r.listener_choice for r in rounds])
    utts = np.array([r.utterance_id for r in rounds])
    return float(log_l1[idx, choices, utts].mean())


def _sl_batch_grad(
    params: LexiconParams,
    rounds: list[Round],
    ctx_colors: np.ndarray,
    kappa: np.ndarray,
    alpha: float,
) -> tuple[LexiconParams, float]:
    b = len(rounds)
    logits, hid, t, log_l0, log_s1, log_l1 = _l1_forward(params, ctx_colors, kappa, alpha)
    idx = np.arange(b)
    choices = np.array([r.listener_choice for r in rounds])
    utts = np.array([r.utterance_id for r in rounds])
    ll = float(log_l1[idx, choices, utts].mean())

    l1 = np.exp(log_l1)  # (B, 3, U)
    s1 = np.exp(log_s1)
    l0 = np.exp(log_l0)

    # d ll / d log_s1: softmax over meanings at the chosen utterance column
    g_log_s1 = np.zeros_like(log_s1)
    g_log_s1[idx, choices, utts] += 1.0
    g_log_s1[idx, :, utts] -= l1[idx, :, utts]
    # d log_s1 / d a: softmax over utterances per meaning
    g_a = g_log_s1 - g_log_s1.sum(axis=2, keepdims=True) * s1
    g_log_l0 = alpha * g_a
    # d log_l0 / d t: softmax over meanings per utterance
    g_t = g_log_l0 - g_log_l0.sum(axis=1, keepdims=True) * l0
    g_logits = (g_t.reshape(b * 3, -1) * _sigmoid(-logits)) / b
    grads = _backward(params, ctx_colors.reshape(b * 3, 3), hid, g_logits)
    return grads, ll


def train_sl_supervised(
    train_rounds: list[Round],
    val_rounds: list[Round],
    vocab: Vocabulary,
    costs: CostTable,
    p0: LexiconParams,
    alpha: float,
    cfg: TrainConfig,
) -> tuple[LexiconParams, list[EpochStats]]:
    """Contextualized supervised training: ascend the likelihood of human
    listener choices under the depth-1 pragmatic listener."""
    if not train_rounds:
        raise ValueError("training requires at least one round")
    kappa = costs.kappa
    ctx = _round_inputs(train_rounds)
    evaluate_val = val_rounds if val_rounds else train_rounds

    params = p0.copy()
    best = p0.copy()
    best_val = sl_log_likelihood(params, evaluate_val, kappa, alpha)
    history: list[EpochStats] = []
    optimizer = _Ascender(params, cfg)
    rng = np.random.default_rng(cfg.seed)
    stale = 0
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(train_rounds))
        total = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            batch_rounds = [train_rounds[i] for i in batch]
            grads, batch_ll = _sl_batch_grad(params, batch_rounds, ctx[batch], kappa, alpha)
            if not np.isfinite(batch_ll):
                raise NumericalError(
                    f"non-finite loss in epoch {epoch}, batch {start // cfg.batch_size}")
            optimizer.step(params, grads)
            total += batch_ll * len(batch)
        train_ll = total / len(order)
        val_ll = sl_log_likelihood(params, evaluate_val, kappa, alpha)
        history.append(EpochStats(epoch, train_ll, val_ll))
        if val_ll > best_val:
            best_val = val_ll
            best = params.copy()
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                logger.info("early stop at epoch %d (best val_ll %.5f)", epoch, best_val)
                break
    return best, history
