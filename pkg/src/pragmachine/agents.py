"""Estimator-style agent models: one class per model family.

Agents follow the scikit-learn surface: hyperparameters live in __init__
(so get_params/set_params/clone compose with the wider ecosystem), fit()
binds the frozen artifacts (vocabulary, costs, lexicon parameters), and
predict/predict_proba run listener inference over rounds. The pragmatic
enrichment of the gradient agent is recomputed per context from a fresh
seeded initialization, so prediction is stateless and order-independent.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import gdprag, rsa
from .corpus import CostTable, Round, Vocabulary
from .lexicon import LexiconParams, context_lexicon
from .validation import DataError, check_context

MODEL_NAMES = ("base", "am", "gd", "sl")


class _AgentBase(BaseEstimator):
    """Shared fit/predict plumbing; subclasses define the per-context
    speaker and listener matrices."""

    def fit(self, X=None, y=None, *, vocab: Vocabulary, costs: CostTable, lexicon_params: LexiconParams):
        if len(costs.kappa) != len(vocab):
            raise DataError("cost table size does not match vocabulary")
        if lexicon_params.n_utterances != len(vocab):
            raise DataError("lexicon parameter rows do not match vocabulary size")
        if lexicon_params.vocab_hash and lexicon_params.vocab_hash != vocab.content_hash():
            raise DataError("lexicon params were trained against a different vocabulary")
        self.vocab_ = vocab
        self.kappa_ = costs.kappa
        self.params_ = lexicon_params
        self.prior_ = rsa.uniform_prior(3)
        return self

    def _require_fit(self):
        if not hasattr(self, "params_"):
            raise NotFittedError(f"{type(self).__name__} must be fit with artifacts first")

    def matrices(self, ctx) -> tuple[np.ndarray, np.ndarray]:
        """(speaker, listener) matrices for one context."""
        raise NotImplementedError

    def listener_matrix(self, ctx) -> np.ndarray:
        return self.matrices(ctx)[1]

    def speaker_matrix(self, ctx) -> np.ndarray:
        return self.matrices(ctx)[0]

    def listener_proba(self, ctx, utterance_id: int) -> np.ndarray:
        return self.listener_matrix(ctx)[utterance_id]

    def speaker_proba(self, ctx, target_index: int) -> np.ndarray:
        return self.speaker_matrix(ctx)[target_index]

    def predict_proba(self, rounds: list[Round]) -> np.ndarray:
        """Listener distribution over the 3 colors given each round's
        human utterance."""
        self._require_fit()
        return np.stack([
            self.listener_proba(check_context(r.context), r.utterance_id) for r in rounds
        ])

    def predict(self, rounds: list[Round]) -> np.ndarray:
        """Listener argmax choice per round (lowest index on ties)."""
        return np.argmax(self.predict_proba(rounds), axis=1)

    def score(self, rounds: list[Round], y=None) -> float:
        """Communicative accuracy: fraction of rounds where the listener
        recovers the true target from the human utterance."""
        targets = np.array([r.target_index for r in rounds])
        return float(np.mean(self.predict(rounds) == targets))


class BaseAgent(_AgentBase):
    """Literal listener and cost-weighted base speaker, no enrichment."""

    def __init__(self, use_cost: bool = True):
        self.use_cost = use_cost

    def matrices(self, ctx):
        self._require_fit()
        cl = context_lexicon(self.params_, ctx)
        kappa = self.kappa_ if self.use_cost else np.zeros_like(self.kappa_)
        return rsa.base_speaker(cl.values, kappa), rsa.literal_listener(cl.values, self.prior_)


class AmAgent(_AgentBase):
    """Alternating-maximization enrichment at depth t (default depth 1 at
    alpha 1.17, the tuned configuration)."""

    def __init__(self, alpha: float = 1.17, t: int = 1, use_cost: bool = True):
        self.alpha = alpha
        self.t = t
        self.use_cost = use_cost

    def matrices(self, ctx):
        self._require_fit()
        cl = context_lexicon(self.params_, ctx)
        cfg = rsa.RsaConfig(alpha=self.alpha, t=self.t, use_cost=self.use_cost)
        res = rsa.run_am(cl.values, self.prior_, self.kappa_, cfg)
        return res.speaker, res.listener


class GdAgent(_AgentBase):
    """Gradient-based enrichment: per-context encoders re-initialized from a
    context-derived seed and optimized for a few plain gradient steps."""

    def __init__(
        self,
        alpha: float = 1.17,
        steps: int = 9,
        lr: float = 0.357,
        objective: str = "le",
        init_range: float = 0.01,
        seed: int = 0,
        use_cost: bool = True,
    ):
        self.alpha = alpha
        self.steps = steps
        self.lr = lr
        self.objective = objective
        self.init_range = init_range
        self.seed = seed
        self.use_cost = use_cost

    def _config_for(self, ctx) -> gdprag.GdConfig:
        return gdprag.GdConfig(
            steps=self.steps,
            lr=self.lr,
            alpha=self.alpha,
            objective=self.objective,
            init_range=self.init_range,
            seed=gdprag.derive_context_seed(self.seed, ctx),
            use_cost=self.use_cost,
        )

    def optimize(self, ctx) -> gdprag.GdResult:
        self._require_fit()
        cl = context_lexicon(self.params_, ctx)
        return gdprag.run_gd(cl, self.prior_, self.kappa_, self._config_for(ctx))

    def matrices(self, ctx):
        res = self.optimize(ctx)
        return res.speaker, res.listener


def build_agent(name: str, overrides: dict | None = None) -> _AgentBase:
    """Construct an unfitted agent for a model name; 'sl' is the
    alternating-maximization agent intended for the supervised lexicon."""
    overrides = dict(overrides or {})
    alpha = overrides.pop("alpha", 1.17)
    use_cost = overrides.pop("use_cost", True)
    if name == "base":
        _reject_extra(name, overrides, ())
        return BaseAgent(use_cost=use_cost)
    if name in ("am", "sl"):
        t = int(overrides.pop("t", 1))
        _reject_extra(name, overrides, ())
        return AmAgent(alpha=alpha, t=t, use_cost=use_cost)
    if name == "gd":
        agent = GdAgent(
            alpha=alpha,
            steps=int(overrides.pop("steps", 9)),
            lr=float(overrides.pop("lr", 0.357)),
            objective=str(overrides.pop("objective", "le")),
            seed=int(overrides.pop("seed", 0)),
            use_cost=use_cost,
        )
        _reject_extra(name, overrides, ())
        return agent
    raise DataError(f"unknown model {name!r}; expected one of {MODEL_NAMES}")


def _reject_extra(name: str, overrides: dict, allowed: tuple) -> None:
    extra = [k for k in overrides if k not in allowed]
    if extra:
        raise DataError(f"model {name!r} does not accept overrides: {', '.join(extra)}")
