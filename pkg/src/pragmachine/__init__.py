"""Pragmatic reference-game agents over learned color lexicons.

The model family enriches a literal speaker/listener pair either by the
classic alternating recursion or by a few gradient steps on the same
information-theoretic objective, computed per context. The package covers
the full pipeline: synthetic corpus generation, lexicon training, agent
inference, evaluation, a CLI, and a game server.
"""

from .agents import AmAgent, BaseAgent, GdAgent, build_agent
from .color import ColorLuv, ColorRgb, Condition, classify_condition, luv_distance, rgb_to_cieluv
from .corpus import (
    CostTable,
    Round,
    Split,
    SyntheticConfig,
    Vocabulary,
    cost_from_frequency,
    generate_synthetic,
    load_corpus,
    load_vocab,
    make_default_vocabulary,
    save_corpus,
    split_corpus,
)
from .gdprag import GdConfig, finite_diff_check, init_gd_params, run_gd
from .lexicon import ContextLexicon, LexiconParams, context_lexicon, lexicon_score, load_params, save_params
from .rsa import ObjectiveReport, RsaConfig, run_am
from .training import TrainConfig, train_lexicon_decontextualized, train_sl_supervised

__version__ = "0.1.0"

__all__ = [
    "AmAgent", "BaseAgent", "GdAgent", "build_agent",
    "ColorLuv", "ColorRgb", "Condition", "classify_condition", "luv_distance", "rgb_to_cieluv",
    "CostTable", "Round", "Split", "SyntheticConfig", "Vocabulary",
    "cost_from_frequency", "generate_synthetic", "load_corpus", "load_vocab",
    "make_default_vocabulary", "save_corpus", "split_corpus",
    "GdConfig", "finite_diff_check", "init_gd_params", "run_gd",
    "ContextLexicon", "LexiconParams", "context_lexicon", "lexicon_score",
    "load_params", "save_params",
    "ObjectiveReport", "RsaConfig", "run_am",
    "TrainConfig", "train_lexicon_decontextualized", "train_sl_supervised",
    "__version__",
]
