"""The learned graded lexicon: score(utterance, color) in the open interval (0,1).

An utterance is looked up in a trainable embedding table; the embedding and
the 1/100-scaled CIELUV coordinates are concatenated and passed through one
hidden tanh layer to a scalar score, squashed by a sigmoid. The purely
affine alternative (no hidden layer) factors as f(utterance) + g(color),
which makes every listener ranking utterance-independent, so the hidden
layer is required for the model family to discriminate at all.

Outputs are clipped into the open interval so log-scores stay finite
everywhere; log-scores are computed with the stable log-sigmoid form.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .color import ColorLuv
from .validation import DataError

PARAMS_FORMAT_VERSION = "1"
_OPEN_LO = np.nextafter(0.0, 1.0)
_OPEN_HI = np.nextafter(1.0, 0.0)
_COLOR_SCALE = 100.0


@dataclass
class LexiconParams:
    """Trainable lexicon parameters.

    embeddings: (n_utterances, d); hidden_w: (h, d+3); hidden_b: (h,);
    score_w: (h,); score_b: scalar. vocab_hash ties the parameter file to
    the vocabulary it was trained against.
    """

    embeddings: np.ndarray
    hidden_w: np.ndarray
    hidden_b: np.ndarray
    score_w: np.ndarray
    score_b: float
    vocab_hash: str = ""

    @property
    def n_utterances(self) -> int:
        return self.embeddings.shape[0]

    @property
    def d(self) -> int:
        return self.embeddings.shape[1]

    @property
    def hidden(self) -> int:
        return self.hidden_w.shape[0]

    def copy(self) -> "LexiconParams":
        return LexiconParams(
            embeddings=self.embeddings.copy(),
            hidden_w=self.hidden_w.copy(),
            hidden_b=self.hidden_b.copy(),
            score_w=self.score_w.copy(),
            score_b=float(self.score_b),
            vocab_hash=self.vocab_hash,
        )

    def validate(self) -> None:
        n, d = self.embeddings.shape
        h = self.hidden_w.shape[0]
        if self.hidden_w.shape != (h, d + 3):
            raise DataError(
                f"hidden weights shape {self.hidden_w.shape} incompatible with d={d}")
        if self.hidden_b.shape != (h,) or self.score_w.shape != (h,):
            raise DataError("hidden bias / score weight shapes inconsistent")
        for name in ("embeddings", "hidden_w", "hidden_b", "score_w"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise DataError(f"non-finite values in {name}")
        if not np.isfinite(self.score_b):
            raise DataError("non-finite score bias")


@dataclass
class ContextLexicon:
    """Lexicon values over one 3-color context.

    values[i, u] = score(utterance u, color i); log_values holds the exact
    log-sigmoid scores. Slices: utterance_vector(u) is the 3-vector of a
    single utterance across the context, meaning_vector(i) the full-vocabulary
    vector of one color, and flat the color-major concatenation of the three
    meaning vectors.
    """

    values: np.ndarray
    log_values: np.ndarray

    @classmethod
    def from_values(cls, values: np.ndarray) -> "ContextLexicon":
        values = np.asarray(values, dtype=float)
        if np.any(values <= 0) or np.any(values >= 1):
            raise DataError("tabular context lexicon values must lie strictly in (0,1)")
        return cls(values=values, log_values=np.log(values))

    @property
    def n_utterances(self) -> int:
        return self.values.shape[1]

    def utterance_vector(self, u: int) -> np.ndarray:
        return self.values[:, u]

    def meaning_vector(self, i: int) -> np.ndarray:
        return self.values[i, :]

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)


def color_features(m: ColorLuv) -> np.ndarray:
    return np.array([m.l_star, m.u_star, m.v_star]) / _COLOR_SCALE


def score_logits(params: LexiconParams, colors: np.ndarray) -> np.ndarray:
    """Raw pre-sigmoid scores for every (color, utterance) pair.

    colors: (k, 3) scaled color features. Returns (k, n_utterances).
    """
    n, d = params.embeddings.shape
    k = colors.shape[0]
    # hidden = tanh(W [e_u ; m] + b), score = w . hidden + b_out
    emb_part = params.embeddings @ params.hidden_w[:, :d].T  # (n, h)
    col_part = colors @ params.hidden_w[:, d:].T  # (k, h)
    pre = emb_part[None, :, :] + col_part[:, None, :] + params.hidden_b
    hid = np.tanh(pre)
    return hid @ params.score_w + params.score_b  # (k, n)


def _squash(logits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    log_vals = -np.logaddexp(0.0, -logits)
    with np.errstate(under="ignore"):
        vals = np.exp(log_vals)
    return np.clip(vals, _OPEN_LO, _OPEN_HI), log_vals


def lexicon_score(params: LexiconParams, utterance_id: int, m: ColorLuv) -> float:
    """Graded truth value of one utterance applied to one color, in (0,1)."""
    if not 0 <= utterance_id < params.n_utterances:
        raise DataError(f"utterance id {utterance_id} outside vocabulary")
    logits = score_logits(params, color_features(m)[None, :])
    vals, _ = _squash(logits)
    return float(vals[0, utterance_id])


def context_lexicon(params: LexiconParams, ctx) -> ContextLexicon:
    """Score the full vocabulary against each of the 3 context colors."""
    feats = np.stack([color_features(c) for c in ctx])
    logits = score_logits(params, feats)
    vals, log_vals = _squash(logits)
    return ContextLexicon(values=vals, log_values=log_vals)


def lexicon_score_grad(params: LexiconParams, utterance_id: int, m: ColorLuv) -> LexiconParams:
    """Gradient of lexicon_score with respect to every parameter.

    Returned as a parameter-shaped container; rows of the embedding gradient
    other than utterance_id are zero.
    """
    d = params.d
    xi = np.concatenate([params.embeddings[utterance_id], color_features(m)])
    pre = params.hidden_w @ xi + params.hidden_b
    hid = np.tanh(pre)
    x = float(params.score_w @ hid + params.score_b)
    sig = 1.0 / (1.0 + np.exp(-x)) if x >= 0 else np.exp(x) / (1.0 + np.exp(x))
    dsig = sig * (1.0 - sig)

    d_score_w = dsig * hid
    d_score_b = dsig
    d_hid = dsig * params.score_w
    d_pre = d_hid * (1.0 - hid ** 2)
    d_hidden_w = np.outer(d_pre, xi)
    d_hidden_b = d_pre
    d_emb = np.zeros_like(params.embeddings)
    d_emb[utterance_id] = params.hidden_w[:, :d].T @ d_pre
    return LexiconParams(
        embeddings=d_emb,
        hidden_w=d_hidden_w,
        hidden_b=d_hidden_b,
        score_w=d_score_w,
        score_b=float(d_score_b),
        vocab_hash=params.vocab_hash,
    )


def init_embeddings(vocab, *, path: str | Path | None = None, seed: int | None = None, d: int = 50) -> np.ndarray:
    """Load per-utterance embeddings from a JSONL file, or draw seeded
    uniform(-0.1, 0.1) fallbacks when no file is given."""
    texts = [e.text for e in vocab.entries]
    if path is not None:
        table: dict[str, np.ndarray] = {}
        dim = None
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                    text, vec = rec["text"], np.asarray(rec["vec"], dtype=float)
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise DataError(f"malformed embedding record at line {lineno}") from exc
                if vec.ndim != 1:
                    raise DataError(f"embedding vector at line {lineno} is not 1-dimensional")
                if dim is None:
                    dim = vec.shape[0]
                elif vec.shape[0] != dim:
                    raise DataError(
                        f"dimension mismatch at line {lineno}: expected {dim}, got {vec.shape[0]}")
                table[text] = vec
        missing = [t for t in texts if t not in table]
        if missing:
            raise DataError("missing embedding for " + ", ".join(missing))
        return np.stack([table[t] for t in texts])
    if seed is None:
        raise DataError("init_embeddings needs either a file path or a seed")
    rng = np.random.default_rng(seed)
    return rng.uniform(-0.1, 0.1, size=(len(texts), d))


def init_lexicon_params(
    vocab,
    *,
    d: int = 50,
    hidden: int = 32,
    seed: int,
    embeddings: np.ndarray | None = None,
) -> LexiconParams:
    """Fresh parameters: given or seeded-random embeddings plus a seeded
    uniform(-0.1, 0.1) scoring network."""
    if embeddings is None:
        embeddings = init_embeddings(vocab, seed=seed, d=d)
    else:
        embeddings = np.asarray(embeddings, dtype=float)
        if embeddings.shape[0] != len(vocab.entries):
            raise DataError(
                f"embedding row count {embeddings.shape[0]} != vocabulary size {len(vocab.entries)}")
        d = embeddings.shape[1]
    rng = np.random.default_rng(None if seed is None else seed + 1)
    params = LexiconParams(
        embeddings=embeddings.copy(),
        hidden_w=rng.uniform(-0.1, 0.1, size=(hidden, d + 3)),
        hidden_b=rng.uniform(-0.1, 0.1, size=hidden),
        score_w=rng.uniform(-0.1, 0.1, size=hidden),
        score_b=float(rng.uniform(-0.1, 0.1)),
        vocab_hash=vocab.content_hash(),
    )
    params.validate()
    return params


def save_params(params: LexiconParams, path: str | Path) -> None:
    params.validate()
    doc = {
        "version": PARAMS_FORMAT_VERSION,
        "d": params.d,
        "hidden": params.hidden,
        "vocab_hash": params.vocab_hash,
        "embeddings": params.embeddings.tolist(),
        "hidden_weights": params.hidden_w.tolist(),
        "hidden_bias": params.hidden_b.tolist(),
        "score_weights": params.score_w.tolist(),
        "score_bias": params.score_b,
    }
    Path(path).write_text(json.dumps(doc) + "\n", encoding="utf-8")


def load_params(path: str | Path) -> LexiconParams:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"params file {path} is not valid JSON") from exc
    version = doc.get("version")
    if version != PARAMS_FORMAT_VERSION:
        raise DataError(
            f"params version {version!r} unsupported (expected {PARAMS_FORMAT_VERSION!r})")
    try:
        params = LexiconParams(
            embeddings=np.asarray(doc["embeddings"], dtype=float),
            hidden_w=np.asarray(doc["hidden_weights"], dtype=float),
            hidden_b=np.asarray(doc["hidden_bias"], dtype=float),
            score_w=np.asarray(doc["score_weights"], dtype=float),
            score_b=float(doc["score_bias"]),
            vocab_hash=str(doc.get("vocab_hash", "")),
        )
    except KeyError as exc:
        raise DataError(f"params file missing field {exc}") from exc
    if params.embeddings.ndim != 2 or params.embeddings.shape[1] != int(doc["d"]):
        raise DataError(
            f"embedding shape {params.embeddings.shape} does not match declared d={doc['d']}")
    params.validate()
    return params


def params_fingerprint(params: LexiconParams) -> str:
    hasher = hashlib.sha256()
    for arr in (params.embeddings, params.hidden_w, params.hidden_b, params.score_w):
        hasher.update(np.ascontiguousarray(arr, dtype=float).tobytes())
    hasher.update(np.float64(params.score_b).tobytes())
    return hasher.hexdigest()
