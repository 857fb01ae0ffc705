"""Vocabulary and round management plus the seeded synthetic game generator.

The human corpus is not shippable, so the generator stands in for it: a
ground-truth Gaussian lexicon over named-color prototypes drives a depth-1
pragmatic speaker/listener pair whose behavior the learned models must
recover. Contexts are condition-balanced by rejection sampling.
"""

from __future__ import annotations

import json
import logging
import math
import string
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from . import rsa
from .color import (
    ColorLuv,
    ColorRgb,
    Condition,
    DEFAULT_CONDITION_THRESHOLD,
    classify_condition,
    luv_distance,
    rgb_to_cieluv,
)
from .validation import DataError, parse_color

logger = logging.getLogger(__name__)

_PUNCT_TABLE = str.maketrans({ch: " " for ch in string.punctuation})


class Split(Enum):
    TRAIN = "train"
    VAL = "val"
    TEST = "test"


@dataclass(frozen=True)
class VocabEntry:
    id: int
    text: str
    log_freq: float


@dataclass
class Vocabulary:
    """Utterance inventory with log frequencies, ids dense in rank order."""

    entries: list[VocabEntry]
    variant_map: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.entries) < 2:
            raise DataError("vocabulary must contain at least 2 utterances")
        for i, e in enumerate(self.entries):
            if e.id != i:
                raise DataError("vocabulary ids must be dense 0..n-1 in order")
        if len({e.text for e in self.entries}) != len(self.entries):
            raise DataError("vocabulary texts must be unique")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def texts(self) -> list[str]:
        return [e.text for e in self.entries]

    def id_of(self, raw_text: str) -> int | None:
        text = normalize_utterance(raw_text, self.variant_map)
        return self._index().get(text)

    def _index(self) -> dict[str, int]:
        idx = getattr(self, "_text_index", None)
        if idx is None:
            idx = {e.text: e.id for e in self.entries}
            object.__setattr__(self, "_text_index", idx)
        return idx

    def content_hash(self) -> str:
        import hashlib

        hasher = hashlib.sha256()
        for e in self.entries:
            hasher.update(f"{e.text}\t{e.log_freq!r}\n".encode("utf-8"))
        return hasher.hexdigest()


@dataclass(frozen=True)
class CostTable:
    """Per-utterance production costs: negative log of the frequency-normalized distribution."""

    kappa: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.kappa)):
            raise DataError("costs must be finite")


@dataclass(frozen=True)
class Round:
    """One game record: context, target, utterance, and the listener's pick."""

    context: tuple[ColorLuv, ColorLuv, ColorLuv]
    target_index: int
    utterance_id: int
    listener_choice: int
    condition: Condition
    game_id: str
    split_tag: Split = Split.TRAIN
    round_index: int = 0
    context_rgb: tuple[ColorRgb, ColorRgb, ColorRgb] | None = None


def normalize_utterance(text: str, variant_map: dict[str, str] | None = None) -> str:
    """Lowercase, strip punctuation, collapse whitespace, apply variant map."""
    cleaned = " ".join(text.lower().translate(_PUNCT_TABLE).split())
    if variant_map:
        cleaned = variant_map.get(cleaned, cleaned)
    return cleaned


def load_variant_map(path: str | Path) -> dict[str, str]:
    """TSV of variant<TAB>canonical pairs, normalized on load."""
    mapping: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(f"malformed variant-map line {lineno}: expected 2 columns")
            variant = normalize_utterance(parts[0])
            canonical = normalize_utterance(parts[1])
            mapping[variant] = canonical
    return mapping


def _build_vocabulary(
    raw: list[tuple[str, float]],
    variant_map: dict[str, str] | None,
    top_k: int | None,
) -> Vocabulary:
    variant_map = dict(variant_map or {})
    seen: set[str] = set()
    merged: dict[str, float] = {}
    for lineno, (text, log_freq) in enumerate(raw, start=1):
        base = normalize_utterance(text)
        if not base:
            raise DataError(f"malformed vocabulary line {lineno}: empty utterance")
        if base in seen:
            raise DataError(f"duplicate normalized text {base!r} at line {lineno}")
        seen.add(base)
        canonical = variant_map.get(base, base)
        if canonical in merged:
            merged[canonical] = float(np.logaddexp(merged[canonical], log_freq))
        else:
            merged[canonical] = float(log_freq)
    if not merged:
        raise DataError("empty vocabulary")
    ordered = sorted(merged.items(), key=lambda kv: (-kv[1], kv[0]))
    if top_k is not None:
        ordered = ordered[:top_k]
    entries = [VocabEntry(i, text, lf) for i, (text, lf) in enumerate(ordered)]
    if len(entries) < 2:
        raise DataError("empty vocabulary" if not entries else
                        "vocabulary must contain at least 2 utterances")
    return Vocabulary(entries=entries, variant_map=variant_map)


def load_vocab(
    path: str | Path,
    *,
    top_k: int | None = None,
    variant_map: dict[str, str] | None = None,
) -> Vocabulary:
    """Read a TSV vocabulary (text<TAB>log_freq), normalize, merge variants,
    and keep the top_k most frequent entries."""
    raw: list[tuple[str, float]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(f"malformed vocabulary line {lineno}: expected 2 columns")
            try:
                log_freq = float(parts[1])
            except ValueError as exc:
                raise DataError(f"malformed vocabulary line {lineno}: bad log_freq") from exc
            if not math.isfinite(log_freq):
                raise DataError(f"malformed vocabulary line {lineno}: non-finite log_freq")
            raw.append((parts[0], log_freq))
    if not raw:
        raise DataError("empty vocabulary")
    return _build_vocabulary(raw, variant_map, top_k)


def save_vocab(vocab: Vocabulary, path: str | Path) -> None:
    lines = [f"{e.text}\t{e.log_freq!r}" for e in vocab.entries]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def cost_from_frequency(vocab: Vocabulary) -> CostTable:
    log_freq = np.array([e.log_freq for e in vocab.entries], dtype=float)
    return CostTable(kappa=-(log_freq - logsumexp(log_freq)))


# ---------------------------------------------------------------------------
# Corpus files (JSON Lines)
# ---------------------------------------------------------------------------


@dataclass
class LoadedCorpus:
    rounds: list[Round]
    dropped_oov: int
    condition_mismatches: int


_SPLIT_VALUES = {s.value: s for s in Split}
_CONDITION_VALUES = {c.value: c for c in Condition}


def load_corpus(path: str | Path, vocab: Vocabulary) -> LoadedCorpus:
    """Parse a JSONL corpus, dropping rounds whose utterance is out of
    vocabulary (count reported). Conditions are computed when absent; an
    ingested condition is kept and mismatches against the computed one are
    counted, not overwritten."""
    rounds: list[Round] = []
    dropped = 0
    mismatches = 0
    per_game_counter: dict[str, int] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for recno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"malformed corpus record {recno}: invalid JSON") from exc
            try:
                game_id = str(rec["game_id"])
                colors_raw = rec["colors"]
                target = int(rec["target"])
                utterance = str(rec["utterance"])
                choice = int(rec["choice"])
            except (KeyError, TypeError, ValueError) as exc:
                raise DataError(f"malformed corpus record {recno}: {exc}") from exc
            if not isinstance(colors_raw, list) or len(colors_raw) != 3:
                raise DataError(f"malformed corpus record {recno}: need exactly 3 colors")
            if target not in (0, 1, 2) or choice not in (0, 1, 2):
                raise DataError(f"malformed corpus record {recno}: index out of range")
            try:
                parsed = [parse_color(c) for c in colors_raw]
            except DataError as exc:
                raise DataError(f"malformed corpus record {recno}: {exc}") from exc
            luvs = tuple(p[0] for p in parsed)
            rgbs = tuple(p[1] for p in parsed)
            split_raw = rec.get("split")
            if split_raw is None:
                split = Split.TRAIN
            elif split_raw in _SPLIT_VALUES:
                split = _SPLIT_VALUES[split_raw]
            else:
                raise DataError(f"malformed corpus record {recno}: unknown split_tag {split_raw!r}")

            uid = vocab.id_of(utterance)
            if uid is None:
                dropped += 1
                continue

            computed = classify_condition(luvs, target)
            cond_raw = rec.get("condition")
            if cond_raw is None:
                condition = computed
            elif cond_raw in _CONDITION_VALUES:
                condition = _CONDITION_VALUES[cond_raw]
                if condition is not computed:
                    mismatches += 1
            else:
                raise DataError(f"malformed corpus record {recno}: unknown condition {cond_raw!r}")

            idx = per_game_counter.get(game_id, 0)
            per_game_counter[game_id] = idx + 1
            rounds.append(Round(
                context=luvs,
                target_index=target,
                utterance_id=uid,
                listener_choice=choice,
                condition=condition,
                game_id=game_id,
                split_tag=split,
                round_index=idx,
                context_rgb=rgbs if all(r is not None for r in rgbs) else None,
            ))
    if dropped:
        logger.info("load_corpus: dropped %d out-of-vocabulary rounds", dropped)
    if mismatches:
        logger.warning("load_corpus: %d ingested conditions disagree with computed ones", mismatches)
    return LoadedCorpus(rounds=rounds, dropped_oov=dropped, condition_mismatches=mismatches)


def _color_json(luv: ColorLuv, rgb: ColorRgb | None):
    if rgb is not None:
        return rgb.to_hex()
    return {"luv": [luv.l_star, luv.u_star, luv.v_star]}


def save_corpus(rounds: list[Round], vocab: Vocabulary, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in rounds:
            rgbs = r.context_rgb or (None, None, None)
            rec = {
                "game_id": r.game_id,
                "colors": [_color_json(c, g) for c, g in zip(r.context, rgbs)],
                "target": r.target_index,
                "utterance": vocab.entries[r.utterance_id].text,
                "choice": r.listener_choice,
                "split": r.split_tag.value,
                "condition": r.condition.value,
            }
            fh.write(json.dumps(rec) + "\n")


def split_corpus(
    rounds: list[Round],
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1),
    seed: int = 0,
) -> list[Round]:
    """Assign train/val/test tags by whole game so no game straddles splits.

    Game counts follow the ratios by largest remainder; assignment is a
    seeded shuffle of game ids in first-appearance order.
    """
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise DataError(f"split ratios must sum to 1, got {ratios}")
    if any(r < 0 for r in ratios):
        raise DataError("split ratios must be nonnegative")
    games: list[str] = []
    seen: set[str] = set()
    for r in rounds:
        if r.game_id not in seen:
            seen.add(r.game_id)
            games.append(r.game_id)
    needed = sum(1 for r in ratios if r > 0)
    if len(games) < needed:
        raise DataError(f"need at least {needed} games to honor ratios, got {len(games)}")

    order = np.random.default_rng(seed).permutation(len(games))
    shuffled = [games[i] for i in order]

    n = len(games)
    exact = [r * n for r in ratios]
    counts = [int(math.floor(x)) for x in exact]
    remainder = n - sum(counts)
    by_frac = sorted(range(3), key=lambda i: (-(exact[i] - counts[i]), i))
    for i in range(remainder):
        counts[by_frac[i % 3]] += 1

    assignment: dict[str, Split] = {}
    cursor = 0
    for split, count in zip((Split.TRAIN, Split.VAL, Split.TEST), counts):
        for gid in shuffled[cursor:cursor + count]:
            assignment[gid] = split
        cursor += count
    return [replace(r, split_tag=assignment[r.game_id]) for r in rounds]


def filter_split(rounds: list[Round], split: Split) -> list[Round]:
    return [r for r in rounds if r.split_tag is split]


# ---------------------------------------------------------------------------
# Synthetic generator
# ---------------------------------------------------------------------------

# Common color terms with their standard CSS hex values, ordered by rough
# frequency of use; prototypes are computed from these via rgb_to_cieluv.
DEFAULT_COLOR_TERMS: list[tuple[str, str]] = [
    ("blue", "#0000ff"), ("green", "#008000"), ("red", "#ff0000"),
    ("purple", "#800080"), ("pink", "#ffc0cb"), ("yellow", "#ffff00"),
    ("orange", "#ffa500"), ("gray", "#808080"), ("brown", "#a52a2a"),
    ("teal", "#008080"), ("olive", "#808000"), ("magenta", "#ff00ff"),
    ("cyan", "#00ffff"), ("lime", "#00ff00"), ("navy", "#000080"),
    ("maroon", "#800000"), ("salmon", "#fa8072"), ("gold", "#ffd700"),
    ("violet", "#ee82ee"), ("tan", "#d2b48c"), ("lavender", "#e6e6fa"),
    ("turquoise", "#40e0d0"), ("beige", "#f5f5dc"), ("coral", "#ff7f50"),
    ("indigo", "#4b0082"), ("khaki", "#f0e68c"), ("plum", "#dda0dd"),
    ("crimson", "#dc143c"), ("orchid", "#da70d6"), ("sienna", "#a0522d"),
]

DEFAULT_PROTOTYPE_SCALE = 30.0


def make_default_vocabulary(zipf_exponent: float = 1.0) -> Vocabulary:
    """Vocabulary over the default color terms with a Zipfian frequency
    profile assigned in list order (rank 1 = most frequent)."""
    raw = [(text, -zipf_exponent * math.log(rank))
           for rank, (text, _) in enumerate(DEFAULT_COLOR_TERMS, start=1)]
    return _build_vocabulary(raw, None, None)


def default_prototype_table(
    vocab: Vocabulary,
    scale: float = DEFAULT_PROTOTYPE_SCALE,
) -> dict[str, tuple[ColorLuv, float]]:
    protos = {normalize_utterance(name): rgb_to_cieluv(ColorRgb.from_hex(hexval))
              for name, hexval in DEFAULT_COLOR_TERMS}
    table: dict[str, tuple[ColorLuv, float]] = {}
    for e in vocab.entries:
        if e.text not in protos:
            raise DataError(f"no prototype for vocabulary entry {e.text!r}")
        table[e.text] = (protos[e.text], scale)
    return table


@dataclass
class SyntheticConfig:
    n_games: int
    rounds_per_game: int
    vocab: Vocabulary
    prototype_table: dict[str, tuple[ColorLuv, float]]
    speaker_alpha: float = 1.5
    noise_eps: float = 0.05
    seed: int = 0
    threshold: float = DEFAULT_CONDITION_THRESHOLD
    use_cost: bool = True
    max_retries: int = 10_000

    def __post_init__(self):
        if not 0.0 <= self.noise_eps <= 1.0:
            raise DataError("noise_eps must lie in [0, 1]")
        if self.n_games < 1 or self.rounds_per_game < 1:
            raise DataError("n_games and rounds_per_game must be positive")
        if self.speaker_alpha < 0:
            raise DataError("speaker_alpha must be nonnegative")


_CONDITIONS = (Condition.FAR, Condition.SPLIT, Condition.CLOSE)


def _sample_near(rng: np.random.Generator, target_rgb: np.ndarray, target_luv: ColorLuv,
                 threshold: float, cap: int, factor: float) -> tuple[ColorRgb, ColorLuv]:
    for _ in range(cap):
        cand = np.clip(target_rgb + rng.integers(-28, 29, size=3), 0, 255)
        rgb = ColorRgb(int(cand[0]), int(cand[1]), int(cand[2]))
        luv = rgb_to_cieluv(rgb)
        dist = luv_distance(target_luv, luv)
        if 0.0 < dist <= threshold * factor:
            return rgb, luv
    raise DataError("rejection sampling failed for condition: close/split near-distractor")


def _sample_far(rng: np.random.Generator, target_luv: ColorLuv,
                threshold: float, cap: int) -> tuple[ColorRgb, ColorLuv]:
    for _ in range(cap):
        cand = rng.integers(0, 256, size=3)
        rgb = ColorRgb(int(cand[0]), int(cand[1]), int(cand[2]))
        luv = rgb_to_cieluv(rgb)
        if luv_distance(target_luv, luv) >= threshold * 1.05:
            return rgb, luv
    raise DataError("rejection sampling failed for condition: far distractor")


def _sample_context(rng: np.random.Generator, condition: Condition, threshold: float, cap: int):
    # Close contexts keep both distractors within threshold/2 of the target so
    # all three colors are pairwise within the threshold.
    near_factor = 0.475 if condition is Condition.CLOSE else 0.95
    for _ in range(cap):
        t = rng.integers(0, 256, size=3)
        target_rgb = ColorRgb(int(t[0]), int(t[1]), int(t[2]))
        target_luv = rgb_to_cieluv(target_rgb)
        n_near = {Condition.FAR: 0, Condition.SPLIT: 1, Condition.CLOSE: 2}[condition]
        distractors = []
        try:
            for k in range(2):
                if k < n_near:
                    distractors.append(_sample_near(rng, t, target_luv, threshold, cap, near_factor))
                else:
                    distractors.append(_sample_far(rng, target_luv, threshold, cap))
        except DataError:
            continue
        target_index = int(rng.integers(0, 3))
        rgbs: list[ColorRgb] = [None, None, None]
        luvs: list[ColorLuv] = [None, None, None]
        rgbs[target_index], luvs[target_index] = target_rgb, target_luv
        slots = [i for i in range(3) if i != target_index]
        for slot, (rgb, luv) in zip(slots, distractors):
            rgbs[slot], luvs[slot] = rgb, luv
        ctx = tuple(luvs)
        if classify_condition(ctx, target_index, threshold) is condition:
            return tuple(rgbs), ctx, target_index
    raise DataError(f"rejection sampling failed for condition: {condition.value}")


def ground_truth_values(
    ctx: tuple[ColorLuv, ColorLuv, ColorLuv],
    vocab: Vocabulary,
    prototype_table: dict[str, tuple[ColorLuv, float]],
) -> np.ndarray:
    """Gaussian ground-truth lexicon value of each utterance for each context
    color: exp(-d(color, prototype)^2 / (2 scale^2))."""
    values = np.empty((3, len(vocab)))
    for u, entry in enumerate(vocab.entries):
        proto, scale = prototype_table[entry.text]
        for i, color in enumerate(ctx):
            d = luv_distance(color, proto)
            values[i, u] = math.exp(-(d * d) / (2.0 * scale * scale))
    return np.maximum(values, 1e-300)


def generate_synthetic(config: SyntheticConfig) -> list[Round]:
    """Simulate reference games: condition-balanced contexts, a depth-1
    pragmatic speaker (sampled, with uniform noise at rate noise_eps) and a
    depth-1 pragmatic listener (argmax choice) over the ground-truth lexicon."""
    missing = [e.text for e in config.vocab.entries if e.text not in config.prototype_table]
    if missing:
        raise DataError("prototype table missing entries: " + ", ".join(missing))
    kappa = cost_from_frequency(config.vocab).kappa
    if not config.use_cost:
        kappa = np.zeros_like(kappa)
    prior = rsa.uniform_prior(3)
    n_utt = len(config.vocab)
    rounds: list[Round] = []
    streams = np.random.SeedSequence(config.seed).spawn(config.n_games)
    for g in range(config.n_games):
        rng = np.random.default_rng(streams[g])
        game_id = f"g{g:05d}"
        for r_idx in range(config.rounds_per_game):
            condition = _CONDITIONS[int(rng.integers(0, 3))]
            rgbs, ctx, target_index = _sample_context(
                rng, condition, config.threshold, config.max_retries)
            values = ground_truth_values(ctx, config.vocab, config.prototype_table)
            l0 = rsa.literal_listener(values, prior)
            s1 = rsa.am_speaker_step(l0, kappa, config.speaker_alpha)
            l1 = rsa.am_listener_step(s1, prior)
            if rng.random() < config.noise_eps:
                utterance_id = int(rng.integers(0, n_utt))
            else:
                utterance_id = int(rng.choice(n_utt, p=s1[target_index]))
            choice = int(np.argmax(l1[utterance_id]))
            rounds.append(Round(
                context=ctx,
                target_index=target_index,
                utterance_id=utterance_id,
                listener_choice=choice,
                condition=condition,
                game_id=game_id,
                split_tag=Split.TRAIN,
                round_index=r_idx,
                context_rgb=rgbs,
            ))
    return rounds
