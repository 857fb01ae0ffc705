"""Listener/speaker evaluation against recorded rounds.

Per round the model's listener interprets the human utterance (error =
missing the true target, match = agreeing with the human choice) and the
model's speaker describes the true target (match = producing the human
utterance). Argmax with lowest-index tie-breaking is the fit metric; ties
are counted. Aggregation is by condition within each split, with overall
rows, and rates are null (None) for empty buckets rather than zero.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from .agents import _AgentBase
from .color import Condition
from .corpus import Round, Split

logger = logging.getLogger(__name__)

_CONDITION_ORDER = (Condition.FAR, Condition.SPLIT, Condition.CLOSE)
_SPLIT_ORDER = (Split.TRAIN, Split.VAL, Split.TEST)


@dataclass(frozen=True)
class PerRoundResult:
    game_id: str
    round_index: int
    condition: str
    model: str
    listener_err: int
    listener_match: int
    speaker_match: int


@dataclass(frozen=True)
class EvalRow:
    model: str
    split: str
    condition: str
    n_rounds: int
    listener_error_rate: float | None
    listener_match_rate: float | None
    speaker_match_rate: float | None


@dataclass
class EvalReport:
    rows: list[EvalRow] = field(default_factory=list)
    ties: int = 0

    def row(self, model: str, split: str, condition: str) -> EvalRow:
        for r in self.rows:
            if (r.model, r.split, r.condition) == (model, split, condition):
                return r
        raise KeyError(f"no row for ({model}, {split}, {condition})")

    def to_dict(self) -> dict:
        return {
            "ties": self.ties,
            "rows": [{
                "model": r.model,
                "split": r.split,
                "condition": r.condition,
                "n_rounds": r.n_rounds,
                "listener_error_rate": r.listener_error_rate,
                "listener_match_rate": r.listener_match_rate,
                "speaker_match_rate": r.speaker_match_rate,
            } for r in self.rows],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "EvalReport":
        rows = [EvalRow(
            model=r["model"],
            split=r["split"],
            condition=r["condition"],
            n_rounds=int(r["n_rounds"]),
            listener_error_rate=r["listener_error_rate"],
            listener_match_rate=r["listener_match_rate"],
            speaker_match_rate=r["speaker_match_rate"],
        ) for r in doc["rows"]]
        return cls(rows=rows, ties=int(doc.get("ties", 0)))


def _argmax_with_tie(row: np.ndarray) -> tuple[int, bool]:
    best = int(np.argmax(row))
    tie = bool(np.sum(row == row[best]) > 1)
    return best, tie


def _evaluate_chunk(model_name: str, agent: _AgentBase, rounds: list[Round]):
    results: list[PerRoundResult] = []
    ties = 0
    for r in rounds:
        speaker, listener = agent.matrices(r.context)
        guess, tie_l = _argmax_with_tie(listener[r.utterance_id])
        spoken, tie_s = _argmax_with_tie(speaker[r.target_index])
        ties += int(tie_l) + int(tie_s)
        results.append(PerRoundResult(
            game_id=r.game_id,
            round_index=r.round_index,
            condition=r.condition.value,
            model=model_name,
            listener_err=int(guess != r.target_index),
            listener_match=int(guess == r.listener_choice),
            speaker_match=int(spoken == r.utterance_id),
        ))
    return results, ties


def evaluate(
    model_name: str,
    agent: _AgentBase,
    rounds: list[Round],
    jobs: int = 1,
) -> tuple[EvalReport, list[PerRoundResult]]:
    """Evaluate one fitted agent over rounds. Results are independent of the
    worker count: rounds are processed independently and reduced in order."""
    agent._require_fit()
    if jobs == 1 or len(rounds) < 64:
        chunks = [_evaluate_chunk(model_name, agent, rounds)]
    else:
        n_chunks = max(1, min(len(rounds) // 32, 8 * max(jobs, 1) if jobs > 0 else 64))
        bounds = np.array_split(np.arange(len(rounds)), n_chunks)
        chunks = Parallel(n_jobs=jobs)(
            delayed(_evaluate_chunk)(model_name, agent, [rounds[i] for i in idx])
            for idx in bounds if len(idx))
    per_round: list[PerRoundResult] = []
    ties = 0
    for results, chunk_ties in chunks:
        per_round.extend(results)
        ties += chunk_ties
    if ties:
        logger.debug("evaluate(%s): %d argmax ties broken by lowest index", model_name, ties)

    report = EvalReport(rows=_aggregate(model_name, rounds, per_round), ties=ties)
    return report, per_round


def _rate(num: int, den: int) -> float | None:
    return None if den == 0 else num / den


def _bucket_rows(model: str, split_label: str, subset: list[PerRoundResult],
                 by_condition: dict[str, list[PerRoundResult]]) -> list[EvalRow]:
    rows = []
    for cond in _CONDITION_ORDER:
        sub = by_condition.get(cond.value, [])
        rows.append(EvalRow(
            model=model, split=split_label, condition=cond.value, n_rounds=len(sub),
            listener_error_rate=_rate(sum(r.listener_err for r in sub), len(sub)),
            listener_match_rate=_rate(sum(r.listener_match for r in sub), len(sub)),
            speaker_match_rate=_rate(sum(r.speaker_match for r in sub), len(sub)),
        ))
    rows.append(EvalRow(
        model=model, split=split_label, condition="overall", n_rounds=len(subset),
        listener_error_rate=_rate(sum(r.listener_err for r in subset), len(subset)),
        listener_match_rate=_rate(sum(r.listener_match for r in subset), len(subset)),
        speaker_match_rate=_rate(sum(r.speaker_match for r in subset), len(subset)),
    ))
    return rows


def _aggregate(model: str, rounds: list[Round], per_round: list[PerRoundResult]) -> list[EvalRow]:
    rows: list[EvalRow] = []
    splits_present = [s for s in _SPLIT_ORDER if any(r.split_tag is s for r in rounds)]
    for split in splits_present:
        subset = [pr for pr, r in zip(per_round, rounds) if r.split_tag is split]
        by_cond: dict[str, list[PerRoundResult]] = {}
        for pr in subset:
            by_cond.setdefault(pr.condition, []).append(pr)
        rows.extend(_bucket_rows(model, split.value, subset, by_cond))
    by_cond_all: dict[str, list[PerRoundResult]] = {}
    for pr in per_round:
        by_cond_all.setdefault(pr.condition, []).append(pr)
    rows.extend(_bucket_rows(model, "all", per_round, by_cond_all))
    return rows


def evaluate_models(
    agents: dict[str, _AgentBase],
    rounds: list[Round],
    jobs: int = 1,
) -> tuple[EvalReport, list[PerRoundResult]]:
    combined = EvalReport()
    per_round_all: list[PerRoundResult] = []
    for name, agent in agents.items():
        report, per_round = evaluate(name, agent, rounds, jobs=jobs)
        combined.rows.extend(report.rows)
        combined.ties += report.ties
        per_round_all.extend(per_round)
    return combined, per_round_all


CSV_COLUMNS = ["game_id", "round_idx", "condition", "model",
               "listener_err", "listener_match", "speaker_match"]


def emit_report(
    report: EvalReport,
    per_round: list[PerRoundResult],
    summary_path: str | Path,
    per_round_path: str | Path,
) -> None:
    Path(summary_path).write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    with open(per_round_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for pr in per_round:
            writer.writerow([pr.game_id, pr.round_index, pr.condition, pr.model,
                             pr.listener_err, pr.listener_match, pr.speaker_match])


def load_report(path: str | Path) -> EvalReport:
    return EvalReport.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def load_per_round_csv(path: str | Path) -> list[PerRoundResult]:
    rows: list[PerRoundResult] = []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            rows.append(PerRoundResult(
                game_id=rec["game_id"],
                round_index=int(rec["round_idx"]),
                condition=rec["condition"],
                model=rec["model"],
                listener_err=int(rec["listener_err"]),
                listener_match=int(rec["listener_match"]),
                speaker_match=int(rec["speaker_match"]),
            ))
    return rows
