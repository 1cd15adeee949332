"""Answer scoring: normalization, exact match, and multi-answer recall.

Normalization follows the SQuAD-style recipe (lowercase, strip punctuation,
drop articles, collapse whitespace) applied identically to predictions and
gold answers. Punctuation is anything in the Unicode P* categories. Articles
are removed as whole tokens only, so "theatre" survives.
"""

from __future__ import annotations

import json
import sys
import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Optional

from .corpus import QAExample, is_multi_answerable

_ARTICLES = {"a", "an", "the"}
_ANSWER_DELIM = "answer:"

# Category lookups are cached per character; text is mostly ASCII so the
# cache stays tiny.
_punct_cache: dict[str, bool] = {}


def _is_punct(ch: str) -> bool:
    hit = _punct_cache.get(ch)
    if hit is None:
        hit = unicodedata.category(ch).startswith("P")
        _punct_cache[ch] = hit
    return hit


def normalize(text: str) -> str:
    """Normalize an answer string for comparison.

    Lowercase, remove punctuation, drop standalone articles, collapse
    whitespace runs, and trim. Idempotent.
    """
    lowered = text.lower()
    no_punct = "".join(ch for ch in lowered if not _is_punct(ch))
    return " ".join(tok for tok in no_punct.split() if tok not in _ARTICLES)


def exact_match(prediction: str, example: QAExample) -> bool:
    """True iff the prediction matches any answer of any annotator."""
    pred = normalize(prediction)
    return any(
        pred == normalize(answer)
        for answers in example.annotator_answers
        for answer in answers
    )


def split_answers(prediction: str) -> list[str]:
    """Split a multi-answer prediction on the literal "answer:" delimiter.

    Pieces are trimmed and empty pieces dropped. A prediction without the
    delimiter is returned whole, as a single answer.
    """
    pieces = [p.strip() for p in prediction.split(_ANSWER_DELIM)]
    return [p for p in pieces if p]


def multi_answer_recall_match(prediction: str, example: QAExample) -> Optional[bool]:
    """Recall-style match for the multi-answer protocol.

    Returns None (skip) for examples with fewer than two non-null
    annotations. Otherwise the prediction is split into an answer set and
    is correct iff it covers every answer of at least one non-null
    annotator. Set semantics: duplicates collapse, extra predictions do
    not penalize.
    """
    if not is_multi_answerable(example):
        return None
    predicted = {normalize(p) for p in split_answers(prediction)}
    for answers in example.annotator_answers:
        if not answers:
            continue
        gold = {normalize(a) for a in answers}
        if gold <= predicted:
            return True
    return False


class EvalMode(str, Enum):
    OPEN_DOMAIN_EM = "em"
    MULTI_ANSWER_RECALL = "recall"


@dataclass
class MatchOutcome:
    id: str
    prediction: str
    matched: bool
    matched_annotator: Optional[int] = None
    skipped: bool = False
    missing_prediction: bool = False

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "prediction": self.prediction,
            "matched": self.matched,
            "matched_annotator": self.matched_annotator,
            "skipped": self.skipped,
            "missing_prediction": self.missing_prediction,
        }


@dataclass
class EvalReport:
    mode: EvalMode
    per_example: list[MatchOutcome] = field(default_factory=list)
    evaluated: int = 0
    skipped: int = 0
    matched: int = 0

    @property
    def aggregate(self) -> float:
        """Percentage of evaluated examples that matched."""
        if self.evaluated == 0:
            return 0.0
        return 100.0 * self.matched / self.evaluated

    def summary_line(self) -> str:
        label = "EM" if self.mode is EvalMode.OPEN_DOMAIN_EM else "Recall"
        return f"{label}: {self.aggregate:.1f}"

    def to_json(self) -> dict:
        return {
            "mode": self.mode.value,
            "aggregate": self.aggregate,
            "evaluated": self.evaluated,
            "skipped": self.skipped,
            "matched": self.matched,
            "per_example": [m.to_json() for m in self.per_example],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EvalReport":
        report = cls(
            mode=EvalMode(obj["mode"]),
            evaluated=obj["evaluated"],
            skipped=obj["skipped"],
            matched=obj["matched"],
        )
        for entry in obj["per_example"]:
            report.per_example.append(
                MatchOutcome(
                    id=entry["id"],
                    prediction=entry["prediction"],
                    matched=entry["matched"],
                    matched_annotator=entry.get("matched_annotator"),
                    skipped=entry.get("skipped", False),
                    missing_prediction=entry.get("missing_prediction", False),
                )
            )
        return report


class DuplicatePredictionError(ValueError):
    pass


def load_predictions(path) -> dict[str, str]:
    """Read a predictions JSONL file ({"id", "prediction"} per line)."""
    predictions: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            pid = obj["id"]
            if pid in predictions:
                raise DuplicatePredictionError(
                    f"duplicate prediction id {pid!r} at line {lineno}"
                )
            predictions[pid] = obj["prediction"]
    return predictions


def _match_em(prediction: str, example: QAExample) -> MatchOutcome:
    pred = normalize(prediction)
    for idx, answers in enumerate(example.annotator_answers):
        for answer in answers:
            if pred == normalize(answer):
                return MatchOutcome(example.id, prediction, True, matched_annotator=idx)
    return MatchOutcome(example.id, prediction, False)


def _match_recall(prediction: str, example: QAExample) -> MatchOutcome:
    if not is_multi_answerable(example):
        return MatchOutcome(example.id, prediction, False, skipped=True)
    predicted = {normalize(p) for p in split_answers(prediction)}
    for idx, answers in enumerate(example.annotator_answers):
        if not answers:
            continue
        if {normalize(a) for a in answers} <= predicted:
            return MatchOutcome(example.id, prediction, True, matched_annotator=idx)
    return MatchOutcome(example.id, prediction, False)


def evaluate(
    predictions: Mapping[str, str],
    dataset: Iterable[QAExample],
    mode: EvalMode,
) -> EvalReport:
    """Score predictions against a dataset.

    A missing prediction counts as unmatched and is flagged on its outcome.
    In recall mode, examples that are not multi-answerable are skipped and
    excluded from the denominator.
    """
    report = EvalReport(mode=mode)
    seen: set[str] = set()
    for example in dataset:
        if example.id in seen:
            raise DuplicatePredictionError(f"duplicate example id {example.id!r}")
        seen.add(example.id)
        prediction = predictions.get(example.id)
        if prediction is None:
            outcome = MatchOutcome(example.id, "", False, missing_prediction=True)
            if mode is EvalMode.MULTI_ANSWER_RECALL and not is_multi_answerable(example):
                outcome.skipped = True
        elif mode is EvalMode.OPEN_DOMAIN_EM:
            outcome = _match_em(prediction, example)
        else:
            outcome = _match_recall(prediction, example)
        report.per_example.append(outcome)
        if outcome.skipped:
            report.skipped += 1
        else:
            report.evaluated += 1
            if outcome.matched:
                report.matched += 1
    return report


def write_report(report: EvalReport, path, manifest_digest: Optional[str] = None) -> None:
    obj = report.to_json()
    if manifest_digest is not None:
        obj["manifest_digest"] = manifest_digest
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(report.summary_line(), file=sys.stdout)
