"""QA dataset and raw-corpus ingestion, text-to-text targets, and splits.

The canonical QA record is one JSON object per line:

    {"id": str, "question": str, "answers": [[str, ...], ...]}

with one inner list per annotator (an empty list is a null annotation).
Datasets without multi-annotator structure are stored with a single
annotator, so the same record shape and metric path serves all three tasks.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Optional

MAX_TARGET_TOKENS = 5


class Dataset(str, Enum):
    NQ = "nq"
    WQ = "wq"
    TQA = "tqa"


class SchemaError(ValueError):
    """A line of an input file violates the canonical schema."""

    def __init__(self, path, lineno: int, fieldname: str, message: str):
        self.path = path
        self.lineno = lineno
        self.fieldname = fieldname
        super().__init__(f"{path}:{lineno}: field {fieldname!r}: {message}")


@dataclass(frozen=True)
class QAExample:
    id: str
    question: str
    annotator_answers: tuple[tuple[str, ...], ...]
    dataset: Dataset

    def non_null_annotations(self) -> list[tuple[str, ...]]:
        return [a for a in self.annotator_answers if a]


@dataclass(frozen=True)
class CorpusDocument:
    doc_id: str
    text: str


@dataclass(frozen=True)
class SentenceRecord:
    doc_id: str
    index: int
    text: str


def _require(condition: bool, path, lineno: int, fieldname: str, message: str) -> None:
    if not condition:
        raise SchemaError(path, lineno, fieldname, message)


def load_qa_dataset(path, dataset: Dataset) -> list[QAExample]:
    """Load a canonical QA JSONL file, preserving file order.

    Raises SchemaError naming the offending field and line on the first
    malformed record, and on duplicate ids.
    """
    examples: list[QAExample] = []
    seen_ids: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(path, lineno, "<json>", str(exc)) from exc
            _require(isinstance(obj, dict), path, lineno, "<record>", "not an object")
            for name in ("id", "question", "answers"):
                _require(name in obj, path, lineno, name, "missing")
            _require(isinstance(obj["id"], str) and obj["id"], path, lineno, "id", "must be a non-empty string")
            _require(isinstance(obj["question"], str) and obj["question"], path, lineno, "question", "must be a non-empty string")
            answers = obj["answers"]
            _require(isinstance(answers, list) and len(answers) >= 1, path, lineno, "answers", "must be a non-empty list of answer lists")
            for annotator in answers:
                _require(isinstance(annotator, list), path, lineno, "answers", "each annotation must be a list")
                for answer in annotator:
                    _require(isinstance(answer, str), path, lineno, "answers", "answers must be strings")
            _require(obj["id"] not in seen_ids, path, lineno, "id", f"duplicate id {obj['id']!r}")
            seen_ids.add(obj["id"])
            examples.append(
                QAExample(
                    id=obj["id"],
                    question=obj["question"],
                    annotator_answers=tuple(tuple(a) for a in answers),
                    dataset=dataset,
                )
            )
    return examples


def load_corpus(path) -> list[CorpusDocument]:
    """Load a corpus JSONL file ({"doc_id", "text"} per line)."""
    docs: list[CorpusDocument] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(path, lineno, "<json>", str(exc)) from exc
            for name in ("doc_id", "text"):
                _require(name in obj, path, lineno, name, "missing")
            _require(isinstance(obj["doc_id"], str) and obj["doc_id"], path, lineno, "doc_id", "must be a non-empty string")
            _require(isinstance(obj["text"], str) and obj["text"], path, lineno, "text", "must be a non-empty string")
            _require(obj["doc_id"] not in seen, path, lineno, "doc_id", f"duplicate doc_id {obj['doc_id']!r}")
            seen.add(obj["doc_id"])
            docs.append(CorpusDocument(doc_id=obj["doc_id"], text=obj["text"]))
    return docs


def make_holdout_split(
    examples: list[QAExample], fraction: float, seed: int
) -> tuple[list[QAExample], list[QAExample]]:
    """Deterministically partition examples into (train, validation).

    |validation| = round(fraction * |examples|). Both sides keep the input
    order of their members.
    """
    if not examples:
        raise ValueError("cannot split an empty example list")
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    n = len(examples)
    k = round(fraction * n)
    if k < 1:
        raise ValueError(f"fraction {fraction} of {n} examples selects no validation records")
    rng = random.Random(seed)
    validation_indices = set(rng.sample(range(n), k))
    train = [ex for i, ex in enumerate(examples) if i not in validation_indices]
    validation = [ex for i, ex in enumerate(examples) if i in validation_indices]
    return train, validation


def open_domain_target(example: QAExample) -> Optional[str]:
    """Single-answer training target: first answer of the first non-null
    annotator, or None when absent or longer than five whitespace tokens.
    """
    for answers in example.annotator_answers:
        if answers:
            first = answers[0]
            if len(first.split()) > MAX_TARGET_TOKENS:
                return None
            return first
    return None


def multi_answer_target(example: QAExample, annotator: int) -> str:
    """All-answer training target, each answer prefixed by "answer:"."""
    answers = example.annotator_answers[annotator]
    if not answers:
        raise ValueError(f"annotator {annotator} of example {example.id!r} has no answers")
    return " ".join(f"answer: {a}" for a in answers)


def is_multi_answerable(example: QAExample) -> bool:
    """True iff at least two annotators gave a non-empty answer list."""
    return sum(1 for a in example.annotator_answers if a) >= 2


# Guard list for the sentence splitter: a period ending one of these tokens
# does not terminate a sentence.
_ABBREVIATIONS = {
    "dr", "mr", "mrs", "ms", "prof", "rev", "gen", "sen", "rep", "st",
    "jr", "sr", "vs", "etc", "inc", "ltd", "co", "corp", "dept", "fig",
    "e.g", "i.e", "cf", "al", "approx", "est", "vol", "no", "pp",
}

_TERMINALS = ".!?"


def _token_before(text: str, i: int) -> str:
    """The whitespace-delimited token ending at position i (exclusive)."""
    j = i
    while j > 0 and not text[j - 1].isspace():
        j -= 1
    return text[j:i]


def sentence_split(doc: CorpusDocument) -> list[SentenceRecord]:
    """Split a document into sentences.

    A boundary is terminal punctuation (. ! ?) followed by whitespace and an
    uppercase letter, unless the period ends a known abbreviation. Sentences
    are stripped; joining them with single spaces preserves every
    non-whitespace character of the source in order.
    """
    text = doc.text
    boundaries: list[int] = []
    n = len(text)
    for i, ch in enumerate(text):
        if ch not in _TERMINALS:
            continue
        j = i + 1
        # Trailing closers stay attached to the sentence: e.g. `word.")`
        while j < n and text[j] in "\"')]":
            j += 1
        if j >= n or not text[j].isspace():
            continue
        k = j
        while k < n and text[k].isspace():
            k += 1
        if k >= n or not text[k].isupper():
            continue
        if ch == ".":
            token = _token_before(text, i).lower().lstrip("\"'([")
            if token in _ABBREVIATIONS:
                continue
        boundaries.append(j)
    sentences: list[SentenceRecord] = []
    start = 0
    for b in boundaries + [n]:
        piece = text[start:b].strip()
        if piece:
            sentences.append(SentenceRecord(doc.doc_id, len(sentences), piece))
        start = b
    return sentences
