"""Salient span mining and masking (the SSM objective).

A sentence is worth keeping when it contains at least one salient span: a
named entity or a date. The built-in tagger is rule-based and deterministic;
any callable mapping text to spans can replace it, including a lookup over a
pre-annotated span file.

Masking picks exactly one span per sentence, replaces it with sentinel 0,
and emits the span's own tokens as the target, so the pair format is
identical to span corruption's single-span case.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Iterator, Optional

from .corpus import CorpusDocument, SentenceRecord, sentence_split
from .corruption import CorruptedPair
from .rng import philox
from .tokenizer import Vocab


class SpanKind(str, Enum):
    ENTITY = "Entity"
    DATE = "Date"


@dataclass(frozen=True)
class SalientSpan:
    start: int
    end: int
    kind: SpanKind

    def __post_init__(self):
        if not 0 <= self.start < self.end:
            raise ValueError(f"bad span offsets [{self.start}, {self.end})")


@dataclass
class TaggedSentence:
    sentence: SentenceRecord
    spans: list[SalientSpan]

    def __post_init__(self):
        if not self.spans:
            raise ValueError("a tagged sentence needs at least one span")


Tagger = Callable[[str], list[SalientSpan]]


class TaggerError(RuntimeError):
    """A tagger plugin failed; carries the sentence it choked on."""

    def __init__(self, sentence: str, cause: Exception):
        self.sentence = sentence
        super().__init__(f"tagger failed on {sentence!r}: {cause}")


class AlignmentError(ValueError):
    pass


_MONTHS = (
    "January", "February", "March", "April", "May", "June", "July",
    "August", "September", "October", "November", "December",
)

# Standalone year 1000-2999, or a month name with optional day and year.
_YEAR = r"(?<![\w])([12][0-9]{3})(?![\w])"
_MONTH_PHRASE = (
    r"(?<![\w])(?:" + "|".join(_MONTHS) + r")"
    r"(?:\s+[0-9]{1,2}(?:st|nd|rd|th)?)?"
    r"(?:,?\s+[12][0-9]{3})?(?![\w])"
)
_DATE_RE = re.compile(_MONTH_PHRASE + "|" + _YEAR)

_WORD_RE = re.compile(r"\S+")

# Capitalized function words and titles that never count as entity words.
_ENTITY_STOPWORDS = {
    "a", "an", "the", "and", "or", "but", "if", "then", "so", "yet",
    "he", "she", "it", "they", "we", "you", "i", "who", "what", "when",
    "where", "why", "how", "this", "that", "these", "those", "there",
    "his", "her", "its", "their", "our", "my", "your",
    "in", "on", "at", "of", "for", "to", "with", "from", "by", "as",
    "is", "are", "was", "were", "be", "been", "am", "do", "does", "did",
    "not", "no", "after", "before", "during", "since", "while", "until",
    "mr", "mrs", "ms", "dr", "prof",
}


def _capitalized_entity_word(token: str) -> bool:
    stripped = token.strip("\"'()[]{},.;:!?")
    if not stripped or not stripped[0].isupper():
        return False
    return stripped.lower() not in _ENTITY_STOPWORDS


def _entity_candidates(text: str) -> list[tuple[int, int]]:
    tokens = list(_WORD_RE.finditer(text))
    runs: list[tuple[int, int]] = []  # token index ranges [i, j)
    i = 0
    while i < len(tokens):
        if _capitalized_entity_word(tokens[i].group()):
            j = i + 1
            while j < len(tokens) and _capitalized_entity_word(tokens[j].group()):
                j += 1
            if j - i >= 2 or i > 0:
                runs.append((i, j))
            i = j
        else:
            i += 1
    spans = []
    for i, j in runs:
        start = tokens[i].start()
        end = tokens[j - 1].end()
        # Trailing punctuation belongs to the sentence, not the entity.
        while end > start and not text[end - 1].isalnum():
            end -= 1
        if end > start:
            spans.append((start, end))
    return spans


def rule_tagger(text: str) -> list[SalientSpan]:
    """Deterministic built-in tagger for entities and dates.

    Dates: standalone years 1000-2999 and month-name phrases with optional
    day/year. Entities: maximal runs of capitalized words, skipping a
    stopword list; a single capitalized word only counts away from the
    sentence start. Overlaps resolve longest-first, then earliest.
    """
    candidates: list[SalientSpan] = []
    for m in _DATE_RE.finditer(text):
        candidates.append(SalientSpan(m.start(), m.end(), SpanKind.DATE))
    for start, end in _entity_candidates(text):
        candidates.append(SalientSpan(start, end, SpanKind.ENTITY))
    candidates.sort(key=lambda s: (-(s.end - s.start), s.start, s.kind.value))
    chosen: list[SalientSpan] = []
    for span in candidates:
        if all(span.end <= c.start or span.start >= c.end for c in chosen):
            chosen.append(span)
    chosen.sort(key=lambda s: s.start)
    return chosen


def load_annotated_spans(path) -> Tagger:
    """Tagger backed by a pre-annotated JSONL file of {"text", "spans"}.

    Unannotated sentences tag as empty, so they are simply not mined.
    """
    table: dict[str, list[SalientSpan]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            spans = [
                SalientSpan(s["start"], s["end"], SpanKind(s["kind"]))
                for s in obj["spans"]
            ]
            table[obj["text"]] = spans

    def tagger(text: str) -> list[SalientSpan]:
        return table.get(text, [])

    return tagger


@dataclass
class MiningStats:
    scanned: int = 0
    kept: int = 0


def tag_salient(text: str, tagger: Tagger = rule_tagger) -> list[SalientSpan]:
    """Run a tagger, surfacing plugin failures with the offending sentence."""
    try:
        spans = tagger(text)
    except Exception as exc:  # plugin boundary
        raise TaggerError(text, exc) from exc
    for span in spans:
        if span.end > len(text):
            raise TaggerError(text, ValueError(f"span [{span.start},{span.end}) beyond text"))
        if text[span.start].isspace() or text[span.end - 1].isspace():
            raise TaggerError(text, ValueError("span boundaries must be non-whitespace"))
    return sorted(spans, key=lambda s: s.start)


def mine_sentences(
    corpus: Iterable[CorpusDocument],
    tagger: Tagger = rule_tagger,
    stats: Optional[MiningStats] = None,
    min_chars: Optional[int] = None,
    max_chars: Optional[int] = None,
) -> Iterator[TaggedSentence]:
    """Yield the sentences with at least one salient span, in corpus order.

    Optional length filters are off by default. `stats`, if given, is
    updated in place with scanned/kept counts as the stream is consumed.
    """
    for doc in corpus:
        for sentence in sentence_split(doc):
            if min_chars is not None and len(sentence.text) < min_chars:
                continue
            if max_chars is not None and len(sentence.text) > max_chars:
                continue
            if stats is not None:
                stats.scanned += 1
            spans = tag_salient(sentence.text, tagger)
            if spans:
                if stats is not None:
                    stats.kept += 1
                yield TaggedSentence(sentence=sentence, spans=spans)


def mask_salient(
    tagged: TaggedSentence,
    vocab: Vocab,
    stream_index: int,
    seed: int = 0,
) -> CorruptedPair:
    """Mask one uniformly chosen salient span; deterministic per stream_index.

    The sentence is encoded as three independent byte segments (prefix,
    span, suffix) so the target is exactly the span's own encoding and
    resplicing reproduces the sentence byte for byte.
    """
    rng = philox(seed, "ssm-choice", stream_index)
    span = tagged.spans[int(rng.integers(len(tagged.spans)))]
    text = tagged.sentence.text
    raw = text.encode("utf-8")
    if span.end > len(raw):
        raise AlignmentError(f"span [{span.start},{span.end}) beyond sentence bytes")
    prefix = vocab.encode_bytes(raw[: span.start])
    middle = vocab.encode_bytes(raw[span.start : span.end])
    suffix = vocab.encode_bytes(raw[span.end :])
    if not middle:
        raise AlignmentError("salient span encodes to no tokens")
    respliced = vocab.decode_bytes(prefix + middle + suffix)
    if respliced != raw:
        raise AlignmentError("token segments do not reassemble the sentence")
    inputs = prefix + [vocab.sentinel_id(0)] + suffix
    targets = [vocab.sentinel_id(0)] + middle + [vocab.sentinel_id(1), vocab.eos_id]
    origin = f"{tagged.sentence.doc_id}#{tagged.sentence.index}"
    return CorruptedPair(inputs=inputs, targets=targets, origin=origin)
