"""WikiQA TSV ingestion, tokenization and word2vec-format embeddings."""

from __future__ import annotations

import io
import logging
import string
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, TextIO

import numpy as np

logger = logging.getLogger(__name__)

__all__ = [
    "OOV",
    "WIKIQA_COLUMNS",
    "ParseError",
    "FormatError",
    "Candidate",
    "QaQuestion",
    "EmbeddingTable",
    "EmbeddedQuestion",
    "parse_wikiqa_tsv",
    "read_wikiqa",
    "tokenize",
    "load_embeddings",
    "save_embeddings",
    "fallback_embeddings",
    "embed",
]

OOV = "<oov>"
WIKIQA_COLUMNS = (
    "QuestionID",
    "Question",
    "DocumentID",
    "DocumentTitle",
    "SentenceID",
    "Sentence",
    "Label",
)
_PUNCT = string.punctuation


class ParseError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


class FormatError(ValueError):
    pass


@dataclass
class Candidate:
    sentence_id: str
    tokens: List[str]
    label: int


@dataclass
class QaQuestion:
    question_id: str
    tokens: List[str]
    candidates: List[Candidate] = field(default_factory=list)

    @property
    def answerable(self) -> bool:
        return any(c.label == 1 for c in self.candidates)

    @property
    def labels(self) -> List[int]:
        return [c.label for c in self.candidates]


def tokenize(text: str) -> List[str]:
    """Lowercase, split on whitespace and trim ASCII punctuation off each piece.

    >>> tokenize("What is Korean money called?")
    ['what', 'is', 'korean', 'money', 'called']
    >>> tokenize("")
    ['<oov>']
    """
    tokens = []
    for piece in text.lower().split():
        if piece != OOV:
            piece = piece.strip(_PUNCT)
        if piece:
            tokens.append(piece)
    return tokens or [OOV]


def parse_wikiqa_tsv(stream: Iterable[str]) -> List[QaQuestion]:
    """Group WikiQA rows into questions.

    Consecutive rows sharing a QuestionID form one paragraph, in file order.
    A header row (first cell ``QuestionID``) is skipped if present.
    """
    questions: List[QaQuestion] = []
    current: Optional[QaQuestion] = None
    for lineno, raw in enumerate(stream, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        cells = line.split("\t")
        if lineno == 1 and cells[0] == "QuestionID":
            continue
        if len(cells) != len(WIKIQA_COLUMNS):
            raise ParseError(
                f"expected {len(WIKIQA_COLUMNS)} tab-separated columns, found {len(cells)}", lineno
            )
        qid, question, _doc_id, _title, sid, sentence, label = cells
        if label.strip() not in ("0", "1"):
            raise ParseError(f"label must be 0 or 1, got {label!r}", lineno)
        if current is None or current.question_id != qid:
            current = QaQuestion(qid, tokenize(question))
            questions.append(current)
        current.candidates.append(Candidate(sid, tokenize(sentence), int(label)))
    return questions


def read_wikiqa(path) -> List[QaQuestion]:
    with open(path, encoding="utf-8") as fh:
        return parse_wikiqa_tsv(fh)


@dataclass
class EmbeddingTable:
    """Frozen lookup table; the last row is the out-of-vocabulary vector."""

    vocabulary: Dict[str, int]
    matrix: np.ndarray

    @property
    def oov_row(self) -> int:
        return self.matrix.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def index(self, token: str) -> int:
        return self.vocabulary.get(token, self.oov_row)

    def lookup(self, tokens: Sequence[str]) -> np.ndarray:
        return self.matrix[[self.index(t) for t in tokens]]

    @classmethod
    def from_vectors(cls, words: Sequence[str], vectors: np.ndarray) -> "EmbeddingTable":
        vectors = np.asarray(vectors, dtype=np.float64)
        if len(words) == 0:
            raise FormatError("embedding table needs at least one vector")
        vocab: Dict[str, int] = {}
        for i, w in enumerate(words):
            vocab.setdefault(w, i)
        oov = vectors.mean(axis=0, keepdims=True)
        return cls(vocab, np.ascontiguousarray(np.vstack([vectors, oov])))


def load_embeddings(stream: TextIO, embed_dim: int) -> EmbeddingTable:
    """Read word2vec text format: a ``V D`` header then ``V`` lines ``word v1 .. vD``."""
    header = stream.readline().split()
    if len(header) != 2:
        raise ParseError("header must be 'V D'", 1)
    try:
        count, dim = int(header[0]), int(header[1])
    except ValueError:
        raise ParseError(f"malformed header {header!r}", 1) from None
    if dim != embed_dim:
        raise FormatError(f"embedding file has dimension {dim}, expected {embed_dim}")
    words: List[str] = []
    vectors = np.empty((count, dim))
    for i in range(count):
        lineno = i + 2
        parts = stream.readline().rstrip("\r\n").split(" ")
        parts = [p for p in parts if p != ""]
        if len(parts) != dim + 1:
            raise ParseError(f"expected a word and {dim} numbers, found {len(parts)} fields", lineno)
        try:
            vectors[i] = [float(v) for v in parts[1:]]
        except ValueError as exc:
            raise ParseError(f"malformed number ({exc})", lineno) from None
        words.append(parts[0])
    return EmbeddingTable.from_vectors(words, vectors)


def save_embeddings(table: EmbeddingTable, stream: TextIO) -> None:
    """Write the known-word rows back out in word2vec text format."""
    words = sorted(table.vocabulary, key=table.vocabulary.__getitem__)
    stream.write(f"{len(words)} {table.dim}\n")
    for w in words:
        row = table.matrix[table.vocabulary[w]]
        stream.write(w + " " + " ".join(repr(float(v)) for v in row) + "\n")


def fallback_embeddings(
    questions: Iterable[QaQuestion], embed_dim: int, seed: int = 42
) -> EmbeddingTable:
    """Seeded uniform(-0.1, 0.1) vectors for every word seen in ``questions``.

    Words are numbered in first-seen order so the table is reproducible.
    """
    seen: Dict[str, None] = {}
    for q in questions:
        for t in q.tokens:
            seen.setdefault(t, None)
        for c in q.candidates:
            for t in c.tokens:
                seen.setdefault(t, None)
    words = [w for w in seen if w != OOV] or [OOV]
    rng = np.random.default_rng(seed)
    logger.info("building fallback embeddings for %d words", len(words))
    return EmbeddingTable.from_vectors(words, rng.uniform(-0.1, 0.1, size=(len(words), embed_dim)))


@dataclass
class EmbeddedQuestion:
    question_id: str
    question: np.ndarray
    candidates: List[np.ndarray]
    labels: np.ndarray

    @property
    def answerable(self) -> bool:
        return bool(self.labels.any())


def embed(q: QaQuestion, table: EmbeddingTable) -> EmbeddedQuestion:
    return EmbeddedQuestion(
        q.question_id,
        table.lookup(q.tokens or [OOV]),
        [table.lookup(c.tokens or [OOV]) for c in q.candidates],
        np.array([c.label for c in q.candidates], dtype=np.float64),
    )


def parse_wikiqa_text(text: str) -> List[QaQuestion]:
    return parse_wikiqa_tsv(io.StringIO(text))
