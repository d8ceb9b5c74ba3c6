"""Document corpus: ingest, normalization, and per-year statistics.

A corpus is an ordered, immutable list of documents. The order is load
order and defines row order for every embedding matrix downstream, so it
must never be silently reshuffled.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .errors import CorpusError
from .text import normalize_nfc

logger = logging.getLogger(__name__)

MIN_YEAR = 1900


@dataclass(frozen=True)
class Document:
    """One publication record. `text` is derived, never stored in inputs."""

    id: str
    title: str
    abstract: str = ""
    year: int | None = None
    text: str = field(default="", compare=False)

    @staticmethod
    def build(id: str, title: str, abstract: str | None, year: int | None) -> "Document":
        """Normalize fields (NFC) and derive the full text.

        text = title + " " + abstract, with the separator omitted when the
        abstract is empty.
        """
        title = normalize_nfc(title.strip())
        abstract = normalize_nfc((abstract or "").strip())
        if not title:
            raise ValueError("empty title")
        if year is not None and year < MIN_YEAR:
            raise ValueError(f"year {year} is before {MIN_YEAR}")
        text = f"{title} {abstract}" if abstract else title
        return Document(id=id, title=title, abstract=abstract, year=year, text=text)


@dataclass(frozen=True)
class Corpus:
    documents: tuple[Document, ...]
    source_path: str
    skipped_titles: int = 0

    def __post_init__(self):
        ids = [d.id for d in self.documents]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"duplicate document ids: {dupes[:5]}")

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    def __getitem__(self, i: int) -> Document:
        return self.documents[i]

    def texts(self) -> list[str]:
        return [d.text for d in self.documents]

    def ids(self) -> list[str]:
        return [d.id for d in self.documents]

    def index_of(self, doc_id: str) -> int:
        return self._id_index()[doc_id]

    def by_id(self, doc_id: str) -> Document:
        return self.documents[self.index_of(doc_id)]

    def _id_index(self) -> dict[str, int]:
        cached = getattr(self, "_idx", None)
        if cached is None:
            cached = {d.id: i for i, d in enumerate(self.documents)}
            object.__setattr__(self, "_idx", cached)
        return cached

    def fingerprint(self) -> str:
        """Content hash; stable id for provenance of derived artifacts."""
        h = hashlib.sha256()
        for d in self.documents:
            h.update(d.id.encode("utf-8"))
            h.update(b"\x00")
            h.update(d.text.encode("utf-8"))
            h.update(b"\x01")
        return h.hexdigest()[:16]


def _records_from_jsonl(path: Path) -> Iterable[tuple[int, dict]]:
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: malformed JSON record: {exc}") from exc
            if not isinstance(rec, dict):
                raise CorpusError(f"{path}:{lineno}: record is not an object")
            yield lineno, rec


def _records_from_csv(path: Path) -> Iterable[tuple[int, dict]]:
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return
        header = {name.strip().lower(): name for name in reader.fieldnames}
        for field_name in ("id", "title"):
            if field_name not in header:
                raise CorpusError(f"{path}: CSV header missing required column '{field_name}'")
        for lineno, row in enumerate(reader, start=2):
            rec = {
                "id": row.get(header["id"]),
                "title": row.get(header["title"]),
                "abstract": row.get(header.get("abstract", ""), None),
                "year": row.get(header.get("year", ""), None),
            }
            yield lineno, rec


def ingest_corpus(path: str | Path, format: str | None = None) -> Corpus:
    """Load a corpus from JSONL or CSV.

    Records need `id` and `title`; `abstract` and `year` are optional.
    Records with an empty title are skipped (counted, logged); duplicate
    ids and malformed records are errors. An empty result is an error.
    """
    path = Path(path)
    if format is None:
        format = "csv" if path.suffix.lower() == ".csv" else "jsonl"
    if format not in ("jsonl", "csv"):
        raise ValueError(f"unknown corpus format {format!r}")
    if not path.is_file():
        raise CorpusError(f"corpus file not found: {path}")

    records = _records_from_csv(path) if format == "csv" else _records_from_jsonl(path)

    documents: list[Document] = []
    seen: set[str] = set()
    skipped = 0
    for lineno, rec in records:
        doc_id = rec.get("id")
        title = rec.get("title")
        if doc_id is None or not isinstance(doc_id, str) or not doc_id.strip():
            raise CorpusError(f"{path}:{lineno}: record missing id")
        doc_id = doc_id.strip()
        if title is None or not str(title).strip():
            skipped += 1
            continue
        if doc_id in seen:
            raise CorpusError(f"{path}:{lineno}: duplicate id {doc_id!r}")
        year_raw = rec.get("year")
        if year_raw in (None, ""):
            year = None
        else:
            try:
                year = int(year_raw)
            except (TypeError, ValueError) as exc:
                raise CorpusError(f"{path}:{lineno}: bad year {year_raw!r}") from exc
        abstract = rec.get("abstract")
        if abstract is not None and not isinstance(abstract, str):
            abstract = str(abstract)
        try:
            doc = Document.build(id=doc_id, title=str(title), abstract=abstract, year=year)
        except ValueError as exc:
            raise CorpusError(f"{path}:{lineno}: {exc}") from exc
        seen.add(doc_id)
        documents.append(doc)

    if not documents:
        raise CorpusError(f"empty corpus: {path}")
    if skipped:
        logger.warning("skipped %d records with empty title while ingesting %s", skipped, path)
    return Corpus(documents=tuple(documents), source_path=str(path), skipped_titles=skipped)


def write_corpus_jsonl(corpus: Corpus, path: str | Path) -> None:
    """Persist a corpus in the canonical JSONL schema."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for d in corpus:
            rec = {"id": d.id, "title": d.title, "abstract": d.abstract or None, "year": d.year}
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")


def yearly_counts(
    corpus: Corpus, labels: Mapping[str, str] | None = None
) -> list[tuple[int, str, int]]:
    """Per-year document counts, optionally split by a class label map.

    Documents without a year are excluded. Rows sorted by (year, class).
    With no label map every document counts under class "all".
    """
    counts: dict[tuple[int, str], int] = {}
    for doc in corpus:
        if doc.year is None:
            continue
        cls = labels.get(doc.id, "all") if labels else "all"
        key = (doc.year, cls)
        counts[key] = counts.get(key, 0) + 1
    return [(year, cls, n) for (year, cls), n in sorted(counts.items())]
