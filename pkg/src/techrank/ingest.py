"""Readers and writers for edge lists, baseline rankings and company docs.

File formats
------------
edges (CSV)
    ``company,technology``; the header is optional and recognised by those
    exact names. Further columns (e.g. a weight) are ignored.
edges (JSONL)
    one ``{"company": ..., "technology": ...}`` object per line.
baseline (CSV)
    ``entity,rank`` with positive integer ranks; gaps are allowed.
ranking (CSV)
    ``entity,weight,rank`` as written by :func:`write_ranking`.
docs (JSONL)
    one ``{"company": ..., "description": ...}`` object per line.
keywords
    one keyword per line; blank lines and ``#`` comments are skipped.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .errors import DuplicateEntity, MissingColumn, ParseError
from .graph import BipartiteGraph
from .metrics import Ranking, ranks_to_ranking

logger = logging.getLogger(__name__)

EDGE_HEADER = ("company", "technology")
BASELINE_HEADER = ("entity", "rank")
RANKING_HEADER = ("entity", "weight", "rank")


@dataclass(frozen=True)
class EdgeRecord:
    company_label: str
    technology_label: str


@dataclass(frozen=True)
class BaselineRanking:
    entries: tuple[tuple[str, int], ...]

    def to_ranking(self) -> Ranking:
        return ranks_to_ranking(self.entries)


@dataclass(frozen=True)
class CompanyDoc:
    company_label: str
    description: str


def _read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8-sig")
    except (OSError, UnicodeDecodeError) as exc:
        raise ParseError(f"cannot read file: {exc}", path=str(path)) from exc


def _csv_rows(path):
    text = _read_text(path)
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        for row in reader:
            if not row or all(not f.strip() for f in row):
                continue
            yield reader.line_num, [f.strip() for f in row]
    except csv.Error as exc:
        raise ParseError(str(exc), line=reader.line_num, path=str(path)) from exc


def _header_columns(header: list[str], required: tuple[str, ...], path) -> dict[str, int]:
    missing = [name for name in required if name not in header]
    if missing:
        raise MissingColumn(f"missing column(s) {', '.join(missing)}", line=1, path=str(path))
    return {name: header.index(name) for name in required}


def _jsonl_objects(path):
    for lineno, line in enumerate(_read_text(path).splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line=lineno, path=str(path)) from exc
        if not isinstance(obj, dict):
            raise ParseError("expected a JSON object", line=lineno, path=str(path))
        yield lineno, obj


def _field(obj: dict, name: str, lineno: int, path) -> str:
    if name not in obj:
        raise MissingColumn(f"missing field {name!r}", line=lineno, path=str(path))
    value = obj[name]
    if not isinstance(value, str):
        raise ParseError(f"field {name!r} must be a string", line=lineno, path=str(path))
    return value.strip()


def _edge(company: str, technology: str, lineno: int, path) -> EdgeRecord:
    if not company:
        raise ParseError("empty company field", line=lineno, path=str(path))
    if not technology:
        raise ParseError("empty technology field", line=lineno, path=str(path))
    return EdgeRecord(company, technology)


def _edges_csv(path) -> list[EdgeRecord]:
    rows = list(_csv_rows(path))
    cols = {"company": 0, "technology": 1}
    if rows and set(EDGE_HEADER) & set(rows[0][1]):
        cols = _header_columns(rows[0][1], EDGE_HEADER, path)
        rows = rows[1:]
    width = max(cols.values()) + 1
    records = []
    extra = False
    for lineno, row in rows:
        if len(row) < width:
            raise ParseError(f"expected at least {width} fields, got {len(row)}", line=lineno, path=str(path))
        extra = extra or len(row) > len(cols)
        records.append(_edge(row[cols["company"]], row[cols["technology"]], lineno, path))
    if extra:
        logger.warning("%s: extra columns ignored; edges are unweighted", path)
    return records


def _edges_jsonl(path) -> list[EdgeRecord]:
    return [
        _edge(_field(obj, "company", n, path), _field(obj, "technology", n, path), n, path)
        for n, obj in _jsonl_objects(path)
    ]


def load_edges(path, format: str | None = None) -> list[EdgeRecord]:
    """Read an edge list in file order.

    ``format`` is ``"csv"`` or ``"jsonl"``; by default it follows the file
    suffix (``.jsonl``/``.ndjson`` mean JSONL, anything else CSV).
    """
    if format is None:
        format = "jsonl" if Path(path).suffix.lower() in (".jsonl", ".ndjson") else "csv"
    if format == "csv":
        return _edges_csv(path)
    if format == "jsonl":
        return _edges_jsonl(path)
    raise ValueError(f"unknown edge format {format!r}")


def format_edges(g: BipartiteGraph) -> str:
    """The canonical edge CSV: header, then edges in index order."""
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(EDGE_HEADER)
    for c, t in g.edges:
        writer.writerow((g.companies[c].label, g.technologies[t].label))
    return buf.getvalue()


def write_edges(g: BipartiteGraph, path) -> None:
    Path(path).write_text(format_edges(g), encoding="utf-8", newline="")


def _parse_rank(text: str, lineno: int, path, integer: bool) -> float:
    try:
        value = int(text) if integer else float(text)
    except ValueError:
        kind = "positive integer" if integer else "positive number"
        raise ParseError(f"rank {text!r} is not a {kind}", line=lineno, path=str(path)) from None
    if not (math.isfinite(value) and value > 0):
        raise ParseError(f"rank {text!r} must be positive", line=lineno, path=str(path))
    return value


def _labelled_ranks(path, header, integer):
    rows = list(_csv_rows(path))
    if not rows:
        raise MissingColumn("empty file, expected a header", line=1, path=str(path))
    cols = _header_columns(rows[0][1], header, path)
    seen = {}
    out = []
    for lineno, row in rows[1:]:
        if len(row) <= max(cols.values()):
            raise ParseError("row is missing fields", line=lineno, path=str(path))
        label = row[cols["entity"]]
        if not label:
            raise ParseError("empty entity field", line=lineno, path=str(path))
        if label in seen:
            raise DuplicateEntity(
                f"entity {label!r} already listed on line {seen[label]}", line=lineno, path=str(path)
            )
        seen[label] = lineno
        out.append((label, _parse_rank(row[cols["rank"]], lineno, path, integer), row, cols))
    return out


def load_baseline(path) -> BaselineRanking:
    """Read an ``entity,rank`` CSV; lower rank is better."""
    rows = _labelled_ranks(path, BASELINE_HEADER, integer=True)
    return BaselineRanking(tuple((label, rank) for label, rank, _, _ in rows))


def has_weight_column(path) -> bool:
    for _, row in _csv_rows(path):
        return "weight" in row
    return False


def load_ranking(path) -> Ranking:
    """Read an ``entity,weight,rank`` CSV back into a :class:`Ranking`."""
    rows = _labelled_ranks(path, RANKING_HEADER, integer=False)
    ranking = ranks_to_ranking((label, rank) for label, rank, _, _ in rows)
    weights = {}
    for label, _, row, cols in rows:
        try:
            weights[label] = float(row[cols["weight"]])
        except ValueError:
            raise ParseError(f"weight for {label!r} is not a number", path=str(path)) from None
    return Ranking(tuple(type(e)(e.label, weights[e.label], e.rank) for e in ranking))


def _format_number(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def format_ranking(ranking: Ranking) -> str:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RANKING_HEADER)
    for e in ranking:
        writer.writerow((e.label, repr(float(e.weight)), _format_number(e.rank)))
    return buf.getvalue()


def write_ranking(ranking: Ranking, path) -> None:
    Path(path).write_text(format_ranking(ranking), encoding="utf-8", newline="")


def load_docs(path) -> list[CompanyDoc]:
    docs = []
    seen = set()
    for n, obj in _jsonl_objects(path):
        label = _field(obj, "company", n, path)
        if not label:
            raise ParseError("empty company field", line=n, path=str(path))
        if label in seen:
            raise DuplicateEntity(f"company {label!r} listed twice", line=n, path=str(path))
        seen.add(label)
        description = obj.get("description") or ""
        if not isinstance(description, str):
            raise ParseError("field 'description' must be a string", line=n, path=str(path))
        docs.append(CompanyDoc(label, description))
    return docs


def load_keywords(path) -> set[str]:
    words = set()
    for line in _read_text(path).splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            words.add(line)
    return words


def _keyword_pattern(keyword: str, case_sensitive: bool) -> re.Pattern:
    # \w-lookarounds give Unicode word boundaries that also work for keywords
    # starting or ending in punctuation, e.g. "zero-trust" or "c++"
    flags = 0 if case_sensitive else re.IGNORECASE
    return re.compile(rf"(?<!\w){re.escape(keyword)}(?!\w)", flags)


def keyword_filter(
    docs: Iterable[CompanyDoc],
    keywords: Iterable[str],
    min_hits: int = 2,
    case_sensitive: bool = False,
) -> set[str]:
    """Companies whose description mentions at least ``min_hits`` distinct keywords.

    Matching is on whole words, case-insensitive unless ``case_sensitive``.
    """
    if min_hits < 1:
        raise ValueError("min_hits must be >= 1")
    words = {k.strip() for k in keywords if k.strip()}
    if not words:
        raise ValueError("keyword list is empty")
    if not case_sensitive:
        words = {k.casefold() for k in words}
    patterns = [_keyword_pattern(k, case_sensitive) for k in sorted(words)]
    selected = set()
    for doc in docs:
        text = doc.description if case_sensitive else doc.description.casefold()
        hits = sum(1 for p in patterns if p.search(text))
        if hits >= min_hits:
            selected.add(doc.company_label)
    return selected
