"""Class taxonomy, score sets, score-file I/O and the single-sample decision rule."""

from __future__ import annotations

import csv
import enum
import io
import json
import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

from padeval.errors import ManifestError, ScoreFileError

_NUMBER = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")
_NONFINITE = re.compile(r"[+-]?(?:nan|inf|infinity)", re.IGNORECASE)
_CONTROL = re.compile(r"[\x00-\x1f\x7f-\x9f\u2028\u2029]")


class Decision(str, enum.Enum):
    BONA_FIDE = "bona_fide"
    ATTACK = "attack"


@dataclass(frozen=True)
class ClassTaxonomy:
    """Bona fide class plus the attack species a model scores.

    ``unscored_species`` are attack labels that may appear as ground truth
    but have no score column (e.g. display samples pushed through a model
    trained only on composite/synthetic). They take part in per-species
    metrics when asked for by name, never in the worst case.
    """

    bona_fide_label: str
    attack_species: tuple[str, ...]
    unscored_species: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "attack_species", tuple(self.attack_species))
        object.__setattr__(self, "unscored_species", tuple(self.unscored_species))
        names = (self.bona_fide_label, *self.attack_species, *self.unscored_species)
        for name in names:
            if not isinstance(name, str) or not name:
                raise ManifestError(f"class names must be non-empty strings, got {name!r}")
        if not self.attack_species:
            raise ManifestError("attack species list is empty")
        if self.bona_fide_label in self.attack_species or self.bona_fide_label in self.unscored_species:
            raise ManifestError(f"bona fide label {self.bona_fide_label!r} also listed as an attack species")
        seen = set()
        for name in names:
            if name in seen:
                raise ManifestError(f"duplicate class name {name!r}")
            seen.add(name)

    @property
    def classes(self) -> tuple[str, ...]:
        """Scored classes, in score-column order."""
        return (self.bona_fide_label, *self.attack_species)

    @property
    def all_species(self) -> tuple[str, ...]:
        return (*self.attack_species, *self.unscored_species)

    @property
    def labels(self) -> tuple[str, ...]:
        return (self.bona_fide_label, *self.all_species)

    def to_json(self) -> str:
        doc = {"bona_fide": self.bona_fide_label, "attack_species": list(self.attack_species)}
        if self.unscored_species:
            doc["unscored_species"] = list(self.unscored_species)
        return json.dumps(doc, indent=2) + "\n"


@dataclass(frozen=True)
class ScoreRecord:
    sample_id: str
    true_label: str
    scores: Mapping[str, float]


@dataclass(frozen=True, eq=False)
class ScoreSet:
    """Immutable, column-oriented set of scored samples.

    ``scores`` has one row per record and one column per scored class in
    ``taxonomy.classes`` order, so column 0 is always the bona fide score.
    """

    taxonomy: ClassTaxonomy
    sample_ids: tuple[str, ...]
    labels: tuple[str, ...]
    scores: np.ndarray = field(repr=False)

    def __post_init__(self):
        ids = tuple(self.sample_ids)
        labels = tuple(self.labels)
        scores = np.array(self.scores, dtype=np.float64, copy=True)
        k = len(self.taxonomy.classes)
        if scores.ndim != 2 or scores.shape != (len(ids), k) or len(labels) != len(ids):
            raise ScoreFileError(
                f"shape mismatch: {len(ids)} ids, {len(labels)} labels, "
                f"scores {scores.shape}, expected (n, {k})"
            )
        known = set(self.taxonomy.labels)
        # whole-column checks first; the per-row scan only runs to name the offending row
        try:
            clean = _CONTROL.search("".join(ids)) is None
        except TypeError:
            clean = False
        unique = set(ids)
        if not (clean and "" not in unique and len(unique) == len(ids) and set(labels) <= known):
            _locate_bad_row(ids, labels, known)
        bad = ~np.isfinite(scores) | (scores < 0.0) | (scores > 1.0)
        if bad.any():
            r, c = map(int, np.argwhere(bad)[0])
            raise ScoreFileError(
                f"score {scores[r, c]!r} not a finite value in [0, 1]", row=r + 1, field=self.taxonomy.classes[c]
            )
        if labels.count(self.taxonomy.bona_fide_label) < 1:
            raise ScoreFileError(f"no {self.taxonomy.bona_fide_label!r} records; at least one bona fide sample is required")
        scores.setflags(write=False)
        object.__setattr__(self, "sample_ids", ids)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "scores", scores)

    @classmethod
    def from_records(cls, taxonomy: ClassTaxonomy, records: Iterable[ScoreRecord]) -> "ScoreSet":
        records = list(records)
        rows = []
        for i, rec in enumerate(records, start=1):
            missing = [c for c in taxonomy.classes if c not in rec.scores]
            if missing:
                raise ScoreFileError(f"missing score for class {missing[0]!r}", row=i, field=missing[0])
            extra = [c for c in rec.scores if c not in taxonomy.classes]
            if extra:
                raise ScoreFileError(f"score for unknown class {extra[0]!r}", row=i, field=extra[0])
            rows.append([rec.scores[c] for c in taxonomy.classes])
        scores = np.array(rows, dtype=np.float64).reshape(len(records), len(taxonomy.classes))
        return cls(taxonomy, tuple(r.sample_id for r in records), tuple(r.true_label for r in records), scores)

    def __len__(self):
        return len(self.sample_ids)

    def __eq__(self, other):
        if not isinstance(other, ScoreSet):
            return NotImplemented
        return (
            self.taxonomy == other.taxonomy
            and self.sample_ids == other.sample_ids
            and self.labels == other.labels
            and np.array_equal(self.scores, other.scores)
        )

    __hash__ = None

    @cached_property
    def records(self) -> tuple[ScoreRecord, ...]:
        classes = self.taxonomy.classes
        return tuple(
            ScoreRecord(sid, lab, dict(zip(classes, map(float, row))))
            for sid, lab, row in zip(self.sample_ids, self.labels, self.scores)
        )

    @cached_property
    def _label_array(self) -> np.ndarray:
        return np.array(self.labels, dtype=object)

    @cached_property
    def _masks(self) -> dict[str, np.ndarray]:
        arr = self._label_array
        return {lab: arr == lab for lab in self.taxonomy.labels}

    def mask(self, label: str) -> np.ndarray:
        return self._masks[label]

    @property
    def n_bona_fide(self) -> int:
        return int(self.mask(self.taxonomy.bona_fide_label).sum())

    @property
    def n_per_species(self) -> dict[str, int]:
        return {s: int(self.mask(s).sum()) for s in self.taxonomy.all_species}

    def bona_fide_scores(self, label: str) -> np.ndarray:
        """Bona-fide-class scores of the records whose true label is ``label``."""
        return self.scores[self.mask(label), 0]


def _locate_bad_row(ids, labels, known):
    seen: set[str] = set()
    for i, (sid, lab) in enumerate(zip(ids, labels), start=1):
        if not isinstance(sid, str) or not sid:
            raise ScoreFileError("empty sample_id", row=i, field="sample_id")
        if _CONTROL.search(sid):
            raise ScoreFileError(f"sample_id {sid!r} contains control characters", row=i, field="sample_id")
        if sid in seen:
            raise ScoreFileError(f"duplicate sample_id {sid!r}", row=i, field="sample_id")
        seen.add(sid)
        if lab not in known:
            raise ScoreFileError(f"unknown label {lab!r}", row=i, field="label")


def parse_manifest(text: str) -> ClassTaxonomy:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ManifestError("manifest must be a JSON object")
    unknown = set(doc) - {"bona_fide", "attack_species", "unscored_species"}
    if unknown:
        raise ManifestError(f"unknown manifest keys: {sorted(unknown)}")
    if "bona_fide" not in doc or "attack_species" not in doc:
        raise ManifestError("manifest requires 'bona_fide' and 'attack_species'")
    species = doc["attack_species"]
    unscored = doc.get("unscored_species", [])
    if not isinstance(species, list) or not isinstance(unscored, list):
        raise ManifestError("'attack_species' and 'unscored_species' must be lists")
    return ClassTaxonomy(doc["bona_fide"], tuple(species), tuple(unscored))


def _parse_score_token(token: str, row: int, column: str) -> float:
    token = token.strip()
    if _NONFINITE.fullmatch(token):
        raise ScoreFileError(f"non-finite score {token!r}", row=row, field=column)
    if not _NUMBER.fullmatch(token):
        raise ScoreFileError(f"malformed score {token!r}", row=row, field=column)
    value = float(token)
    if not math.isfinite(value):
        raise ScoreFileError(f"non-finite score {token!r}", row=row, field=column)
    if not 0.0 <= value <= 1.0:
        raise ScoreFileError(f"score {token} outside [0, 1]", row=row, field=column)
    return value


def _check_row(sid, label, taxonomy, seen, row):
    if not isinstance(sid, str) or not sid:
        raise ScoreFileError("empty or non-string sample_id", row=row, field="sample_id")
    if sid in seen:
        raise ScoreFileError(f"duplicate sample_id {sid!r} (first seen on row {seen[sid]})", row=row, field="sample_id")
    seen[sid] = row
    if label not in taxonomy.labels:
        raise ScoreFileError(f"unknown label {label!r}", row=row, field="label")


def _parse_csv(text: str, taxonomy: ClassTaxonomy) -> ScoreSet:
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise ScoreFileError("empty score file", row=1) from None
    header = [h.strip() for h in header]
    expected = ["sample_id", "label", *taxonomy.classes]
    if header != expected:
        missing = [c for c in expected if c not in header]
        if missing:
            raise ScoreFileError(f"missing column {missing[0]!r}; expected header {expected}", row=1, field=missing[0])
        raise ScoreFileError(f"header {header} does not match expected {expected}", row=1)
    ids, labels, rows = [], [], []
    seen: dict[str, int] = {}
    for cells in reader:
        row = reader.line_num
        if not cells or (len(cells) == 1 and not cells[0].strip()):
            continue
        if len(cells) != len(expected):
            raise ScoreFileError(f"expected {len(expected)} columns, found {len(cells)}", row=row)
        sid, label = cells[0], cells[1].strip()
        _check_row(sid, label, taxonomy, seen, row)
        rows.append([_parse_score_token(tok, row, col) for tok, col in zip(cells[2:], taxonomy.classes)])
        ids.append(sid)
        labels.append(label)
    return _build(taxonomy, ids, labels, rows)


def _parse_jsonl(text: str, taxonomy: ClassTaxonomy) -> ScoreSet:
    ids, labels, rows = [], [], []
    seen: dict[str, int] = {}
    for row, line in enumerate(text.split("\n"), start=1):
        line = line.rstrip("\r")
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ScoreFileError(f"invalid JSON: {exc.msg}", row=row) from None
        if not isinstance(obj, dict) or set(obj) != {"sample_id", "label", "scores"}:
            raise ScoreFileError("object must have exactly the keys sample_id, label, scores", row=row)
        sid, label, scores = obj["sample_id"], obj["label"], obj["scores"]
        _check_row(sid, label, taxonomy, seen, row)
        if not isinstance(scores, dict):
            raise ScoreFileError("'scores' must be an object", row=row, field="scores")
        for cls in taxonomy.classes:
            if cls not in scores:
                raise ScoreFileError(f"missing score for class {cls!r}", row=row, field=cls)
        for cls in scores:
            if cls not in taxonomy.classes:
                raise ScoreFileError(f"score for unknown class {cls!r}", row=row, field=cls)
        values = []
        for cls in taxonomy.classes:
            v = scores[cls]
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ScoreFileError(f"score {v!r} is not a number", row=row, field=cls)
            v = float(v)
            if not math.isfinite(v):
                raise ScoreFileError(f"non-finite score {v!r}", row=row, field=cls)
            if not 0.0 <= v <= 1.0:
                raise ScoreFileError(f"score {v!r} outside [0, 1]", row=row, field=cls)
            values.append(v)
        ids.append(sid)
        labels.append(label)
        rows.append(values)
    return _build(taxonomy, ids, labels, rows)


def _build(taxonomy, ids, labels, rows) -> ScoreSet:
    scores = np.array(rows, dtype=np.float64).reshape(len(ids), len(taxonomy.classes))
    return ScoreSet(taxonomy, tuple(ids), tuple(labels), scores)


def detect_format(text: str) -> str:
    stripped = text.lstrip("﻿ \t\r\n")
    return "jsonl" if stripped.startswith("{") else "csv"


def parse_scores(text: str, taxonomy: ClassTaxonomy, fmt: str | None = None) -> ScoreSet:
    """Parse a CSV or JSONL score document into a validated :class:`ScoreSet`.

    The format is sniffed from the first non-blank character when ``fmt``
    is not given. Every validation failure raises :class:`ScoreFileError`
    carrying the offending line number.
    """
    text = text.lstrip("﻿")
    fmt = fmt or detect_format(text)
    if fmt == "csv":
        return _parse_csv(text, taxonomy)
    if fmt == "jsonl":
        return _parse_jsonl(text, taxonomy)
    raise ValueError(f"unknown score format {fmt!r}")


def serialize_scores(scores: ScoreSet, fmt: str = "csv") -> str:
    """Inverse of :func:`parse_scores`; floats are written with ``repr`` so they round-trip."""
    classes = scores.taxonomy.classes
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["sample_id", "label", *classes])
        for sid, lab, row in zip(scores.sample_ids, scores.labels, scores.scores):
            writer.writerow([sid, lab, *(repr(float(v)) for v in row)])
        return buf.getvalue()
    if fmt == "jsonl":
        lines = []
        for sid, lab, row in zip(scores.sample_ids, scores.labels, scores.scores):
            obj = {"sample_id": sid, "label": lab, "scores": dict(zip(classes, map(float, row)))}
            lines.append(json.dumps(obj, ensure_ascii=False))
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown score format {fmt!r}")


def check_tau(tau: float) -> float:
    tau = float(tau)
    if not (0.0 <= tau <= 1.0):
        raise ValueError(f"threshold must lie in [0, 1], got {tau!r}")
    return tau


def decide(record: ScoreRecord, tau: float, taxonomy: ClassTaxonomy) -> Decision:
    """Bona fide iff the bona fide score is strictly above ``tau``; a tie is an attack."""
    tau = check_tau(tau)
    if record.scores[taxonomy.bona_fide_label] > tau:
        return Decision.BONA_FIDE
    return Decision.ATTACK
