"""Two-stage (border model then source model) decision-level cascade.

A sample is accepted as bona fide only when both stages accept it. The two
score sets must describe exactly the same samples with the same labels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from padeval import metrics
from padeval.errors import CascadeError, EmptyClassError
from padeval.metrics import ConfusionMatrix
from padeval.model import Decision, ScoreRecord, ScoreSet, check_tau


@dataclass(frozen=True, eq=False)
class CascadeConfig:
    border: ScoreSet
    source: ScoreSet
    tau_border: float
    tau_source: float
    source_index: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        check_tau(self.tau_border)
        check_tau(self.tau_source)
        bf_b = self.border.taxonomy.bona_fide_label
        bf_s = self.source.taxonomy.bona_fide_label
        if bf_b != bf_s:
            raise CascadeError(f"bona fide labels differ between stages: {bf_b!r} vs {bf_s!r}")
        pos = {sid: i for i, sid in enumerate(self.source.sample_ids)}
        missing = [sid for sid in self.border.sample_ids if sid not in pos]
        if missing or len(pos) != len(self.border):
            border_ids = set(self.border.sample_ids)
            extra = [sid for sid in self.source.sample_ids if sid not in border_ids]
            raise CascadeError(
                "stages must score identical sample sets: "
                f"{len(missing)} id(s) only in border (e.g. {missing[:3]}), "
                f"{len(extra)} id(s) only in source (e.g. {extra[:3]})"
            )
        idx = np.array([pos[sid] for sid in self.border.sample_ids], dtype=np.int64)
        for i, j in enumerate(idx):
            if self.border.labels[i] != self.source.labels[j]:
                raise CascadeError(
                    f"sample {self.border.sample_ids[i]!r} labelled {self.border.labels[i]!r} by border "
                    f"but {self.source.labels[j]!r} by source"
                )
        idx.setflags(write=False)
        object.__setattr__(self, "source_index", idx)

    @property
    def bona_fide_label(self) -> str:
        return self.border.taxonomy.bona_fide_label

    @cached_property
    def join(self) -> dict[str, tuple[ScoreRecord, ScoreRecord]]:
        src = self.source.records
        return {r.sample_id: (r, src[j]) for r, j in zip(self.border.records, self.source_index)}

    @property
    def species(self) -> tuple[str, ...]:
        """All attack labels known to either stage, border first."""
        out = list(self.border.taxonomy.all_species)
        out += [s for s in self.source.taxonomy.all_species if s not in out]
        return tuple(out)

    @property
    def attack_classes(self) -> tuple[str, ...]:
        """Scored attack classes of both stages, border first, duplicates dropped."""
        out = list(self.border.taxonomy.attack_species)
        out += [s for s in self.source.taxonomy.attack_species if s not in out]
        return tuple(out)

    def accepted(self) -> np.ndarray:
        b = self.border.scores[:, 0] > self.tau_border
        s = self.source.scores[self.source_index, 0] > self.tau_source
        return b & s


@dataclass(frozen=True)
class CascadePoint:
    tau_border: float
    tau_source: float
    bpcer: float
    apcer_per_species: dict[str, float]
    apcer_worst: float
    worst_species: str
    acer: float


def combined_decide(border_record: ScoreRecord, source_record: ScoreRecord, tau_border: float,
                    tau_source: float, bona_fide_label: str) -> Decision:
    if border_record.sample_id != source_record.sample_id:
        raise CascadeError(f"sample id mismatch: {border_record.sample_id!r} vs {source_record.sample_id!r}")
    check_tau(tau_border)
    check_tau(tau_source)
    if border_record.scores[bona_fide_label] > tau_border and source_record.scores[bona_fide_label] > tau_source:
        return Decision.BONA_FIDE
    return Decision.ATTACK


def cascade_rates(cfg: CascadeConfig) -> CascadePoint:
    """Combined BPCER and per-species APCER of the conjunction of both stages."""
    accepted = cfg.accepted()
    labels = np.array(cfg.border.labels, dtype=object)
    bf = labels == cfg.bona_fide_label
    n_bf = int(bf.sum())
    if n_bf == 0:
        raise EmptyClassError("cascade has no bona fide samples")
    bpcer = int(np.count_nonzero(~accepted[bf])) / n_bf
    per_species = {}
    for s in cfg.species:
        m = labels == s
        n = int(m.sum())
        if n:
            per_species[s] = int(np.count_nonzero(accepted[m])) / n
    if not per_species:
        raise EmptyClassError("cascade has no attack samples")
    worst_species = max(per_species, key=lambda s: (per_species[s], -cfg.species.index(s)))
    worst = per_species[worst_species]
    return CascadePoint(
        tau_border=float(cfg.tau_border),
        tau_source=float(cfg.tau_source),
        bpcer=bpcer,
        apcer_per_species=per_species,
        apcer_worst=worst,
        worst_species=worst_species,
        acer=metrics.acer_from_rates(worst, bpcer),
    )


def cascade_predictions(cfg: CascadeConfig) -> list[str]:
    """Bona fide if both stages accept, else the top attack score across both stages.

    Ties go to border classes first, then manifest order within a stage.
    """
    b_att = cfg.border.scores[:, 1:]
    s_att = cfg.source.scores[cfg.source_index, 1:]
    names = list(cfg.border.taxonomy.attack_species) + list(cfg.source.taxonomy.attack_species)
    top = np.argmax(np.hstack([b_att, s_att]), axis=1)
    accepted = cfg.accepted()
    return [cfg.bona_fide_label if acc else names[j] for acc, j in zip(accepted, top)]


def cascade_confusion(cfg: CascadeConfig, mode: str = "full") -> ConfusionMatrix:
    rows = (cfg.bona_fide_label, *cfg.species)
    cols = (cfg.bona_fide_label, *cfg.attack_classes)
    counts = np.zeros((len(rows), len(cols)), dtype=np.int64)
    r_of = {lab: i for i, lab in enumerate(rows)}
    c_of = {lab: i for i, lab in enumerate(cols)}
    for true, pred in zip(cfg.border.labels, cascade_predictions(cfg)):
        counts[r_of[true], c_of[pred]] += 1
    full = ConfusionMatrix(rows, cols, counts)
    if mode == "full":
        return full
    if mode == "binary":
        return metrics.collapse_confusion(full, cfg.bona_fide_label)
    raise ValueError(f"mode must be 'full' or 'binary', got {mode!r}")


def stage_threshold(scores: ScoreSet, selector: str | float) -> float:
    return metrics.resolve_threshold(scores, selector)[0]


def build_config(border: ScoreSet, source: ScoreSet, tau_border="auto:bpcer100",
                 tau_source="auto:bpcer100") -> CascadeConfig:
    """Join two stages; selectors are literal thresholds or ``auto:bpcerN`` resolved per stage."""
    return CascadeConfig(border, source, stage_threshold(border, tau_border), stage_threshold(source, tau_source))


TABLE_ROWS = ("eer", "auto:bpcer10", "auto:bpcer20", "auto:bpcer50", "auto:bpcer100")


def cascade_table(border: ScoreSet, source: ScoreSet, rows=TABLE_ROWS) -> list[tuple[str, CascadePoint]]:
    """Combined rates at matching per-stage operating points (EER, BPCER_AP)."""
    out = []
    for sel in rows:
        if sel == "eer":
            tb, ts = metrics.eer(border).tau, metrics.eer(source).tau
        else:
            tb, ts = stage_threshold(border, sel), stage_threshold(source, sel)
        out.append((sel, cascade_rates(CascadeConfig(border, source, tb, ts))))
    return out
