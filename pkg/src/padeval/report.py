"""Operating-point summary reports (EER, BPCER_AP ladder, rates at a chosen threshold).

JSON output keeps full double precision; markdown tables round percentages
and thresholds to 4 decimals, half-up.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from decimal import Decimal

from padeval import __version__, metrics
from padeval.cascade import CascadePoint, build_config, cascade_rates, cascade_table
from padeval.metrics import AP_LADDER, BpcerApResult, EerResult
from padeval.model import ScoreSet
from padeval.rounding import percent, round_half_up

REPORT_SCHEMA = "padeval.report/1"
CASCADE_SCHEMA = "padeval.cascade/1"


@dataclass(frozen=True)
class EvaluationReport:
    dataset: str
    species: str
    eer: EerResult
    ladder: list[BpcerApResult]
    tau_selector: str
    chosen_tau: float
    per_species_apcer: dict[str, float]
    bpcer_at_tau: float
    acer_at_tau: float
    worst_species: str
    n_records: int
    n_bona_fide: int
    n_per_species: dict[str, int]
    version: str = __version__
    schema: str = REPORT_SCHEMA

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "EvaluationReport":
        _check_keys(doc, cls, "report")
        if doc["schema"] != REPORT_SCHEMA:
            raise ValueError(f"unsupported report schema {doc['schema']!r}")
        _check_keys(doc["eer"], EerResult, "eer")
        for row in doc["ladder"]:
            _check_keys(row, BpcerApResult, "ladder row")
        return cls(**{
            **doc,
            "eer": EerResult(**doc["eer"]),
            "ladder": [BpcerApResult(**row) for row in doc["ladder"]],
        })


def _check_keys(doc, kind, what):
    if not isinstance(doc, dict):
        raise ValueError(f"{what} must be a JSON object")
    names = {f.name for f in dataclasses.fields(kind)}
    unknown = set(doc) - names
    if unknown:
        raise ValueError(f"unknown {what} field(s): {sorted(unknown)}")
    missing = {f.name for f in dataclasses.fields(kind)
               if f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING} - set(doc)
    if missing:
        raise ValueError(f"missing {what} field(s): {sorted(missing)}")


def build_report(scores: ScoreSet, species: str | None = None, tau_selector: str | float = "auto:bpcer100",
                 dataset: str = "") -> EvaluationReport:
    """Evaluate ``scores`` the way the summary tables are laid out.

    ``species`` drives the EER and the BPCER_AP ladder (``None`` = worst
    case); the rates at the chosen threshold always cover every non-empty
    species and the ACER uses the worst of them.
    """
    tau, _ = metrics.resolve_threshold(scores, tau_selector, species)
    point = metrics.operating_point(scores, tau)
    present = metrics.nonempty_species(scores)
    label = species or (present[0] if len(present) == 1 else "worst-case")
    return EvaluationReport(
        dataset=dataset,
        species=label,
        eer=metrics.eer(scores, species),
        ladder=metrics.bpcer_ladder(scores, species, AP_LADDER),
        tau_selector=str(tau_selector),
        chosen_tau=tau,
        per_species_apcer=point.apcer_per_species,
        bpcer_at_tau=point.bpcer,
        acer_at_tau=point.acer,
        worst_species=point.worst_species,
        n_records=len(scores),
        n_bona_fide=scores.n_bona_fide,
        n_per_species=scores.n_per_species,
    )


def _target_label(ap: int) -> str:
    return f"{(Decimal(100) / Decimal(ap)).normalize():f}%"


def _table(header, rows) -> list[str]:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join(["---"] + ["---:"] * (len(header) - 1)) + "|"]
    lines += ["| " + " | ".join(r) + " |" for r in rows]
    return lines


def report_rows(report: EvaluationReport) -> list[tuple[str, str, str]]:
    """(metric, score %, threshold) rows in table order."""
    tau = round_half_up(report.chosen_tau)
    sp = report.species
    rows = [(f"EER_{sp}", percent(report.eer.eer), round_half_up(report.eer.tau))]
    for r in report.ladder:
        note = " [saturated]" if r.saturated else ""
        rows.append((f"BPCER_{r.ap} (APCER_{sp} = {_target_label(r.ap)}){note}",
                     percent(r.bpcer), round_half_up(r.tau)))
    rows += [(f"APCER_{s}(τ)", percent(v), tau) for s, v in report.per_species_apcer.items()]
    rows.append(("BPCER(τ)", percent(report.bpcer_at_tau), tau))
    rows.append(("ACER(τ)", percent(report.acer_at_tau), tau))
    return rows


def _markdown(report: EvaluationReport) -> str:
    title = f"# PAD assessment{': ' + report.dataset if report.dataset else ''}"
    counts = ", ".join(f"{k}={v}" for k, v in report.n_per_species.items())
    lines = [
        title,
        "",
        f"- records: {report.n_records} (bona fide={report.n_bona_fide}, {counts})",
        f"- operating point: {report.tau_selector} -> τ = {round_half_up(report.chosen_tau)}",
        f"- worst-case species at τ: {report.worst_species}",
        "",
    ]
    lines += _table(("Metric", "Score (%)", "Threshold (τ)"), report_rows(report))
    return "\n".join(lines) + "\n"


def render_report(report: EvaluationReport, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2, ensure_ascii=False) + "\n"
    if fmt in ("markdown", "md"):
        return _markdown(report)
    raise ValueError(f"unknown report format {fmt!r}")


def parse_report(text: str) -> EvaluationReport:
    return EvaluationReport.from_dict(json.loads(text))


# -- cascade ----------------------------------------------------------------


@dataclass(frozen=True)
class CascadeReport:
    dataset: str
    tau_border_selector: str
    tau_source_selector: str
    chosen: CascadePoint
    table: list[dict] = field(default_factory=list)
    n_records: int = 0
    version: str = __version__
    schema: str = CASCADE_SCHEMA

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def build_cascade_report(border: ScoreSet, source: ScoreSet, tau_border="auto:bpcer100",
                         tau_source="auto:bpcer100", dataset: str = "") -> CascadeReport:
    cfg = build_config(border, source, tau_border, tau_source)
    table = [{"operating_point": sel, **dataclasses.asdict(pt)} for sel, pt in cascade_table(border, source)]
    return CascadeReport(
        dataset=dataset,
        tau_border_selector=str(tau_border),
        tau_source_selector=str(tau_source),
        chosen=cascade_rates(cfg),
        table=table,
        n_records=len(border),
    )


def _row_name(sel: str) -> str:
    return "EER" if sel == "eer" else "BPCER_" + sel.removeprefix("auto:bpcer")


def render_cascade_report(report: CascadeReport, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2, ensure_ascii=False) + "\n"
    if fmt not in ("markdown", "md"):
        raise ValueError(f"unknown report format {fmt!r}")
    c = report.chosen
    lines = [f"# Cascade PAD assessment{': ' + report.dataset if report.dataset else ''}", ""]
    header = ("Metric", "Border threshold (τ)", "Source threshold (τ)", "Combined APCER (%)",
              "Worst species", "Combined BPCER (%)")
    rows = [(_row_name(r["operating_point"]), round_half_up(r["tau_border"]), round_half_up(r["tau_source"]),
             percent(r["apcer_worst"]), r["worst_species"], percent(r["bpcer"])) for r in report.table]
    lines += _table(header, rows)
    lines += ["", f"Chosen point: border {report.tau_border_selector} -> τ = {round_half_up(c.tau_border)}, "
                  f"source {report.tau_source_selector} -> τ = {round_half_up(c.tau_source)}", ""]
    point_rows = [(f"APCER_{s}", percent(v)) for s, v in c.apcer_per_species.items()]
    point_rows += [("BPCER", percent(c.bpcer)), ("ACER", percent(c.acer))]
    lines += _table(("Metric", "Score (%)"), point_rows)
    return "\n".join(lines) + "\n"
