"""ISO/IEC 30107-3 error rates over a :class:`~padeval.model.ScoreSet`.

All rates are step functions of the threshold that only change at observed
bona fide scores, so they are evaluated exactly on the grid
``{0, 1} U {observed bona-fide-class scores}``. A record is accepted as
bona fide iff its bona fide score is strictly greater than the threshold.

Species arguments accept a species name or ``None`` for the worst case
over the non-empty scored attack species.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from padeval.errors import EmptyClassError
from padeval.model import ScoreSet, check_tau

AP_LADDER = (10, 20, 50, 100, 200, 500, 1000, 10000)


@dataclass(frozen=True)
class EerResult:
    eer: float
    tau: float
    exact: bool


@dataclass(frozen=True)
class BpcerApResult:
    """BPCER at the smallest grid threshold whose APCER is at most ``1/ap``.

    ``interpolated_bpcer``/``interpolated_tau`` are set when the target
    falls strictly between two adjacent grid points; they are the linear
    interpolation of BPCER (and threshold) in APCER between those points.
    """

    ap: int
    target_apcer: float
    bpcer: float
    tau: float
    apcer: float
    saturated: bool
    interpolated_bpcer: float | None = None
    interpolated_tau: float | None = None


@dataclass(frozen=True)
class OperatingPoint:
    tau: float
    bpcer: float
    apcer_per_species: dict[str, float]
    apcer_worst: float
    worst_species: str
    acer: float
    saturated: bool = False
    interpolated: bool = False


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with rows = true labels, columns = predicted labels."""

    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]
    counts: np.ndarray

    def total(self) -> int:
        return int(self.counts.sum())

    def as_dict(self) -> dict:
        return {
            "rows": list(self.row_labels),
            "columns": list(self.col_labels),
            "counts": self.counts.tolist(),
        }


def threshold_grid(scores: ScoreSet) -> np.ndarray:
    return np.unique(np.concatenate(([0.0, 1.0], scores.scores[:, 0])))


def _require_bona_fide(scores: ScoreSet) -> np.ndarray:
    bf = scores.bona_fide_scores(scores.taxonomy.bona_fide_label)
    if bf.size == 0:
        raise EmptyClassError("bona fide class has no records")
    return bf


def _species_scores(scores: ScoreSet, species: str) -> np.ndarray:
    if species not in scores.taxonomy.all_species:
        raise KeyError(f"unknown attack species {species!r}")
    vals = scores.bona_fide_scores(species)
    if vals.size == 0:
        raise EmptyClassError(f"attack species {species!r} has no records")
    return vals


def nonempty_species(scores: ScoreSet) -> list[str]:
    """Scored attack species with at least one record, in manifest order."""
    counts = scores.n_per_species
    out = [s for s in scores.taxonomy.attack_species if counts[s] > 0]
    if not out:
        raise EmptyClassError("no attack species has any records")
    return out


def bpcer(scores: ScoreSet, tau: float) -> float:
    tau = check_tau(tau)
    bf = _require_bona_fide(scores)
    return int(np.count_nonzero(bf <= tau)) / bf.size


def apcer_pais(scores: ScoreSet, species: str, tau: float) -> float:
    tau = check_tau(tau)
    vals = _species_scores(scores, species)
    return int(np.count_nonzero(vals > tau)) / vals.size


def apcer_worst(scores: ScoreSet, tau: float) -> tuple[float, str]:
    """Largest per-species APCER; ties go to the species listed first."""
    best, name = -1.0, ""
    for s in nonempty_species(scores):
        rate = apcer_pais(scores, s, tau)
        if rate > best:
            best, name = rate, s
    return best, name


def acer_from_rates(apcer_worst: float, bpcer: float) -> float:
    """Average classification error rate: mean of the worst-case APCER and the BPCER."""
    return (apcer_worst + bpcer) / 2


def acer(scores: ScoreSet, tau: float) -> float:
    return acer_from_rates(apcer_worst(scores, tau)[0], bpcer(scores, tau))


def operating_point(scores: ScoreSet, tau: float, *, saturated: bool = False, interpolated: bool = False) -> OperatingPoint:
    per_species = {s: apcer_pais(scores, s, tau) for s in nonempty_species(scores)}
    worst, name = apcer_worst(scores, tau)
    b = bpcer(scores, tau)
    return OperatingPoint(
        tau=float(tau),
        bpcer=b,
        apcer_per_species=per_species,
        apcer_worst=worst,
        worst_species=name,
        acer=acer_from_rates(worst, b),
        saturated=saturated,
        interpolated=interpolated,
    )


# -- curves over the threshold grid -----------------------------------------


def _accept_counts(values: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Number of ``values`` strictly above each grid threshold."""
    return values.size - np.searchsorted(np.sort(values), grid, side="right")


def bpcer_curve(scores: ScoreSet, grid: np.ndarray) -> np.ndarray:
    bf = _require_bona_fide(scores)
    return (bf.size - _accept_counts(bf, grid)) / bf.size


def apcer_curve(scores: ScoreSet, species: str | None, grid: np.ndarray) -> np.ndarray:
    """APCER at each grid threshold for one species, or the pointwise worst case."""
    names = nonempty_species(scores) if species is None else [species]
    curves = [_accept_counts(v, grid) / v.size for v in (_species_scores(scores, s) for s in names)]
    return np.max(curves, axis=0)


def eer_from_rates(grid: np.ndarray, apcer: np.ndarray, bpcer: np.ndarray) -> EerResult:
    """Equal error rate from rate curves sampled on an increasing grid.

    An exact equality at a grid point wins. Otherwise the first sign change
    of ``apcer - bpcer`` between neighbours is linearly interpolated in the
    threshold. With no sign change the grid point minimising
    ``|apcer - bpcer|`` is used and the mean of both rates reported.
    """
    grid = np.asarray(grid, dtype=np.float64)
    apcer = np.asarray(apcer, dtype=np.float64)
    bpcer = np.asarray(bpcer, dtype=np.float64)
    diff = apcer - bpcer
    hits = np.flatnonzero(diff == 0.0)
    if hits.size:
        k = int(hits[0])
        return EerResult(float(apcer[k]), float(grid[k]), True)
    cross = np.flatnonzero((diff[:-1] > 0) & (diff[1:] < 0))
    if cross.size:
        k = int(cross[0])
        frac = diff[k] / (diff[k] - diff[k + 1])
        a = apcer[k] + frac * (apcer[k + 1] - apcer[k])
        b = bpcer[k] + frac * (bpcer[k + 1] - bpcer[k])
        tau = grid[k] + frac * (grid[k + 1] - grid[k])
        return EerResult(float((a + b) / 2), float(tau), False)
    k = int(np.argmin(np.abs(diff)))
    return EerResult(float((apcer[k] + bpcer[k]) / 2), float(grid[k]), False)


def eer(scores: ScoreSet, species: str | None = None) -> EerResult:
    grid = threshold_grid(scores)
    return eer_from_rates(grid, apcer_curve(scores, species, grid), bpcer_curve(scores, grid))


def bpcer_at_ap(scores: ScoreSet, ap: int, species: str | None = None) -> BpcerApResult:
    """BPCER_AP: the BPCER once the APCER is held at ``1/ap``.

    The qualifying test ``accepted * ap <= n`` is done in integers so the
    comparison against ``1/ap`` is exact. If only the top threshold (1.0)
    meets the target, i.e. attacks scoring exactly 1.0 can only be stopped
    by rejecting everything, the result is flagged ``saturated``.
    """
    if isinstance(ap, bool) or int(ap) != ap or ap < 2:
        raise ValueError(f"attack potential must be an integer >= 2, got {ap!r}")
    ap = int(ap)
    grid = threshold_grid(scores)
    names = nonempty_species(scores) if species is None else [species]
    ok = np.ones(grid.size, dtype=bool)
    rates = []
    for name in names:
        vals = _species_scores(scores, name)
        accepted = _accept_counts(vals, grid)
        ok &= accepted * ap <= vals.size
        rates.append(accepted / vals.size)
    apc = np.max(rates, axis=0)
    bpc = bpcer_curve(scores, grid)
    target = 1.0 / ap
    k = int(np.argmax(ok))  # ok[-1] is always true: nothing scores above 1.0
    saturated = k == grid.size - 1 and k > 0
    interp_b = interp_t = None
    if k > 0 and not saturated and apc[k] < target:
        frac = (apc[k - 1] - target) / (apc[k - 1] - apc[k])
        interp_b = float(bpc[k - 1] + frac * (bpc[k] - bpc[k - 1]))
        interp_t = float(grid[k - 1] + frac * (grid[k] - grid[k - 1]))
    return BpcerApResult(
        ap=ap,
        target_apcer=target,
        bpcer=float(bpc[k]),
        tau=float(grid[k]),
        apcer=float(apc[k]),
        saturated=saturated,
        interpolated_bpcer=interp_b,
        interpolated_tau=interp_t,
    )


def bpcer_ladder(scores: ScoreSet, species: str | None = None, aps=AP_LADDER) -> list[BpcerApResult]:
    return [bpcer_at_ap(scores, ap, species) for ap in sorted(aps)]


def predict_labels(scores: ScoreSet, tau: float) -> list[str]:
    """Bona fide if accepted, else the highest-scoring attack class (first listed wins ties)."""
    tau = check_tau(tau)
    classes = scores.taxonomy.classes
    attack_idx = np.argmax(scores.scores[:, 1:], axis=1) + 1
    accepted = scores.scores[:, 0] > tau
    return [classes[0] if acc else classes[j] for acc, j in zip(accepted, attack_idx)]


def confusion_matrix(scores: ScoreSet, tau: float, mode: str = "full") -> ConfusionMatrix:
    tax = scores.taxonomy
    predicted = predict_labels(scores, tau)
    if mode == "full":
        rows, cols = tax.labels, tax.classes
        row_of = {lab: i for i, lab in enumerate(rows)}
        col_of = {lab: i for i, lab in enumerate(cols)}
    elif mode == "binary":
        rows = cols = (tax.bona_fide_label, "attack")
        row_of = {lab: (0 if lab == tax.bona_fide_label else 1) for lab in tax.labels}
        col_of = row_of
    else:
        raise ValueError(f"mode must be 'full' or 'binary', got {mode!r}")
    counts = np.zeros((len(rows), len(cols)), dtype=np.int64)
    for true, pred in zip(scores.labels, predicted):
        counts[row_of[true], col_of[pred]] += 1
    return ConfusionMatrix(tuple(rows), tuple(cols), counts)


def collapse_confusion(cm: ConfusionMatrix, bona_fide_label: str) -> ConfusionMatrix:
    """Fold every non-bona-fide row and column of ``cm`` into a single attack class."""
    r = np.array([0 if lab == bona_fide_label else 1 for lab in cm.row_labels])
    c = np.array([0 if lab == bona_fide_label else 1 for lab in cm.col_labels])
    out = np.zeros((2, 2), dtype=np.int64)
    np.add.at(out, (r[:, None], c[None, :]), cm.counts)
    return ConfusionMatrix((bona_fide_label, "attack"), (bona_fide_label, "attack"), out)


def parse_selector(selector: str | float) -> float | int:
    """A literal threshold in [0, 1], or the attack potential N of ``auto:bpcerN``."""
    if isinstance(selector, (int, float)) and not isinstance(selector, bool):
        return check_tau(selector)
    text = str(selector).strip()
    if text.lower().startswith("auto:bpcer"):
        tail = text[len("auto:bpcer"):]
        if tail.isdigit() and int(tail) in AP_LADDER:
            return int(tail)
        raise ValueError(f"threshold selector {text!r}: N must be one of {AP_LADDER}")
    try:
        value = float(text)
    except ValueError:
        raise ValueError(f"threshold selector {text!r} is neither a number nor auto:bpcerN") from None
    return check_tau(value)


def resolve_threshold(scores: ScoreSet, selector: str | float, species: str | None = None
                      ) -> tuple[float, BpcerApResult | None]:
    parsed = parse_selector(selector)
    if isinstance(parsed, int):
        res = bpcer_at_ap(scores, parsed, species)
        return res.tau, res
    return parsed, None
