"""DET and EER curve series, the probit transform and Gaussian KDE."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from padeval import metrics
from padeval.model import ScoreSet

# Acklam's rational approximation to the normal quantile (relative error ~1.15e-9).
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425
_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)
# scalar libm routines instead of numpy's SIMD loops, whose last bit can vary by CPU
_erfc = np.vectorize(math.erfc, otypes=[np.float64])
_exp = np.vectorize(math.exp, otypes=[np.float64])
_log = np.vectorize(math.log, otypes=[np.float64])


def _poly(coeffs, x):
    out = np.zeros_like(x)
    for c in coeffs:
        out = out * x + c
    return out


def _lower_quantile(q: np.ndarray) -> np.ndarray:
    """Quantile for q in (0, 0.5], refined with one Halley step."""
    x = np.empty_like(q)
    tail = q < _P_LOW
    if tail.any():
        r = np.sqrt(-2.0 * _log(q[tail]))
        x[tail] = _poly(_C, r) / (_poly(_D, r) * r + 1.0)
    mid = ~tail
    if mid.any():
        u = q[mid] - 0.5
        r = u * u
        x[mid] = _poly(_A, r) * u / (_poly(_B, r) * r + 1.0)
    err = 0.5 * _erfc(-x / _SQRT2) - q
    u = err * _SQRT2PI * _exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def probit(p):
    """Inverse standard normal CDF.

    Accepts a scalar or array; every value must lie strictly inside (0, 1).
    The upper half is obtained by symmetry from the lower tail, where
    ``1 - p`` is computed without rounding error.
    """
    arr = np.asarray(p, dtype=np.float64)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise ValueError("probit is only defined on the open interval (0, 1)")
    upper = arr > 0.5
    q = np.where(upper, 1.0 - arr, arr)
    x = _lower_quantile(np.atleast_1d(q).astype(np.float64)).reshape(q.shape)
    x = np.where(upper, -x, x)
    x = np.where(arr == 0.5, 0.0, x)
    return float(x) if np.ndim(p) == 0 else x


def normal_cdf(x):
    x = np.asarray(x, dtype=np.float64)
    out = 0.5 * _erfc(-np.atleast_1d(x) / _SQRT2)
    return float(out[0]) if x.ndim == 0 else out.reshape(x.shape)


# -- DET and EER series -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CurveSeries:
    """(threshold, APCER, BPCER) triples ordered by increasing threshold."""

    label: str
    taus: np.ndarray
    apcer: np.ndarray
    bpcer: np.ndarray
    eer: float | None = None

    @property
    def points(self) -> list[tuple[float, float, float]]:
        return list(zip(self.taus.tolist(), self.apcer.tolist(), self.bpcer.tolist()))


@dataclass(frozen=True, eq=False)
class EerCurve:
    label: str
    taus: np.ndarray
    apcer: np.ndarray
    bpcer: np.ndarray
    crossing: metrics.EerResult


def _readonly(*arrays):
    for a in arrays:
        a.setflags(write=False)


def det_curve(scores: ScoreSet, species: str | None = None) -> CurveSeries:
    """DET series for one species (``None`` = worst case), EER attached for the legend."""
    grid = metrics.threshold_grid(scores)
    apc = metrics.apcer_curve(scores, species, grid)
    bpc = metrics.bpcer_curve(scores, grid)
    keep = np.ones(grid.size, dtype=bool)
    keep[1:] = (apc[1:] != apc[:-1]) | (bpc[1:] != bpc[:-1])
    taus, apc_k, bpc_k = grid[keep], apc[keep], bpc[keep]
    _readonly(taus, apc_k, bpc_k)
    result = metrics.eer_from_rates(grid, apc, bpc)
    return CurveSeries(species or "worst-case", taus, apc_k, bpc_k, result.eer)


def det_curves(scores: ScoreSet) -> list[CurveSeries]:
    return [det_curve(scores, s) for s in metrics.nonempty_species(scores)]


def eer_curve(scores: ScoreSet, species: str | None = None) -> EerCurve:
    grid = metrics.threshold_grid(scores)
    apc = metrics.apcer_curve(scores, species, grid)
    bpc = metrics.bpcer_curve(scores, grid)
    _readonly(grid, apc, bpc)
    return EerCurve(species or "worst-case", grid, apc, bpc, metrics.eer_from_rates(grid, apc, bpc))


# -- kernel density estimation ------------------------------------------------

BANDWIDTH_FLOOR = 1e-3


@dataclass(frozen=True, eq=False)
class DensitySeries:
    class_label: str
    xs: np.ndarray
    densities: np.ndarray
    bandwidth: float


def silverman_bandwidth(samples) -> float:
    """0.9 * min(std, IQR/1.34) * n^(-1/5), floored so score piles at 1.0 still get a kernel."""
    x = np.asarray(samples, dtype=np.float64)
    if x.size < 2:
        raise ValueError("bandwidth selection needs at least 2 samples")
    sd = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34) if q75 > q25 else sd
    return max(0.9 * spread * x.size ** -0.2, BANDWIDTH_FLOOR)


def kde(samples, xs=None, bandwidth: float | None = None, label: str = "", chunk: int = 32) -> DensitySeries:
    """Gaussian kernel density estimate evaluated at ``xs`` (default 512 points on [0, 1]).

    Samples are sorted before summation so the result does not depend on
    their order, bit for bit.
    """
    x = np.sort(np.asarray(samples, dtype=np.float64))
    if x.size < 2:
        raise ValueError("kde needs at least 2 samples")
    if not np.all(np.isfinite(x)):
        raise ValueError("kde samples must be finite")
    h = silverman_bandwidth(x) if bandwidth is None else float(bandwidth)
    if not h > 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth!r}")
    grid = np.linspace(0.0, 1.0, 512) if xs is None else np.asarray(xs, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("xs must be a non-empty strictly increasing sequence")
    dens = np.empty(grid.size)
    norm = 1.0 / (x.size * h * _SQRT2PI)
    for start in range(0, grid.size, chunk):
        z = (grid[start:start + chunk, None] - x[None, :]) / h
        dens[start:start + chunk] = np.exp(-0.5 * z * z).sum(axis=1) * norm
    _readonly(grid, dens)
    return DensitySeries(label, grid, dens, h)


def class_densities(scores: ScoreSet, xs=None, bandwidth: float | None = None) -> list[DensitySeries]:
    """Bona-fide-score KDE per class with at least 2 records, bona fide first."""
    out = []
    for lab in scores.taxonomy.labels:
        vals = scores.bona_fide_scores(lab)
        if vals.size >= 2:
            out.append(kde(vals, xs, bandwidth, label=lab))
    return out
