"""Forecast quality metrics and citation-distribution analysis.

MAPE here is the unguarded evaluation form: it errors on zero-valued
truths rather than guarding the denominator, because evaluation is
defined only over the filtered population (papers with enough early
citations). The guarded variant used as a training objective lives in
the training module.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass
class EvalReport:
    """Per-horizon MAPE and ACC over an evaluation population."""

    mape: list[float]
    acc: list[float]
    epsilon: float
    population: int


def _check_pair(preds, truths) -> tuple[np.ndarray, np.ndarray]:
    preds = np.asarray(preds, dtype=np.float64)
    truths = np.asarray(truths, dtype=np.float64)
    if preds.shape != truths.shape:
        raise ValueError(
            f"got {preds.shape} predictions for {truths.shape} truths"
        )
    if preds.size == 0:
        raise ValueError("empty evaluation population")
    if np.any(truths < 1):
        raise DataError(
            "evaluation population contains zero-citation truths; "
            "apply the eligibility filter first"
        )
    return preds, truths


def mape(preds, truths) -> float:
    """Mean absolute percentage error over papers."""
    preds, truths = _check_pair(preds, truths)
    return float(np.mean(np.abs(preds - truths) / truths))


def acc(preds, truths, epsilon: float = 0.3) -> float:
    """Fraction of papers with relative error at most epsilon.

    The boundary counts as correct.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    preds, truths = _check_pair(preds, truths)
    return float(np.mean(np.abs(preds - truths) / truths <= epsilon))


@dataclass
class DistHistogram:
    """Log-binned citation-count histogram.

    ``counts[i]`` covers values in [edges[i], edges[i+1]); values below
    1 land in the dedicated underflow bin. Underflow plus bin counts
    always equals the population size.
    """

    edges: np.ndarray
    counts: np.ndarray
    underflow: int
    label: str

    @property
    def population(self) -> int:
        return int(self.counts.sum()) + self.underflow


def _log_edges(vmax: float, bins_per_decade: int) -> np.ndarray:
    top = 1 if vmax <= 1 else int(np.floor(bins_per_decade * np.log10(vmax))) + 1
    return np.power(10.0, np.arange(top + 1) / bins_per_decade)


def citation_histogram(
    counts,
    bins_per_decade: int = 5,
    label: str = "actual",
    edges: np.ndarray | None = None,
) -> DistHistogram:
    """Histogram of citation counts on logarithmic bins starting at 1.

    Pass precomputed ``edges`` to place several histograms on a shared
    axis; otherwise the edges are derived from the data maximum.
    """
    values = np.asarray(counts, dtype=np.float64)
    if values.size == 0:
        raise ValueError("empty count list")
    if bins_per_decade < 1:
        raise ValueError(f"bins_per_decade must be at least 1, got {bins_per_decade}")
    if edges is None:
        edges = _log_edges(float(values.max()), bins_per_decade)
    inside = values >= 1.0
    underflow = int(np.count_nonzero(~inside))
    idx = np.searchsorted(edges, values[inside], side="right") - 1
    if idx.size and (idx.min() < 0 or idx.max() >= len(edges) - 1):
        raise ValueError("values fall outside the provided edges")
    binned = np.bincount(idx, minlength=len(edges) - 1).astype(np.int64)
    return DistHistogram(edges=edges, counts=binned, underflow=underflow, label=label)


def distribution_report(
    actual, predicted, bins_per_decade: int = 5
) -> tuple[DistHistogram, DistHistogram, float]:
    """Histograms of actual and predicted counts on shared edges, plus
    the total-variation distance between their normalized forms."""
    a = np.asarray(actual, dtype=np.float64)
    p = np.asarray(predicted, dtype=np.float64)
    if a.shape != p.shape:
        raise ValueError(f"got {a.shape} actual values but {p.shape} predicted")
    if a.size == 0:
        raise ValueError("empty population")
    edges = _log_edges(float(max(a.max(), p.max())), bins_per_decade)
    hist_a = citation_histogram(a, bins_per_decade, "actual", edges)
    hist_p = citation_histogram(p, bins_per_decade, "predicted", edges)
    pa = np.concatenate(([hist_a.underflow], hist_a.counts)) / hist_a.population
    pp = np.concatenate(([hist_p.underflow], hist_p.counts)) / hist_p.population
    tv = 0.5 * float(np.abs(pa - pp).sum())
    return hist_a, hist_p, tv


def quartile_indices(values) -> list[np.ndarray]:
    """Index groups for the four quartiles of ``values``, ascending.

    Group k holds indices of the papers ranked in [n*k/4, n*(k+1)/4)
    by value; ties keep input order. The last group is the
    top-quartile-by-value subset.
    """
    values = np.asarray(values)
    if values.size == 0:
        raise ValueError("empty value list")
    order = np.argsort(values, kind="stable")
    n = values.size
    return [order[n * k // 4 : n * (k + 1) // 4] for k in range(4)]
