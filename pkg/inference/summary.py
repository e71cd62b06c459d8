# inference/summary.py
"""Posterior summaries of sampler draws, tabulated with pandas."""
import math
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from engine.errors import DomainError
from inference.sampler import PosteriorDraws
from utils.estimators import batch_means_se

INTERVAL = (0.05, 0.95)


def _describe(series: pd.Series) -> Dict:
    std = series.std(ddof=1)
    return {
        "mean": float(series.mean()),
        "std": 0.0 if math.isnan(std) else float(std),
        "lower": float(series.quantile(INTERVAL[0])),
        "upper": float(series.quantile(INTERVAL[1])),
    }


def draws_frame(draws: PosteriorDraws) -> pd.DataFrame:
    """One row per retained draw: chain, iteration, lambda and change-point count."""
    return pd.DataFrame({
        "chain": draws.chains,
        "iteration": draws.iterations,
        "lambda": np.asarray(draws.rates, dtype=float),
        "n_changepoints": draws.counts,
    })


def count_distribution(draws: PosteriorDraws) -> Dict[int, float]:
    freq = pd.Series(draws.counts).value_counts(normalize=True).sort_index()
    return {int(k): float(v) for k, v in freq.items()}


def change_probability(draws: PosteriorDraws, grid: Sequence[float], dt: Optional[float] = None) -> List[float]:
    """Posterior probability of at least one change point in (g, g + dt] for each grid point.

    ``dt`` defaults to the grid spacing (the last spacing for the final point).
    """
    points = np.asarray(grid, dtype=float)
    if points.size == 0:
        return []
    if dt is None:
        steps = np.diff(points)
        widths = np.append(steps, steps[-1]) if steps.size else np.array([draws.window])
    else:
        widths = np.full(points.size, float(dt))
    hits = np.zeros(points.size)
    for taus in draws.taus:
        if not taus:
            continue
        arr = np.asarray(taus)
        # count of taus in (g, g + w]
        inside = np.searchsorted(arr, points + widths, side="right") - np.searchsorted(arr, points, side="right")
        hits += inside > 0
    return (hits / len(draws)).tolist()


def location_medians(draws: PosteriorDraws, k: int) -> List[float]:
    """Median of each ordered change point over the draws with exactly k change points."""
    selected = [taus for taus in draws.taus if len(taus) == k]
    if k == 0 or not selected:
        return []
    return pd.DataFrame(selected).median(axis=0).tolist()


def mean_function(draws: PosteriorDraws, grid: Sequence[float]) -> List[float]:
    """E{mu_{z(t)} | data} on the grid, from the per-segment theta draws."""
    if not draws.thetas:
        raise DomainError("[inference/summary.py] draws carry no theta samples")
    points = np.asarray(grid, dtype=float)
    total = np.zeros(points.size)
    for taus, thetas in zip(draws.taus, draws.thetas):
        # segment index of t: number of change points strictly before t
        seg = np.searchsorted(np.asarray(taus, dtype=float), points, side="left")
        means = np.asarray([theta[0] for theta in thetas])
        total += means[np.minimum(seg, means.size - 1)]
    return (total / len(draws)).tolist()


def posterior_summary(draws: PosteriorDraws, grid: Optional[Sequence[float]] = None,
                      dt: Optional[float] = None) -> Dict:
    """Summary record of a (possibly multi-chain) sampler run.

    Args:
        draws: Post-burn-in draws
        grid: Time points for the change probability and the mean function
        dt: Width of the change-probability intervals

    Returns:
        JSON-ready dictionary
    """
    if len(draws) == 0:
        raise DomainError("[inference/summary.py] cannot summarize empty draws")
    frame = draws_frame(draws)
    counts = count_distribution(draws)
    modal = max(counts, key=lambda k: (counts[k], -k))
    summary = {
        "n_draws": len(draws),
        "window": draws.window,
        "lambda": _describe(frame["lambda"]),
        "n_changepoints": _describe(frame["n_changepoints"].astype(float)),
        "count_distribution": {str(k): v for k, v in counts.items()},
        "modal_count": modal,
        "location_medians": location_medians(draws, modal),
        "acceptance": dict(draws.acceptance),
        "chain_means": {
            str(chain): {"lambda": float(group["lambda"].mean()),
                         "n_changepoints": float(group["n_changepoints"].mean())}
            for chain, group in frame.groupby("chain", sort=True)
        },
    }
    if len(draws) >= 40:
        summary["lambda"]["mcse"] = batch_means_se(frame["lambda"].to_numpy())
        summary["n_changepoints"]["mcse"] = batch_means_se(frame["n_changepoints"].to_numpy(dtype=float))
    if grid is not None:
        summary["grid"] = [float(g) for g in grid]
        summary["change_probability"] = change_probability(draws, grid, dt)
        if draws.thetas:
            summary["mean_function"] = mean_function(draws, grid)
    return summary
