"""Relay positions: a static ring for ground relays, hotspot tracking for aerial relays."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import HexCell

KMEANS_MAX_ITER = 100
KMEANS_TOL_M = 0.1
REFINE_STEP_M = 25.0
REFINE_MAX_PASSES = 50


@dataclass
class PlacementResult:
    positions: np.ndarray  # (k, 2)
    objective_value: float
    stage1_positions: np.ndarray
    stage1_objective: float
    history: list[float]


def fixed_ring_placement(cell: HexCell, k: int, fraction: float = 2.0 / 3.0) -> np.ndarray:
    """k relays on a circle of radius ``fraction`` * circumradius at angles 2*pi*i/k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    radius = fraction * cell.circumradius
    ang = 2 * np.pi * np.arange(k) / k
    pts = np.asarray(cell.center) + radius * np.column_stack([np.cos(ang), np.sin(ang)])
    return _clip_to_cell(pts, cell)


def _clip_to_cell(pts: np.ndarray, cell: HexCell) -> np.ndarray:
    # pull outside points radially towards the centre until they are inside
    out = pts.copy()
    c = np.asarray(cell.center)
    for i in np.flatnonzero(~cell.contains(pts)):
        lo, hi = 0.0, 1.0
        for _ in range(50):
            mid = (lo + hi) / 2
            if cell.contains(c + mid * (pts[i] - c))[0]:
                lo = mid
            else:
                hi = mid
        out[i] = c + lo * (pts[i] - c)
    return out


def farthest_point_seeds(xy: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """First seed uniform at random, each next one the point farthest from those chosen."""
    idx = [int(rng.integers(len(xy)))]
    d2 = np.sum((xy - xy[idx[0]]) ** 2, axis=1)
    for _ in range(1, k):
        j = int(np.argmax(d2))
        idx.append(j)
        d2 = np.minimum(d2, np.sum((xy - xy[j]) ** 2, axis=1))
    return xy[idx].copy()


def weighted_kmeans(xy: np.ndarray, k: int, rng: np.random.Generator,
                    weights: np.ndarray | None = None) -> np.ndarray:
    """Lloyd iterations on the weighted squared-distance objective.

    Stops after 100 iterations or once no centroid moves by 0.1 m or more.
    Empty clusters keep their previous centre.
    """
    xy = np.asarray(xy, dtype=float)
    w = np.ones(len(xy)) if weights is None else np.asarray(weights, dtype=float)
    centers = farthest_point_seeds(xy, k, rng)
    for _ in range(KMEANS_MAX_ITER):
        labels = np.argmin(((xy[:, None, :] - centers[None]) ** 2).sum(-1), axis=1)
        new = centers.copy()
        for j in range(k):
            m = labels == j
            if w[m].sum() > 0:
                new[j] = (w[m, None] * xy[m]).sum(0) / w[m].sum()
        moved = np.max(np.hypot(*(new - centers).T))
        centers = new
        if moved < KMEANS_TOL_M:
            break
    return centers


def kmeans_cost(xy: np.ndarray, centers: np.ndarray, weights: np.ndarray | None = None) -> float:
    w = np.ones(len(xy)) if weights is None else weights
    d2 = ((xy[:, None, :] - centers[None]) ** 2).sum(-1).min(axis=1)
    return float((w * d2).sum())


_OFFSETS = [(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1) if (dx, dy) != (0, 0)]


def refine(positions: np.ndarray, objective: Callable[[np.ndarray], float], cell: HexCell,
           step: float = REFINE_STEP_M, max_passes: int = REFINE_MAX_PASSES) -> tuple[np.ndarray, list[float]]:
    """Greedy coordinate search on a 3x3 grid around each relay.

    Each relay in turn moves to the best of its 8 neighbouring grid points if
    that strictly improves the objective; passes repeat until none does.
    Candidates outside the cell are skipped. Returns positions and the
    objective after every accepted move (non-decreasing by construction).
    """
    pos = positions.copy()
    best = objective(pos)
    history = [best]
    for _ in range(max_passes):
        improved = False
        for j in range(len(pos)):
            cands = pos[j] + step * np.asarray(_OFFSETS)
            inside = cell.contains(cands)
            best_val, best_pt = best, None
            for pt in cands[inside]:
                trial = pos.copy()
                trial[j] = pt
                val = objective(trial)
                if val > best_val + 1e-12:
                    best_val, best_pt = val, pt
            if best_pt is not None:
                pos[j] = best_pt
                best = best_val
                history.append(best)
                improved = True
        if not improved:
            break
    return pos, history


def hotspot_placement(ue_xy: np.ndarray, k: int, objective: Callable[[np.ndarray], float] | None,
                      cell: HexCell, seed: int, weights: np.ndarray | None = None) -> PlacementResult:
    """Two-stage mobile relay placement.

    Stage 1 clusters the cell's users with weighted k-means. Stage 2 nudges
    each centroid over a 25 m grid to maximise ``objective`` (the interference
    aware utility supplied by the caller). With ``objective=None`` only stage 1
    runs and the objective value is reported as NaN.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    ue_xy = np.asarray(ue_xy, dtype=float)
    if len(ue_xy) == 0:
        raise ValueError("need at least one user")
    rng = np.random.default_rng(seed)
    stage1 = weighted_kmeans(ue_xy, k, rng, weights)
    if objective is None:
        return PlacementResult(stage1, math.nan, stage1, math.nan, [])
    start = objective(stage1)
    final, history = refine(stage1, objective, cell)
    return PlacementResult(final, history[-1], stage1, start, history)
