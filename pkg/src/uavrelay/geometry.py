"""Point patterns: PPP interferer fields, hexagonal BS layouts and hotspot user drops."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .scenario import TrafficField

SQRT3 = math.sqrt(3.0)


class Point(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class Region:
    """Disk (r_min == 0) or annulus around ``center``."""

    center: tuple[float, float] = (0.0, 0.0)
    r_min: float = 0.0
    r_max: float = 1.0

    def __post_init__(self):
        if not (0 <= self.r_min < self.r_max) or not math.isfinite(self.r_max):
            raise ValueError(f"invalid region: need 0 <= r_min < r_max < inf, got r_min={self.r_min}, r_max={self.r_max}")

    @property
    def area(self) -> float:
        return math.pi * (self.r_max**2 - self.r_min**2)


def sample_ppp(density: float, region: Region, seed: int) -> np.ndarray:
    """Homogeneous Poisson point process on a disk or annulus.

    Returns an ``(n, 2)`` array; n ~ Poisson(density * area).
    """
    if density < 0 or not math.isfinite(density):
        raise ValueError(f"density must be finite and >= 0, got {density}")
    rng = np.random.default_rng(seed)
    n = rng.poisson(density * region.area)
    # area-uniform radius via inverse CDF on r^2
    r = np.sqrt(region.r_min**2 + rng.random(n) * (region.r_max**2 - region.r_min**2))
    theta = rng.random(n) * 2 * np.pi
    cx, cy = region.center
    return np.column_stack([cx + r * np.cos(theta), cy + r * np.sin(theta)])


def hex_layout(rings: int, isd: float) -> np.ndarray:
    """BS sites on a hexagonal lattice, ring by ring, site 0 at the origin.

    Ring k holds 6k sites; neighbours are ``isd`` apart.
    """
    if rings < 0 or isd <= 0:
        raise ValueError("need rings >= 0 and isd > 0")
    sites = []
    for q in range(-rings, rings + 1):
        for r in range(-rings, rings + 1):
            ring = max(abs(q), abs(r), abs(q + r))
            if ring <= rings:
                x = q + 0.5 * r
                y = (SQRT3 / 2) * r
                # ring first, then counter-clockwise from angle 0
                sites.append((ring, round(math.atan2(y, x) % (2 * math.pi), 9), x, y))
    sites.sort()
    return isd * np.array([(x, y) for _, _, x, y in sites])


@dataclass(frozen=True)
class HexCell:
    """Voronoi cell of one lattice site: a regular hexagon with apothem isd/2."""

    center: tuple[float, float]
    isd: float

    @property
    def circumradius(self) -> float:
        return self.isd / SQRT3

    def contains(self, xy: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        d = np.atleast_2d(xy) - np.asarray(self.center)
        half = self.isd / 2 + tol
        ok = np.abs(d[:, 0]) <= half
        for ang in (np.pi / 3, 2 * np.pi / 3):
            ok &= np.abs(d[:, 0] * np.cos(ang) + d[:, 1] * np.sin(ang)) <= half
        return ok

    def sample_uniform(self, rng: np.random.Generator, n: int) -> np.ndarray:
        out = np.empty((0, 2))
        R = self.circumradius
        while len(out) < n:
            m = max(2 * (n - len(out)), 16)
            cand = np.asarray(self.center) + rng.uniform(-R, R, size=(m, 2))
            out = np.vstack([out, cand[self.contains(cand)]])
        return out[:n]


def hex_cells(bs_xy: np.ndarray, isd: float) -> list[HexCell]:
    return [HexCell((float(x), float(y)), isd) for x, y in bs_xy]


def locate(xy: np.ndarray, cells: list[HexCell]) -> np.ndarray:
    """Index of the cell containing each point, -1 outside the layout."""
    xy = np.atleast_2d(xy)
    out = np.full(len(xy), -1, dtype=np.int64)
    for i, cell in enumerate(cells):
        hit = (out < 0) & cell.contains(xy)
        out[hit] = i
    return out


@dataclass
class UserDrop:
    positions: np.ndarray  # (n, 2) metres
    cells: np.ndarray  # (n,) home cell index

    def __len__(self) -> int:
        return len(self.cells)

    def realized_asymmetry(self, hotspot_cell: int, n_cells: int) -> float:
        return np.count_nonzero(self.cells == hotspot_cell) / (len(self) / n_cells)


def hotspot_user_count(field: TrafficField, n_cells: int) -> int:
    return int(round(field.asymmetry_f * field.total_users / n_cells))


def sample_users(field: TrafficField, cells: list[HexCell], seed: int) -> UserDrop:
    """Drop users so the hotspot cell carries F times the mean per-cell traffic.

    The hotspot cell keeps a uniform baseline of round(U/N) users; its surplus
    is scattered as Gaussian clusters (truncated to the cell) around
    ``hotspot_centers_per_cell`` centres drawn uniformly in the cell. At F=1 the
    drop is therefore uniform. The remaining users are split as evenly as
    possible over the other cells and placed uniformly in them.
    """
    n_cells = len(cells)
    field.validate(n_cells)
    rng = np.random.default_rng(seed)
    hot = field.hotspot_cell
    n_hot = hotspot_user_count(field, n_cells)
    n_base = min(int(round(field.total_users / n_cells)), n_hot)
    n_surplus = n_hot - n_base

    positions = [cells[hot].sample_uniform(rng, n_base)]
    owners = [np.full(n_base, hot)]

    centers = cells[hot].sample_uniform(rng, field.hotspot_centers_per_cell)
    which = rng.integers(0, len(centers), size=n_surplus)
    clustered = np.empty((n_surplus, 2))
    todo = np.arange(n_surplus)
    while len(todo):
        cand = centers[which[todo]] + rng.normal(0.0, field.hotspot_spread_m, size=(len(todo), 2))
        ok = cells[hot].contains(cand)
        clustered[todo[ok]] = cand[ok]
        todo = todo[~ok]
    positions.append(clustered)
    owners.append(np.full(n_surplus, hot))

    others = [i for i in range(n_cells) if i != hot]
    rest = field.total_users - n_hot
    if others and rest > 0:
        counts = np.full(len(others), rest // len(others))
        extra = rng.choice(len(others), size=rest % len(others), replace=False)
        counts[extra] += 1
        for cell_idx, count in zip(others, counts):
            positions.append(cells[cell_idx].sample_uniform(rng, int(count)))
            owners.append(np.full(int(count), cell_idx))

    return UserDrop(np.vstack(positions), np.concatenate(owners).astype(np.int64))


def points_to_csv(xy: np.ndarray, cells: np.ndarray | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "cell"])
    labels = cells if cells is not None else np.full(len(xy), -1)
    for (x, y), c in zip(np.atleast_2d(xy), labels):
        w.writerow([f"{x:.3f}", f"{y:.3f}", int(c)])
    return buf.getvalue()
