"""Monte Carlo SIR sampler: the stochastic-geometry model behind the closed forms.

One draw: the serving relay sits at distance r with Rayleigh fading and path-loss
exponent 2 (aerial) or 4 (ground). Interferers form a PPP of density lam on the
annulus (r, W] around the receiver, each with its own Rayleigh fading and
exponent 4. K cancels in the ratio and is omitted.

Interferers beyond the window W are replaced by their mean contribution
pi*lam/W^2. The residual error this leaves on P(SIR > xi) is bounded by
``tail_bias_bound``; configurations where that bound exceeds 1e-3 are rejected.

Randomness is drawn in fixed blocks of ``BLOCK`` samples, each seeded from
(seed, block index), so sample i is the same value regardless of how blocks
are distributed over workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .propagation import RelayKind
from .scenario import derive_seed

BLOCK = 4096
MAX_TAIL_BIAS = 1e-3
INTERFERER_EXPONENT = 4.0


def serving_exponent(kind: RelayKind) -> float:
    return 2.0 if kind is RelayKind.SUAV else 4.0


def default_window(r: float) -> float:
    return 5.0 * max(r, 1.0)


def tail_bias_bound(lam: float, r: float, window: float) -> float:
    """Upper bound on |P_mc(SIR > xi) - P(SIR > xi)| over all xi.

    With c = xi * r**alpha_s the conditional CCDF is L_near(c) * L_far(c), and
    exp(-c*m) <= L_far(c) <= exp(-c*m + pi*lam*c^2 / (3 W^6)), m = pi*lam/W^2.
    Since also L_far <= 1, the gap is at most
    L_near * min(exp(-c*m) * expm1(pi*lam*c^2 / (3 W^6)), 1 - exp(-c*m));
    the bound is its sup over c.
    """
    if lam == 0:
        return 0.0
    c = np.logspace(-8, 12, 4001)
    sc = np.sqrt(c)
    log_near = -lam * np.pi * sc * (np.arctan(window**2 / sc) - np.arctan(r**2 / sc))
    m = np.pi * lam / window**2
    upper = np.exp(-c * m) * np.expm1(np.minimum(np.pi * lam * c**2 / (3 * window**6), 700))
    gap = np.exp(log_near) * np.minimum(upper, -np.expm1(-c * m))
    return float(np.max(gap))


@dataclass(frozen=True)
class McConfig:
    kind: RelayKind
    lam: float
    r: float
    samples: int = 100_000
    window_radius: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.window_radius is None:
            object.__setattr__(self, "window_radius", default_window(self.r))
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.lam < 0 or not self.r > 0:
            raise ValueError("need lam >= 0 and r > 0")
        if not self.window_radius > self.r:
            raise ValueError("window_radius must exceed r")
        bound = tail_bias_bound(self.lam, self.r, self.window_radius)
        if bound > MAX_TAIL_BIAS:
            raise ValueError(f"window_radius={self.window_radius} too small: tail bias bound {bound:.2e} > {MAX_TAIL_BIAS}")


def _sir_block(rng: np.random.Generator, kind: RelayKind, lam: float, r: np.ndarray,
               window: np.ndarray) -> np.ndarray:
    n = len(r)
    signal = rng.exponential(1.0, n) * r ** (-serving_exponent(kind))
    r2, w2 = r**2, window**2
    counts = rng.poisson(lam * np.pi * (w2 - r2))
    owner = np.repeat(np.arange(n), counts)
    d2 = r2[owner] + rng.random(owner.size) * (w2 - r2)[owner]
    h = rng.exponential(1.0, owner.size)
    interference = np.bincount(owner, weights=h / d2**2, minlength=n).astype(float)
    interference += np.pi * lam / w2
    with np.errstate(divide="ignore"):
        return signal / interference


def _block(cfg: McConfig, b: int) -> np.ndarray:
    start = b * BLOCK
    n = min(BLOCK, cfg.samples - start)
    rng = np.random.default_rng(derive_seed(cfg.seed, "mc-block", b))
    r = np.full(n, float(cfg.r))
    return _sir_block(rng, cfg.kind, cfg.lam, r, np.full(n, float(cfg.window_radius)))


def _n_blocks(samples: int) -> int:
    return -(-samples // BLOCK)


def sample_sir(cfg: McConfig, index: int) -> float:
    """SIR draw number ``index``; +inf when the window holds no interferer and lam == 0."""
    if not 0 <= index < cfg.samples:
        raise IndexError(index)
    return float(_block(cfg, index // BLOCK)[index % BLOCK])


def _blocks_range(args):
    cfg, lo, hi = args
    return [_block(cfg, b) for b in range(lo, hi)]


def sample_all(cfg: McConfig, workers: int = 1) -> np.ndarray:
    """All ``cfg.samples`` draws in index order."""
    nb = _n_blocks(cfg.samples)
    if workers <= 1 or nb == 1:
        return np.concatenate([_block(cfg, b) for b in range(nb)])
    edges = np.linspace(0, nb, min(workers, nb) + 1).astype(int)
    jobs = [(cfg, int(lo), int(hi)) for lo, hi in zip(edges[:-1], edges[1:])]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_blocks_range, jobs))
    return np.concatenate([blk for part in parts for blk in part])


def fraction_exceeding(samples: np.ndarray, thresholds: Sequence[float]) -> np.ndarray:
    thr = np.asarray(thresholds, dtype=float)
    if np.any(np.diff(thr) < 0):
        raise ValueError("thresholds must be sorted ascending")
    s = np.sort(samples)
    # strict exceedance; +inf exceeds every finite threshold
    return (len(s) - np.searchsorted(s, thr, side="right")) / len(s)


def empirical_ccdf(cfg: McConfig, thresholds: Sequence[float], workers: int = 1) -> np.ndarray:
    """Fraction of draws with SIR > xi for each (ascending) threshold.

    A threshold of exactly 0 returns 1: every draw is positive.
    """
    return fraction_exceeding(sample_all(cfg, workers), thresholds)


def sample_sir_nearest(kind: RelayKind, lam: float, samples: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """SIR draws with the serving distance itself random: the nearest point of the PPP.

    Returns (r, sir). r has density 2*pi*lam*r*exp(-lam*pi*r^2).
    """
    if not lam > 0:
        raise ValueError("lam must be > 0")
    rs, sirs = [], []
    for b in range(_n_blocks(samples)):
        n = min(BLOCK, samples - b * BLOCK)
        rng = np.random.default_rng(derive_seed(seed, "mc-nearest", b))
        r = np.sqrt(rng.exponential(1.0, n) / (lam * np.pi))
        r = np.maximum(r, 1e-12)
        rs.append(r)
        sirs.append(_sir_block(rng, kind, lam, r, np.maximum(5.0, 5.0 * r)))
    return np.concatenate(rs), np.concatenate(sirs)


class Deviation(NamedTuple):
    max_abs_deviation: float
    mean_abs_deviation: float


def compare(empirical: Sequence[float], analytic: Sequence[float]) -> Deviation:
    a = np.asarray(empirical, dtype=float)
    b = np.asarray(analytic, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"curve length mismatch: {a.shape} vs {b.shape}")
    d = np.abs(a - b)
    if d.size == 0:
        return Deviation(0.0, 0.0)
    return Deviation(float(d.max()), float(d.mean()))


def mean_log2_capacity(sir: np.ndarray) -> tuple[float, float]:
    """Sample mean of log2(1 + SIR) and its standard error."""
    v = np.log2(1.0 + sir)
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(len(v)))
