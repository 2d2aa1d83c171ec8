"""Closed-form SIR CCDFs for aerial and ground relays and quantities derived from them.

Distances and densities are dimensionless: one distance unit (1 km by default
when mapping from the simulator) and points per unit area. The closed forms
only hold in a fixed unit, and the aerial/ground curves cross at r = 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Union

import numpy as np
from scipy import integrate

from .propagation import RelayKind

QUAD_TOL = 1e-6
DEFAULT_CAP = 4.8


@dataclass(frozen=True)
class SirQuery:
    kind: RelayKind
    lam: float
    r: float
    xi: float

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if not self.r > 0:
            raise ValueError(f"r must be > 0, got {self.r}")
        if not self.xi >= 0:
            raise ValueError(f"xi must be >= 0, got {self.xi}")


def _ccdf(kind: RelayKind, lam, r, xi):
    s = np.sqrt(xi)
    if kind is RelayKind.SUAV:
        expo = lam * np.pi * r * s * np.arctan(s / r)
    else:
        expo = lam * np.pi * r**2 * s * np.arctan(s)
    return np.exp(-expo)


def ccdf_sir(q: SirQuery) -> float:
    """P(SIR > xi) for a receiver at distance r from its relay.

    Aerial relay (LoS serving link):  exp(-lam*pi*r*sqrt(xi)*atan(sqrt(xi)/r))
    Ground relay (NLoS serving link): exp(-lam*pi*r**2*sqrt(xi)*atan(sqrt(xi)))
    """
    return float(_ccdf(q.kind, q.lam, q.r, q.xi))


def ccdf_curve(kind: RelayKind, lam: float, r: float, xi) -> np.ndarray:
    """Vectorised ccdf_sir over an array of thresholds."""
    SirQuery(kind, lam, r, 0.0)
    xi = np.asarray(xi, dtype=float)
    if np.any(xi < 0):
        raise ValueError("thresholds must be >= 0")
    return _ccdf(kind, lam, r, xi)


def outage(q: SirQuery) -> float:
    """P(SIR <= xi_min); ``q.xi`` is the minimum acceptable SIR."""
    return 1.0 - ccdf_sir(q)


class ErgodicCapacity(NamedTuple):
    bits_per_hz: float
    capped: bool  # True when lambda == 0 and the integral diverges


def ergodic_capacity(kind: RelayKind, lam: float, r: float, cap: float = DEFAULT_CAP,
                     tol: float = QUAD_TOL) -> ErgodicCapacity:
    """E[log2(1 + SIR)] = integral over t >= 0 of P(SIR > 2**t - 1).

    Without interferers the SIR is infinite, so ``cap`` is returned with the
    ``capped`` flag set instead.
    """
    SirQuery(kind, lam, r, 0.0)
    if lam == 0:
        return ErgodicCapacity(float(cap), True)
    val, _ = integrate.quad(lambda t: _ccdf(kind, lam, r, np.expm1(t * math.log(2))),
                            0, np.inf, epsabs=tol, epsrel=0, limit=200)
    return ErgodicCapacity(float(val), False)


@dataclass(frozen=True)
class NearestPoint:
    """Distance to the nearest point of a PPP: f(r) = 2*pi*lam*r*exp(-lam*pi*r^2)."""

    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("NearestPoint needs lam > 0")

    def pdf(self, r):
        return 2 * np.pi * self.lam * r * np.exp(-self.lam * np.pi * r**2)

    @property
    def support(self) -> tuple[float, float]:
        return 0.0, math.inf


@dataclass(frozen=True)
class UniformDisk:
    """Receiver uniform in a disk of radius R around its relay: f(r) = 2r/R^2."""

    R: float

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError("UniformDisk needs R > 0")

    def pdf(self, r):
        return np.where((r >= 0) & (r <= self.R), 2 * r / self.R**2, 0.0)

    @property
    def support(self) -> tuple[float, float]:
        return 0.0, self.R


@dataclass(frozen=True)
class FixedDistance:
    r: float

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("FixedDistance needs r > 0")


DistanceLaw = Union[NearestPoint, UniformDisk, FixedDistance]


@dataclass(frozen=True)
class Metric:
    """What to average: ``name`` in {"ccdf", "outage", "capacity"}; ``xi`` for the first two."""

    name: str
    xi: float = 1.0
    cap: float = DEFAULT_CAP

    def __post_init__(self):
        if self.name not in ("ccdf", "outage", "capacity"):
            raise ValueError(f"unknown metric {self.name!r}")

    def pointwise(self, kind: RelayKind, lam: float) -> Callable[[float], float]:
        if self.name == "ccdf":
            return lambda r: ccdf_sir(SirQuery(kind, lam, r, self.xi))
        if self.name == "outage":
            return lambda r: outage(SirQuery(kind, lam, r, self.xi))
        return lambda r: ergodic_capacity(kind, lam, r, self.cap).bits_per_hz


def mean_over_distance(metric: Metric, kind: RelayKind, lam: float, law: DistanceLaw,
                       tol: float = QUAD_TOL) -> float:
    """Average a per-distance metric over the serving-distance law."""
    f = metric.pointwise(kind, lam)
    if isinstance(law, FixedDistance):
        return f(law.r)
    lo, hi = law.support
    # r = 0 is excluded from the metric's domain; the integrand vanishes there anyway
    val, _ = integrate.quad(lambda r: f(r) * float(law.pdf(r)) if r > 0 else 0.0,
                            lo, hi, epsabs=tol, epsrel=0, limit=200)
    return float(val)


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x, dtype=float))
