"""Path loss, link-state table, Rayleigh fading and SINR."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .scenario import RadioConfig

# distances below the reference distance are clamped to it
MIN_DISTANCE_M = 1.0


class ChannelState(enum.Enum):
    LOS = "LoS"
    NLOS = "NLoS"


class LinkKind(enum.Enum):
    BS_TO_UE = "BsToUe"
    BS_TO_GROUND_RN = "BsToGroundRn"
    GROUND_RN_TO_UE = "GroundRnToUe"
    BS_TO_SUAV_RN = "BsToSuavRn"
    SUAV_RN_TO_UE = "SuavRnToUe"
    INTERFERENCE = "Interference"


class RelayKind(enum.Enum):
    SUAV = "SuavRn"
    GROUND = "GroundRn"

    @property
    def access_link(self) -> LinkKind:
        return LinkKind.SUAV_RN_TO_UE if self is RelayKind.SUAV else LinkKind.GROUND_RN_TO_UE

    @property
    def backhaul_link(self) -> LinkKind:
        return LinkKind.BS_TO_SUAV_RN if self is RelayKind.SUAV else LinkKind.BS_TO_GROUND_RN


_LINK_STATES = {
    LinkKind.BS_TO_UE: ChannelState.NLOS,
    LinkKind.BS_TO_GROUND_RN: ChannelState.LOS,
    LinkKind.GROUND_RN_TO_UE: ChannelState.NLOS,
    LinkKind.BS_TO_SUAV_RN: ChannelState.LOS,
    LinkKind.SUAV_RN_TO_UE: ChannelState.LOS,
    LinkKind.INTERFERENCE: ChannelState.NLOS,
}


def link_state(kind: LinkKind) -> ChannelState:
    return _LINK_STATES[kind]


def exponent(state: ChannelState, radio: RadioConfig) -> float:
    return radio.alpha_los if state is ChannelState.LOS else radio.alpha_nlos


def pathloss(d, state: ChannelState, radio: RadioConfig):
    """Linear gain K * d**-alpha with d in metres.

    Accepts scalars or arrays. Distances in (0, 1) m are clamped to 1 m;
    non-positive distances raise ValueError.
    """
    d_arr = np.asarray(d, dtype=float)
    if np.any(~(d_arr > 0)):
        raise ValueError("pathloss distance must be > 0")
    gain = radio.K * np.maximum(d_arr, MIN_DISTANCE_M) ** (-exponent(state, radio))
    return float(gain) if np.ndim(gain) == 0 else gain


class FadingStream:
    """Seeded source of Rayleigh power fading gains, h ~ Exp(1)."""

    def __init__(self, seed: int):
        self._rng = np.random.default_rng(seed)

    def sample(self, size=None):
        return self._rng.exponential(1.0, size=size)


def fading_sample(stream: FadingStream, size=None):
    return stream.sample(size)


@dataclass(frozen=True)
class Link:
    tx_power_w: float
    distance_m: float
    state: ChannelState
    fading: float = 1.0

    def received_power(self, radio: RadioConfig) -> float:
        return self.tx_power_w * self.fading * pathloss(self.distance_m, self.state, radio)


def sinr(signal: Link, interferers: Iterable[Link], noise_power_w: float, radio: RadioConfig) -> float:
    """Signal over summed interference plus noise.

    With no interferers and zero noise the ratio is ``math.inf``.
    """
    s = signal.received_power(radio)
    denom = sum(link.received_power(radio) for link in interferers) + noise_power_w
    if denom == 0:
        return float("inf")
    return s / denom
