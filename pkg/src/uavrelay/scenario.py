"""Experiment description: layout, radio constants, traffic field, deployment and seeding.

Scenario files are JSON documents with a ``version`` key. Every key is optional
except ``master_seed``; unknown keys are rejected so typos fail loudly.

Schema (version 1, defaults shown)::

    {
      "version": 1,
      "master_seed": <required, 0 <= s < 2**64>,
      "drops": 20,
      "layout":  {"rings": 2, "isd_m": 500.0},
      "radio":   {"K": 1e-4, "alpha_los": 2.0, "alpha_nlos": 4.0,
                  "tx_power_bs_w": 20.0, "tx_power_rn_w": 5.0,
                  "noise_power_w": 0.0, "bandwidth_hz": 1e7,
                  "spectral_efficiency_cap": 4.8, "calibration": 3.5},
      "traffic": {"total_users": 760, "asymmetry_f": 1.0, "hotspot_cell": 0,
                  "hotspot_spread_m": 50.0, "hotspot_centers_per_cell": 2},
      "deployment": {"variant": "Reference", "relays_per_bs": 6,
                     "ring_fraction": 0.6667}
    }

The layout defaults (two rings, 500 m inter-site distance) and 20 drops are a
desk-scale urban macro layout; K, the path-loss exponents and the six relays
per BS are the model constants.
"""
from __future__ import annotations

import dataclasses
import enum
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from typing import Any, Mapping

SCHEMA_VERSION = 1
SEED_ENV_VAR = "UAVRELAY_MASTER_SEED"
_U64 = 2**64


class ScenarioError(ValueError):
    """Raised when a scenario document cannot be parsed or fails validation."""


class Variant(str, enum.Enum):
    REFERENCE = "Reference"
    LOAD_BALANCING = "LoadBalancing"
    FIXED_RELAYS = "FixedRelays"
    MOBILE_RELAYS = "MobileRelays"
    UPPER_BOUND = "UpperBound"

    @property
    def uses_relays(self) -> bool:
        return self in (Variant.FIXED_RELAYS, Variant.MOBILE_RELAYS)


@dataclass(frozen=True)
class Layout:
    rings: int = 2
    isd_m: float = 500.0

    def validate(self) -> None:
        _check(isinstance(self.rings, int) and self.rings >= 0, "layout.rings", "must be an integer >= 0")
        _check(self.isd_m > 0, "layout.isd_m", "must be > 0")

    @property
    def n_cells(self) -> int:
        return 1 + 3 * self.rings * (self.rings + 1)


@dataclass(frozen=True)
class RadioConfig:
    K: float = 1e-4
    alpha_los: float = 2.0
    alpha_nlos: float = 4.0
    tx_power_bs_w: float = 20.0
    tx_power_rn_w: float = 5.0
    noise_power_w: float = 0.0
    bandwidth_hz: float = 1e7
    spectral_efficiency_cap: float = 4.8
    # one-time multiplier on all link rates, see README "Calibration"
    calibration: float = 3.5

    def validate(self) -> None:
        _check(self.K > 0, "radio.K", "must be > 0")
        _check(self.alpha_los > 0 and self.alpha_nlos > 0, "radio.alpha_los/alpha_nlos", "must be > 0")
        _check(self.alpha_los < self.alpha_nlos, "radio.alpha_los", "must be < alpha_nlos")
        _check(self.tx_power_bs_w >= 0, "radio.tx_power_bs_w", "must be >= 0")
        _check(self.tx_power_rn_w >= 0, "radio.tx_power_rn_w", "must be >= 0")
        _check(self.noise_power_w >= 0, "radio.noise_power_w", "must be >= 0")
        _check(self.bandwidth_hz > 0, "radio.bandwidth_hz", "must be > 0")
        _check(self.spectral_efficiency_cap > 0, "radio.spectral_efficiency_cap", "must be > 0")
        _check(self.calibration > 0, "radio.calibration", "must be > 0")


@dataclass(frozen=True)
class TrafficField:
    total_users: int = 760
    asymmetry_f: float = 1.0
    hotspot_cell: int = 0
    hotspot_spread_m: float = 50.0
    hotspot_centers_per_cell: int = 2

    def validate(self, n_cells: int | None = None) -> None:
        _check(isinstance(self.total_users, int) and self.total_users >= 1, "traffic.total_users", "must be a positive integer")
        _check(self.asymmetry_f >= 1, "traffic.asymmetry_f", "must be >= 1")
        _check(isinstance(self.hotspot_cell, int) and self.hotspot_cell >= 0, "traffic.hotspot_cell", "must be an integer >= 0")
        _check(self.hotspot_spread_m > 0, "traffic.hotspot_spread_m", "must be > 0")
        _check(
            isinstance(self.hotspot_centers_per_cell, int) and self.hotspot_centers_per_cell >= 1,
            "traffic.hotspot_centers_per_cell",
            "must be an integer >= 1",
        )
        if n_cells is not None:
            _check(self.asymmetry_f <= n_cells, "traffic.asymmetry_f", f"must be <= number of cells ({n_cells})")
            _check(self.total_users >= n_cells, "traffic.total_users", f"must be >= number of cells ({n_cells})")
            _check(self.hotspot_cell < n_cells, "traffic.hotspot_cell", f"must be < number of cells ({n_cells})")


@dataclass(frozen=True)
class DeploymentScheme:
    variant: Variant = Variant.REFERENCE
    relays_per_bs: int = 6
    # fixed relays sit on a ring at this fraction of the cell circumradius
    ring_fraction: float = 2.0 / 3.0

    def validate(self) -> None:
        _check(isinstance(self.variant, Variant), "deployment.variant", f"must be one of {[v.value for v in Variant]}")
        if self.variant.uses_relays:
            _check(isinstance(self.relays_per_bs, int) and self.relays_per_bs >= 1, "deployment.relays_per_bs", "must be >= 1 for relay variants")
        _check(0 < self.ring_fraction <= 1, "deployment.ring_fraction", "must be in (0, 1]")


@dataclass(frozen=True)
class Scenario:
    master_seed: int
    layout: Layout = field(default_factory=Layout)
    radio: RadioConfig = field(default_factory=RadioConfig)
    traffic: TrafficField = field(default_factory=TrafficField)
    deployment: DeploymentScheme = field(default_factory=DeploymentScheme)
    drops: int = 20

    def validate(self) -> None:
        _check(isinstance(self.master_seed, int) and 0 <= self.master_seed < _U64, "master_seed", "must be an unsigned 64-bit integer")
        _check(isinstance(self.drops, int) and self.drops >= 1, "drops", "must be an integer >= 1")
        self.layout.validate()
        self.radio.validate()
        self.traffic.validate(self.layout.n_cells)
        self.deployment.validate()

    def replace(self, **changes: Any) -> "Scenario":
        """Copy with top-level or dotted nested changes, e.g. ``{"traffic.asymmetry_f": 3}``."""
        nested: dict[str, dict[str, Any]] = {}
        top: dict[str, Any] = {}
        for key, value in changes.items():
            head, _, tail = key.partition(".")
            if tail:
                nested.setdefault(head, {})[tail] = value
            else:
                top[key] = value
        for head, sub in nested.items():
            top[head] = dataclasses.replace(getattr(self, head), **sub)
        out = dataclasses.replace(self, **top)
        out.validate()
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "version": SCHEMA_VERSION,
            "master_seed": self.master_seed,
            "drops": self.drops,
            "layout": dataclasses.asdict(self.layout),
            "radio": dataclasses.asdict(self.radio),
            "traffic": dataclasses.asdict(self.traffic),
            "deployment": {
                "variant": self.deployment.variant.value,
                "relays_per_bs": self.deployment.relays_per_bs,
                "ring_fraction": self.deployment.ring_fraction,
            },
        }

    def digest(self) -> str:
        """Content hash of the canonical serialization (first 16 hex digits of SHA-256)."""
        return hashlib.sha256(dump_scenario(self).encode()).hexdigest()[:16]


def _check(ok: bool, name: str, constraint: str) -> None:
    if not ok:
        raise ScenarioError(f"{name}: {constraint}")


_SECTIONS = {
    "layout": Layout,
    "radio": RadioConfig,
    "traffic": TrafficField,
    "deployment": DeploymentScheme,
}


def _build_section(name: str, cls: type, raw: Any) -> Any:
    if not isinstance(raw, Mapping):
        raise ScenarioError(f"{name}: must be an object")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(raw) - set(known))
    if unknown:
        raise ScenarioError(f"{name}: unknown key(s) {unknown}")
    kwargs: dict[str, Any] = {}
    for key, value in raw.items():
        if key == "variant":
            try:
                value = Variant(value)
            except ValueError:
                raise ScenarioError(f"{name}.variant: must be one of {[v.value for v in Variant]}") from None
        elif isinstance(known[key].default, bool) or isinstance(value, bool):
            raise ScenarioError(f"{name}.{key}: booleans are not accepted")
        elif isinstance(known[key].default, float):
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ScenarioError(f"{name}.{key}: must be a finite number")
            value = float(value)
        elif isinstance(known[key].default, int) and not isinstance(value, int):
            raise ScenarioError(f"{name}.{key}: must be an integer")
        kwargs[key] = value
    return cls(**kwargs)


def scenario_from_dict(doc: Mapping[str, Any]) -> Scenario:
    if not isinstance(doc, Mapping):
        raise ScenarioError("document root must be an object")
    allowed = {"version", "master_seed", "drops", *_SECTIONS}
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ScenarioError(f"unknown key(s) {unknown}")
    version = doc.get("version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ScenarioError(f"version: unsupported schema version {version!r} (expected {SCHEMA_VERSION})")

    seed = doc.get("master_seed")
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        try:
            seed = int(env_seed, 0)
        except ValueError:
            raise ScenarioError(f"{SEED_ENV_VAR}: not an integer: {env_seed!r}") from None
    if seed is None:
        raise ScenarioError("master_seed: required")
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ScenarioError("master_seed: must be an unsigned 64-bit integer")
    drops = doc.get("drops", 20)
    if isinstance(drops, bool) or not isinstance(drops, int):
        raise ScenarioError("drops: must be an integer >= 1")

    sections = {name: _build_section(name, cls, doc.get(name, {})) for name, cls in _SECTIONS.items()}
    scenario = Scenario(master_seed=seed, drops=drops, **sections)
    scenario.validate()
    return scenario


def load_scenario(text: str) -> Scenario:
    """Parse and validate a JSON scenario document, applying defaults.

    Raises ScenarioError on malformed JSON or on the first violated constraint.
    If ``UAVRELAY_MASTER_SEED`` is set it overrides ``master_seed``.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"parse error: {exc}") from None
    return scenario_from_dict(doc)


def dump_scenario(scenario: Scenario) -> str:
    return json.dumps(scenario.to_dict(), indent=2, sort_keys=True) + "\n"


def derive_seed(master_seed: int, stream_label: str, index: int) -> int:
    """Split a master seed into an independent 64-bit sub-seed.

    The sub-seed is the first 8 bytes (little endian) of
    BLAKE2b-64(master_seed as 8 LE bytes || utf-8 label || 0x00 || index as 8 LE bytes).
    The NUL separator keeps ("ab", i) and ("a", ...) from colliding.
    """
    h = hashlib.blake2b(digest_size=8, person=b"uavrelay-seed")
    h.update((master_seed % _U64).to_bytes(8, "little"))
    h.update(stream_label.encode())
    h.update(b"\x00")
    h.update((index % _U64).to_bytes(8, "little"))
    return int.from_bytes(h.digest(), "little")
