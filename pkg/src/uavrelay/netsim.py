"""Multi-cell downlink simulator comparing reference, load balancing, fixed and mobile relays.

One drop places users at a given asymmetry F, deploys relays for the chosen
scheme, associates each user to its strongest node (mean received power,
link-state aware), shares each node's resources equally between its users,
and converts SINR to rate with capped Shannon. Every BS and relay transmits
on the same band and interferes over NLoS links. Relayed users get the
two-hop decode-and-forward rate C_b*C_a/(C_b + C_a).

Reported metrics cover the users whose home cell is the hotspot cell.
"""
from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from . import placement
from .geometry import HexCell, UserDrop, hex_cells, hex_layout, sample_users
from .propagation import MIN_DISTANCE_M, ChannelState, LinkKind, RelayKind, exponent, link_state
from .scenario import RadioConfig, Scenario, Variant, derive_seed

# node kind codes
BS, GROUND_RN, SUAV_RN = 0, 1, 2
HANDOVER_MARGIN_DB = 6.0

_ACCESS_LINK = {BS: LinkKind.BS_TO_UE, GROUND_RN: LinkKind.GROUND_RN_TO_UE, SUAV_RN: LinkKind.SUAV_RN_TO_UE}
_BACKHAUL_LINK = {GROUND_RN: LinkKind.BS_TO_GROUND_RN, SUAV_RN: LinkKind.BS_TO_SUAV_RN}


@dataclass
class Nodes:
    """Transmitters: BSs first (indices 0..n_bs-1), then relays."""

    xy: np.ndarray
    power: np.ndarray
    kind: np.ndarray
    donor: np.ndarray  # donor BS per node, -1 for BSs

    @property
    def n_bs(self) -> int:
        return int(np.count_nonzero(self.kind == BS))

    @property
    def relay_index(self) -> np.ndarray:
        return np.flatnonzero(self.kind != BS)

    def __len__(self) -> int:
        return len(self.kind)


def make_nodes(bs_xy: np.ndarray, relays: Sequence[np.ndarray] | None, relay_kind: RelayKind | None,
               radio: RadioConfig) -> Nodes:
    n_bs = len(bs_xy)
    xy = [np.asarray(bs_xy, dtype=float)]
    power = [np.full(n_bs, radio.tx_power_bs_w)]
    kind = [np.full(n_bs, BS)]
    donor = [np.full(n_bs, -1)]
    if relays is not None:
        code = SUAV_RN if relay_kind is RelayKind.SUAV else GROUND_RN
        for b, pts in enumerate(relays):
            pts = np.asarray(pts, dtype=float).reshape(-1, 2)
            xy.append(pts)
            power.append(np.full(len(pts), radio.tx_power_rn_w))
            kind.append(np.full(len(pts), code))
            donor.append(np.full(len(pts), b))
    return Nodes(np.vstack(xy), np.concatenate(power), np.concatenate(kind).astype(np.int64),
                 np.concatenate(donor).astype(np.int64))


def _distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = np.hypot(a[:, None, 0] - b[None, :, 0], a[:, None, 1] - b[None, :, 1])
    return np.maximum(d, MIN_DISTANCE_M)


def _access_exponents(nodes: Nodes, radio: RadioConfig) -> np.ndarray:
    table = np.array([exponent(link_state(_ACCESS_LINK[k]), radio) for k in (BS, GROUND_RN, SUAV_RN)])
    return table[nodes.kind]


def mean_rx_power(ue_xy: np.ndarray, nodes: Nodes, radio: RadioConfig, d: np.ndarray | None = None) -> np.ndarray:
    """(n_ue, n_nodes) received power without fading, serving-link state per node kind."""
    d = _distances(ue_xy, nodes.xy) if d is None else d
    return nodes.power[None, :] * radio.K * d ** (-_access_exponents(nodes, radio))[None, :]


def associate(ue_xy: np.ndarray, nodes: Nodes, radio: RadioConfig,
              home_bs: np.ndarray | None = None, d: np.ndarray | None = None) -> np.ndarray:
    """Serving node per user: maximum mean received power, ties to the lowest index.

    Any BS is a candidate. When ``home_bs`` is given, a relay is a candidate
    only for users whose home cell is the relay's donor cell. ``d`` is an
    optional precomputed user-to-node distance matrix.
    """
    if len(nodes) == 0 or nodes.n_bs == 0:
        raise ValueError("need at least one BS")
    rx = mean_rx_power(ue_xy, nodes, radio, d)
    if home_bs is not None:
        foreign = (nodes.kind[None, :] != BS) & (nodes.donor[None, :] != np.asarray(home_bs)[:, None])
        rx[foreign] = -np.inf
    return np.argmax(rx, axis=1)


def schedule(n_attached: int) -> np.ndarray:
    """Round-robin: each of the n attached users gets 1/n of the node's resources."""
    if n_attached <= 0:
        return np.empty(0)
    return np.full(n_attached, 1.0 / n_attached)


def link_rate(sinr, radio: RadioConfig, share=1.0):
    """share * bandwidth * min(log2(1 + sinr), cap), scaled by the calibration factor."""
    se = np.minimum(np.log2(1.0 + np.asarray(sinr, dtype=float)), radio.spectral_efficiency_cap)
    return radio.calibration * radio.bandwidth_hz * np.asarray(share, dtype=float) * se


def throughput_relayed(c_backhaul, c_access):
    """End-to-end DF rate with the best time split: C_b*C_a / (C_b + C_a); 0 if either hop is 0."""
    cb = np.asarray(c_backhaul, dtype=float)
    ca = np.asarray(c_access, dtype=float)
    total = cb + ca
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(total > 0, cb * ca / np.where(total > 0, total, 1.0), 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass
class LinkBudget:
    throughput: np.ndarray  # bits/s per user
    sinr: np.ndarray  # access-link SINR per user
    backhaul_sinr: np.ndarray  # per node, NaN for BSs
    node_load: np.ndarray  # users attached per node
    bs_load: np.ndarray  # users carried per BS (direct + through its relays)
    duty: np.ndarray  # transmit duty cycle per node


def evaluate(ue_xy: np.ndarray, nodes: Nodes, serving: np.ndarray, radio: RadioConfig,
             fading_ue: np.ndarray | None = None, fading_rn: np.ndarray | None = None,
             half_duplex: bool = True, distances: tuple[np.ndarray, np.ndarray] | None = None) -> LinkBudget:
    """Per-user throughput for a fixed association.

    ``fading_ue`` is (n_ue, n_nodes) and ``fading_rn`` is (n_nodes, n_nodes)
    (only relay rows are read); None means average fading (all ones).

    With ``half_duplex`` a relay's interference is weighted by the fraction
    of time it transmits: a first pass at full activity gives each relayed
    user's optimal access-phase fraction C_b / (C_b + C_a), a relay's duty
    cycle is the mean over its users (0 when idle), and the rates are then
    recomputed with the weighted interference.

    ``distances`` optionally supplies the (user-node, node-node) distance
    matrices so repeated evaluations can skip recomputing them.
    """
    if distances is None:
        distances = (_distances(ue_xy, nodes.xy), _distances(nodes.xy, nodes.xy))
    first = _evaluate(ue_xy, nodes, serving, radio, fading_ue, fading_rn, None, distances)
    if not half_duplex or len(nodes.relay_index) == 0:
        return first
    return _evaluate(ue_xy, nodes, serving, radio, fading_ue, fading_rn, first.duty, distances)


def _evaluate(ue_xy, nodes, serving, radio, fading_ue, fading_rn, duty, distances) -> LinkBudget:
    n_ue, m = len(ue_xy), len(nodes)
    activity = np.ones(m) if duty is None else duty
    nlos = radio.alpha_nlos
    d, d_nodes = distances
    h = np.ones((n_ue, m)) if fading_ue is None else fading_ue
    interf = (activity * nodes.power)[None, :] * h * radio.K * d ** (-nlos)
    rows = np.arange(n_ue)
    alpha_s = _access_exponents(nodes, radio)[serving]
    signal = nodes.power[serving] * h[rows, serving] * radio.K * d[rows, serving] ** (-alpha_s)
    interf[rows, serving] = 0.0
    denom = interf.sum(axis=1) + radio.noise_power_w
    with np.errstate(divide="ignore"):
        sinr_ue = np.where(denom > 0, signal / np.where(denom > 0, denom, 1.0), np.inf)

    node_load = np.bincount(serving, minlength=m)
    bs_load = node_load[: nodes.n_bs].copy()
    relays = nodes.relay_index
    np.add.at(bs_load, nodes.donor[relays], node_load[relays])

    backhaul_sinr = np.full(m, np.nan)
    if len(relays):
        dr = d_nodes[relays]
        hr = np.ones((len(relays), m)) if fading_rn is None else fading_rn[relays]
        rx = (activity * nodes.power)[None, :] * hr * radio.K * dr ** (-nlos)
        ridx = np.arange(len(relays))
        donors = nodes.donor[relays]
        alpha_b = exponent(ChannelState.LOS, radio)
        sig = nodes.power[donors] * hr[ridx, donors] * radio.K * dr[ridx, donors] ** (-alpha_b)
        rx[ridx, donors] = 0.0
        rx[ridx, relays] = 0.0
        den = rx.sum(axis=1) + radio.noise_power_w
        with np.errstate(divide="ignore"):
            backhaul_sinr[relays] = np.where(den > 0, sig / np.where(den > 0, den, 1.0), np.inf)

    is_relayed = nodes.kind[serving] != BS
    donor_of = np.where(is_relayed, nodes.donor[serving], serving)
    bs_share = 1.0 / bs_load[donor_of]
    tput = np.empty(n_ue)
    new_duty = np.ones(m)
    direct = ~is_relayed
    tput[direct] = link_rate(sinr_ue[direct], radio, bs_share[direct])
    if is_relayed.any():
        s = serving[is_relayed]
        c_b = link_rate(backhaul_sinr[s], radio, bs_share[is_relayed])
        c_a = link_rate(sinr_ue[is_relayed], radio, 1.0 / node_load[s])
        tput[is_relayed] = throughput_relayed(c_b, c_a)
        total = c_b + c_a
        frac = np.divide(c_b, total, out=np.zeros_like(total), where=total > 0)
        new_duty[: nodes.n_bs] = 1.0
        busy = np.bincount(s, weights=frac, minlength=m)
        loaded = node_load > 0
        new_duty[nodes.n_bs:] = 0.0
        new_duty[loaded & (nodes.kind != BS)] = busy[loaded & (nodes.kind != BS)] / node_load[loaded & (nodes.kind != BS)]
    return LinkBudget(tput, sinr_ue, backhaul_sinr, node_load, bs_load, new_duty)


def _variance(loads: np.ndarray) -> float:
    return float(np.var(loads))


def load_balance(serving: np.ndarray, rx_power: np.ndarray, margin_db: float = HANDOVER_MARGIN_DB,
                 max_moves: int = 100_000) -> np.ndarray:
    """Hand boundary users from heavily to lightly loaded nodes.

    A user is eligible to move to node j if its received power from j is
    within ``margin_db`` of its best node. Each step takes the most loaded
    node that has an eligible user whose move strictly lowers the load
    variance, and moves one such user to the least loaded eligible node
    (ties: strongest power to the target, then lowest user index). Stops when
    no move lowers the variance.
    """
    serving = np.asarray(serving).copy()
    n_ue, m = rx_power.shape
    best = rx_power.max(axis=1)
    eligible = rx_power >= best[:, None] * 10 ** (-margin_db / 10)
    loads = np.bincount(serving, minlength=m)
    for _ in range(max_moves):
        moved = False
        for src in sorted(range(m), key=lambda j: (-loads[j], j)):
            users = np.flatnonzero(serving == src)
            if len(users) == 0:
                break
            cand = eligible[users].copy()
            cand[:, src] = False
            # variance strictly drops iff load[target] + 1 < load[src]
            cand &= (loads[None, :] + 1 < loads[src])
            if not cand.any():
                continue
            target_load = np.where(cand, loads[None, :], np.iinfo(np.int64).max)
            tgt = int(np.argmin(target_load.min(axis=0)))
            pick = users[cand[:, tgt]]
            ue = int(pick[np.lexsort((pick, -rx_power[pick, tgt]))[0]])
            serving[ue] = tgt
            loads[src] -= 1
            loads[tgt] += 1
            moved = True
            break
        if not moved:
            break
    return serving


@dataclass
class DropMetrics:
    user_throughputs: np.ndarray
    mean_throughput: float
    qos_5th_percentile: float


def metrics(user_throughputs: Iterable[float]) -> DropMetrics:
    """Mean throughput and the level reached by at least 95% of users.

    The QoS value is the order statistic of rank ceil(n/20) in ascending order.
    """
    x = np.asarray(list(user_throughputs) if not isinstance(user_throughputs, np.ndarray) else user_throughputs,
                   dtype=float)
    if x.size == 0:
        raise ValueError("metrics of an empty user set")
    rank = -(-5 * x.size // 100)
    return DropMetrics(x, float(x.mean()), float(np.sort(x)[rank - 1]))


def upper_bound(ue_xy: np.ndarray, bs_nodes: Nodes, radio: RadioConfig) -> np.ndarray:
    """Interference-free bound: each user gets share * bandwidth * cap under BS-only association."""
    serving = associate(ue_xy, bs_nodes, radio)
    load = np.bincount(serving, minlength=len(bs_nodes))
    return link_rate(np.inf, radio, 1.0 / load[serving])


@dataclass
class Network:
    """Static part of a scenario: BS sites and their hexagonal cells."""

    bs_xy: np.ndarray
    cells: list[HexCell]

    @classmethod
    def from_scenario(cls, scenario: Scenario) -> "Network":
        bs = hex_layout(scenario.layout.rings, scenario.layout.isd_m)
        return cls(bs, hex_cells(bs, scenario.layout.isd_m))


@dataclass
class NetworkRealization:
    bs_xy: np.ndarray
    nodes: Nodes
    users: UserDrop
    serving: np.ndarray
    relay_kind: RelayKind | None


def _flabel(f: float) -> str:
    return f"{float(f):.9g}"


def _placement_objective(cell_ue: np.ndarray, base: Nodes, donor: int, relay_kind: RelayKind,
                         radio: RadioConfig):
    code = SUAV_RN if relay_kind is RelayKind.SUAV else GROUND_RN
    # distances among the fixed nodes never change during refinement
    d_ue_base = _distances(cell_ue, base.xy)
    d_nn_base = _distances(base.xy, base.xy)
    home = np.full(len(cell_ue), donor)

    def objective(pos: np.ndarray) -> float:
        nodes = Nodes(np.vstack([base.xy, pos]),
                      np.concatenate([base.power, np.full(len(pos), radio.tx_power_rn_w)]),
                      np.concatenate([base.kind, np.full(len(pos), code)]),
                      np.concatenate([base.donor, np.full(len(pos), donor)]))
        d_ue = np.hstack([d_ue_base, _distances(cell_ue, pos)])
        cross = _distances(base.xy, pos)
        d_nn = np.block([[d_nn_base, cross], [cross.T, _distances(pos, pos)]])
        serving = associate(cell_ue, nodes, radio, home, d_ue)
        rate = evaluate(cell_ue, nodes, serving, radio, distances=(d_ue, d_nn)).throughput
        return float(np.sum(np.log1p(rate / radio.bandwidth_hz)))

    return objective


def place_mobile_relays(network: Network, users: UserDrop, scenario: Scenario, f: float, drop_index: int,
                        refine: bool = True) -> list[np.ndarray]:
    """Hotspot placement in every cell.

    Stage-1 (k-means) positions of all cells form the interference context in
    which each cell's relays are refined, so cells are independent.
    """
    k = scenario.deployment.relays_per_bs
    radio = scenario.radio
    seeds = [derive_seed(scenario.master_seed, f"placement:F={_flabel(f)}:cell={c}", drop_index)
             for c in range(len(network.cells))]
    stage1 = []
    for c, cell in enumerate(network.cells):
        ue = users.positions[users.cells == c]
        if len(ue) == 0:
            stage1.append(placement.fixed_ring_placement(cell, k, scenario.deployment.ring_fraction))
        else:
            stage1.append(placement.hotspot_placement(ue, k, None, cell, seeds[c]).positions)
    if not refine:
        return stage1
    final = []
    for c, cell in enumerate(network.cells):
        ue = users.positions[users.cells == c]
        if len(ue) == 0:
            final.append(stage1[c])
            continue
        others = [p if b != c else np.empty((0, 2)) for b, p in enumerate(stage1)]
        base = make_nodes(network.bs_xy, others, RelayKind.SUAV, radio)
        obj = _placement_objective(ue, base, c, RelayKind.SUAV, radio)
        final.append(placement.refine(stage1[c], obj, cell)[0])
    return final


def build_realization(scenario: Scenario, f: float, variant: Variant, drop_index: int,
                      network: Network | None = None) -> NetworkRealization:
    network = network or Network.from_scenario(scenario)
    field = dataclasses.replace(scenario.traffic, asymmetry_f=float(f))
    users = sample_users(field, network.cells,
                         derive_seed(scenario.master_seed, f"users:F={_flabel(f)}", drop_index))
    radio = scenario.radio
    relays, kind = None, None
    if variant is Variant.FIXED_RELAYS:
        kind = RelayKind.GROUND
        relays = [placement.fixed_ring_placement(c, scenario.deployment.relays_per_bs,
                                                 scenario.deployment.ring_fraction) for c in network.cells]
    elif variant is Variant.MOBILE_RELAYS:
        kind = RelayKind.SUAV
        relays = place_mobile_relays(network, users, scenario, f, drop_index)
    nodes = make_nodes(network.bs_xy, relays, kind, radio)
    serving = associate(users.positions, nodes, radio, users.cells)
    if variant is Variant.LOAD_BALANCING:
        serving = load_balance(serving, mean_rx_power(users.positions, nodes, radio))
    return NetworkRealization(network.bs_xy, nodes, users, serving, kind)


def draw_fading(scenario: Scenario, f: float, variant: Variant, drop_index: int, n_ue: int,
                nodes: Nodes) -> tuple[np.ndarray, np.ndarray]:
    """Per-drop Rayleigh gains. BS-to-user gains are shared by all schemes of a drop."""
    label = f"F={_flabel(f)}"
    n_bs, m = nodes.n_bs, len(nodes)
    h_bs = np.random.default_rng(derive_seed(scenario.master_seed, f"fading-bs:{label}", drop_index)).exponential(
        1.0, (n_ue, n_bs))
    rng = np.random.default_rng(derive_seed(scenario.master_seed, f"fading-rn:{label}:{variant.value}", drop_index))
    h_rn = rng.exponential(1.0, (n_ue, m - n_bs))
    h_nodes = rng.exponential(1.0, (m, m))
    return np.hstack([h_bs, h_rn]), h_nodes


def run_drop(scenario: Scenario, f: float, variant: Variant | str, drop_index: int,
             network: Network | None = None) -> DropMetrics:
    """Simulate one drop and reduce the hotspot cell's users to DropMetrics."""
    variant = Variant(variant)
    network = network or Network.from_scenario(scenario)
    real = build_realization(scenario, f, variant, drop_index, network)
    hot = real.users.cells == scenario.traffic.hotspot_cell
    if variant is Variant.UPPER_BOUND:
        tput = upper_bound(real.users.positions, real.nodes, scenario.radio)
    else:
        h_ue, h_nodes = draw_fading(scenario, f, variant, drop_index, len(real.users), real.nodes)
        tput = evaluate(real.users.positions, real.nodes, real.serving, scenario.radio, h_ue, h_nodes).throughput
    return metrics(tput[hot])


@dataclass(frozen=True)
class DropRecord:
    f: float
    scheme: str
    drop: int
    mean_bps: float
    qos_bps: float


def _run_task(args) -> DropRecord:
    scenario, f, variant, drop = args
    m = run_drop(scenario, f, variant, drop)
    return DropRecord(float(f), Variant(variant).value, drop, m.mean_throughput, m.qos_5th_percentile)


def run_sweep(scenario: Scenario, f_values: Sequence[float], variants: Sequence[Variant | str],
              drops: int | None = None, workers: int = 1,
              drop_indices: Sequence[int] | None = None) -> list[DropRecord]:
    """All (F, scheme, drop) combinations, returned in that nested order.

    Drops 0..drops-1 run by default; ``drop_indices`` selects others, e.g. to
    extend an earlier sweep without recomputing it.
    """
    drops = scenario.drops if drops is None else drops
    indices = range(drops) if drop_indices is None else [int(i) for i in drop_indices]
    n_cells = scenario.layout.n_cells
    for f in f_values:
        if not 1 <= f <= n_cells:
            raise ValueError(f"F={f} outside [1, {n_cells}]")
    tasks = [(scenario, float(f), Variant(v), d) for f in f_values for v in variants for d in indices]
    if workers <= 1:
        return [_run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


@dataclass(frozen=True)
class Aggregate:
    f: float
    scheme: str
    drops: int
    mean_bps: float
    mean_ci95: float
    qos_bps: float
    qos_ci95: float


def ci95_half_width(values: Sequence[float]) -> float:
    """Student-t 95% half-width of the sample mean; NaN for fewer than two values."""
    x = np.asarray(values, dtype=float)
    if x.size < 2:
        return math.nan
    return float(stats.t.ppf(0.975, x.size - 1) * x.std(ddof=1) / math.sqrt(x.size))


def aggregate(records: Sequence[DropRecord]) -> list[Aggregate]:
    groups: dict[tuple[float, str], list[DropRecord]] = {}
    for rec in records:
        groups.setdefault((rec.f, rec.scheme), []).append(rec)
    out = []
    for (f, scheme), recs in groups.items():
        means = [r.mean_bps for r in recs]
        qos = [r.qos_bps for r in recs]
        out.append(Aggregate(f, scheme, len(recs), float(np.mean(means)), ci95_half_width(means),
                             float(np.mean(qos)), ci95_half_width(qos)))
    return out
