"""Semi-grant-free uplink NOMA: broadcast thresholds, power pools, barring and connectivity.

Single-ORB slots follow the threshold protocol (MTP/MTI). Multi-ORB slots
use random ORB selection with clusters of at most two users (one GB + one GF).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.stats import poisson

from . import kernels
from .channel import DETERMINISTIC, FadingModel
from .engine import map_chunks
from .outage import Z95
from .rng import RngStream
from .sic import decode, sinr_threshold

SENSITIVE = "sensitive"
TOLERANT = "tolerant"
WORST_CASE = "worst_case"
AVERAGE_ACTIVE = "average_active"

PLAIN = "plain"
POWER_POOL = "power_pool"
POWER_POOL_ACB = "power_pool_acb"
GB_ONLY = "gb_only"
VARIANTS = (PLAIN, POWER_POOL, POWER_POOL_ACB, GB_ONLY)


@dataclass(frozen=True)
class GbUser:
    target_rate: float = 1.0
    delay_class: str = SENSITIVE
    transmit_power: float = 100.0
    orb_id: int = 0
    fading: FadingModel | None = None  # None: same fading as the GF population

    def __post_init__(self):
        if not self.target_rate > 0:
            raise ValueError("GB target_rate must be > 0")
        if self.delay_class not in (SENSITIVE, TOLERANT):
            raise ValueError(f"delay_class must be {SENSITIVE!r} or {TOLERANT!r}")
        if self.transmit_power < 0:
            raise ValueError("GB transmit_power must be >= 0")

    @property
    def eps(self) -> float:
        return sinr_threshold(self.target_rate)


@dataclass(frozen=True)
class GfPopulation:
    k: int
    activation_prob: float
    power_range: tuple[float, float] = (1.0, 100.0)
    fading: FadingModel = field(default_factory=FadingModel)
    target_rate: float = 1.0

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("number of PGFUs must be >= 0")
        if not 0.0 <= self.activation_prob <= 1.0:
            raise ValueError("activation_prob must lie in [0, 1]")
        p_min, p_max = self.power_range
        if not 0.0 <= p_min <= p_max:
            raise ValueError("power range needs 0 <= P_min <= P_max")
        if not self.target_rate > 0:
            raise ValueError("GF target_rate must be > 0")

    @property
    def eps(self) -> float:
        return sinr_threshold(self.target_rate)

    def powers(self, u: np.ndarray) -> np.ndarray:
        p_min, p_max = self.power_range
        return p_min + u * (p_max - p_min)


@dataclass(frozen=True)
class BroadcastThreshold:
    mtp: float | None
    mti: float | None


@dataclass(frozen=True)
class PowerPool:
    """Target receive-power levels, highest first."""

    levels: tuple[float, ...]
    eps: float | None = None

    def __post_init__(self):
        levels = tuple(float(v) for v in self.levels)
        object.__setattr__(self, "levels", levels)
        if not levels or any(v <= 0 for v in levels):
            raise ValueError("power pool levels must be > 0")
        if any(b >= a for a, b in zip(levels, levels[1:])):
            raise ValueError("power pool levels must be strictly decreasing")
        if self.eps is not None:
            for i, lv in enumerate(levels):
                if lv < self.eps * (1.0 + sum(levels[i + 1:])):
                    raise ValueError(f"level {lv} not SIC-separable over the lower levels at eps={self.eps}")

    @classmethod
    def layered(cls, n_levels: int, eps: float, margin: float = 1.0) -> "PowerPool":
        """Smallest levels with each one decodable over all lower levels (times ``margin``)."""
        levels = []
        for _ in range(n_levels):
            levels.append(margin * eps * (1.0 + sum(levels)))
        return cls(tuple(reversed(levels)), eps)


@dataclass(frozen=True)
class AcbPolicy:
    barring_factor: float

    def __post_init__(self):
        if not 0.0 <= self.barring_factor <= 1.0:
            raise ValueError("barring factor must lie in [0, 1]")

    @classmethod
    def load_matched(cls, orbs: int, activation_prob: float, k: int, per_orb: float = 1.0) -> "AcbPolicy":
        """Scale the expected number of permitted users down to ``per_orb`` per ORB."""
        load = activation_prob * k
        return cls(1.0 if load <= 0 else min(1.0, per_orb * orbs / load))


@dataclass
class SlotResult:
    served_gf: int
    served_gb: int
    collisions: int
    gb_outage: list[bool]
    gb_snr: list[float] = field(default_factory=list)

    @property
    def served(self) -> int:
        return self.served_gb + self.served_gf


@dataclass(frozen=True)
class PoolChoice:
    level: int
    transmit_power: float


# -- thresholds ---------------------------------------------------------------

def compute_mti(alpha_gb: float, eps_gb: float, mode: str = WORST_CASE, k: int = 1,
                rho: float | None = None) -> float:
    """Per-user interference cap protecting the GB user's threshold."""
    if not eps_gb > 0:
        raise ValueError("GB SINR threshold must be > 0")
    if k < 1:
        raise ValueError("MTI needs K >= 1 potential GF users")
    tolerance = max(0.0, alpha_gb / eps_gb - 1.0)
    if mode == WORST_CASE:
        return tolerance / k
    if mode == AVERAGE_ACTIVE:
        if rho is None or not 0.0 < rho <= 1.0:
            raise ValueError("average_active MTI needs 0 < rho <= 1")
        return tolerance / max(1, math.ceil(rho * k))
    raise ValueError(f"unknown MTI mode {mode!r}")


def compute_mtp(alpha_gb: float, eps_gf: float) -> float:
    """Received-power floor letting a GF user be decoded ahead of the GB user."""
    if not eps_gf > 0:
        raise ValueError("GF SINR threshold must be > 0")
    return eps_gf * (alpha_gb + 1.0)


def broadcast_threshold(gb: GbUser, alpha_gb: float, pop: GfPopulation,
                        mti_mode: str = WORST_CASE) -> BroadcastThreshold:
    mti = compute_mti(alpha_gb, gb.eps, mti_mode, pop.k, pop.activation_prob)
    mtp = compute_mtp(alpha_gb, pop.eps) if gb.delay_class == TOLERANT else None
    return BroadcastThreshold(mtp, mti)


# -- single ORB ---------------------------------------------------------------

def single_orb_width(pop: GfPopulation) -> int:
    return 1 + 3 * pop.k


def run_single_orb_slot(gb: GbUser, pop: GfPopulation, rng: RngStream, slot: int = 0,
                        mti_mode: str = WORST_CASE) -> SlotResult:
    """One slot on an ORB whose K potential GF users are known in advance.

    Each active GF user transmits at a power drawn from ``power_range`` and
    uploads only if it qualifies: via the MTP (decoded before the GB user) or
    else via the MTI (decoded after it). When several users pass the MTP only
    the strongest is decoded first; the others stay undecoded interference.
    """
    u = rng.uniforms(single_orb_width(pop), slot)
    k = pop.k
    gb_fading = gb.fading or pop.fading
    alpha_gb = float(gb.transmit_power * gb_fading.gains_from_uniforms(u[:1], 0)[0])
    active = u[1:1 + k] < pop.activation_prob
    gains = pop.fading.gains_from_uniforms(u[1 + k:1 + 2 * k], np.arange(k))
    alpha = pop.powers(u[1 + 2 * k:]) * gains

    if k == 0 or not active.any():
        ok = alpha_gb >= gb.eps
        return SlotResult(0, int(ok), 0, [not ok], [alpha_gb])

    thr = broadcast_threshold(gb, alpha_gb, pop, mti_mode)
    via_mtp = active & (alpha >= thr.mtp) if thr.mtp is not None else np.zeros(k, dtype=bool)
    via_mti = active & ~via_mtp & (alpha <= thr.mti)

    mtp_users = [int(i) for i in np.flatnonzero(via_mtp)]
    mtp_users.sort(key=lambda i: -alpha[i])
    first = mtp_users[:1]
    collided = mtp_users[1:]
    after = sorted((int(i) for i in np.flatnonzero(via_mti)), key=lambda i: -alpha[i])

    members = first + [-1] + after  # -1 marks the GB user
    cluster_alpha = [alpha_gb if m < 0 else float(alpha[m]) for m in members]
    cluster_eps = [gb.eps if m < 0 else pop.eps for m in members]
    background = sum(float(alpha[i]) for i in collided)
    outcome = decode(range(len(members)), cluster_alpha, cluster_eps, background)

    gb_ok = outcome.success[len(first)]
    served_gf = sum(ok for m, ok in zip(members, outcome.success) if m >= 0)
    return SlotResult(served_gf, int(gb_ok), int(bool(collided)), [not gb_ok], [alpha_gb])


def simulate_single_orb(gb: GbUser, pop: GfPopulation, slots: int, rng: RngStream,
                        mti_mode: str = WORST_CASE) -> list[SlotResult]:
    return [run_single_orb_slot(gb, pop, rng, t, mti_mode) for t in range(slots)]


# -- multi ORB primitives -----------------------------------------------------

def _orb_choice(u: np.ndarray, orbs: int) -> np.ndarray:
    return np.minimum((u * orbs).astype(np.int64), orbs - 1)


def _acb_keep(u: np.ndarray, q: float) -> np.ndarray:
    return u < q


def _pool_levels(gain: np.ndarray, u: np.ndarray, levels: np.ndarray, p_max: float) -> np.ndarray:
    """Uniform choice among levels reachable by channel inversion; -1 when none is."""
    gain = np.asarray(gain, dtype=np.float64)
    with np.errstate(divide="ignore"):
        feasible = (levels / gain[..., None]) <= p_max
    n_ok = feasible.sum(axis=-1)
    # levels are decreasing, so the feasible ones form a suffix
    pick = np.minimum((u * n_ok).astype(np.int64), np.maximum(n_ok - 1, 0))
    return np.where(n_ok > 0, len(levels) - n_ok + pick, -1)


def assign_orbs_random(n_active: int, orbs: int, rng: RngStream, trial: int = 0) -> np.ndarray:
    if orbs < 1:
        raise ValueError("need at least one ORB")
    if n_active == 0:
        return np.empty(0, dtype=np.int64)
    return _orb_choice(rng.uniforms(n_active, trial), orbs)


def apply_power_pool(gain: float, pool: PowerPool, p_max: float, rng: RngStream,
                     trial: int = 0) -> PoolChoice | None:
    """Pick a random level the user can reach by channel inversion; None if none."""
    if not gain > 0:
        raise ValueError("gain must be > 0")
    levels = np.asarray(pool.levels)
    idx = int(_pool_levels(np.array([gain]), rng.uniforms(1, trial), levels, p_max)[0])
    if idx < 0:
        return None
    return PoolChoice(idx, pool.levels[idx] / gain)


def apply_acb(active: Sequence[int], policy: AcbPolicy, rng: RngStream, trial: int = 0) -> np.ndarray:
    """Each active user passes barring independently with probability q."""
    active = np.asarray(active, dtype=np.int64)
    if active.size == 0:
        return active
    return active[_acb_keep(rng.uniforms(active.size, trial), policy.barring_factor)]


# -- multi ORB simulation -----------------------------------------------------

@dataclass(frozen=True)
class MultiOrbConfig:
    gb_users: tuple[GbUser, ...]
    population: GfPopulation
    pool: PowerPool | None = None  # None: 3 layered levels, margin 2, at the GF threshold
    acb: AcbPolicy | None = None  # None: ideal_barring()

    def __post_init__(self):
        object.__setattr__(self, "gb_users", tuple(self.gb_users))
        if self.pool is None:
            object.__setattr__(self, "pool", PowerPool.layered(3, self.population.eps, 2.0))
        if not self.gb_users:
            raise ValueError("need at least one ORB (one GB user per ORB)")
        if sorted(g.orb_id for g in self.gb_users) != list(range(len(self.gb_users))):
            raise ValueError("exactly one GB user per ORB, orb_id 0..M-1")

    @classmethod
    def homogeneous(cls, orbs: int, population: GfPopulation, gb_rate: float = 1.0,
                    gb_power: float = 100.0, **kw) -> "MultiOrbConfig":
        if orbs < 1:
            raise ValueError("need at least one ORB")
        gbs = tuple(GbUser(gb_rate, SENSITIVE, gb_power, m) for m in range(orbs))
        return cls(gbs, population, **kw)

    @property
    def orbs(self) -> int:
        return len(self.gb_users)

    @property
    def width(self) -> int:
        return self.orbs + 5 * self.population.k

    def barring(self) -> AcbPolicy:
        return self.acb or ideal_barring(self)


def pool_level_distribution(pool: PowerPool, p_max: float, fading: FadingModel) -> np.ndarray:
    """Probability that an active GF user transmits on each pool level (the rest stay silent)."""
    levels = np.asarray(pool.levels)
    n = len(levels)
    if fading.kind == DETERMINISTIC:
        gains = np.asarray(fading.fixed_gains)
        with np.errstate(divide="ignore"):
            feasible = (levels[None, :] / gains[:, None]) <= p_max
        n_ok = feasible.sum(axis=1)
        probs = np.zeros(n)
        for f in n_ok[n_ok > 0]:
            probs[n - f:] += 1.0 / f
        return probs / len(gains)
    # level j is reachable iff gain >= level_j / p_max; reachable levels form a suffix
    reach = np.exp(-levels / (p_max * fading.mean_gain)) if p_max > 0 else np.zeros(n)
    probs = np.zeros(n)
    for f in range(1, n + 1):
        p_f = reach[n - f] - (reach[n - f - 1] if f < n else 0.0)
        probs[n - f:] += p_f / f
    return probs


def _survival(cfg: MultiOrbConfig):
    """P(alpha_gb >= x), averaged over the ORBs' GB users."""
    pop = cfg.population
    parts = []
    for gb in cfg.gb_users:
        fading = gb.fading or pop.fading
        if fading.kind == DETERMINISTIC:
            alphas = gb.transmit_power * np.asarray(fading.fixed_gains)
            parts.append(lambda x, a=alphas: (a[None, :] >= np.asarray(x)[..., None]).mean(axis=-1))
        else:
            scale = gb.transmit_power * fading.mean_gain
            parts.append(lambda x, s=scale: np.exp(-np.maximum(x, 0.0) / s) if s > 0
                         else (np.asarray(x) <= 0).astype(float))
    return lambda x: sum(f(x) for f in parts) / len(parts)


def expected_served_per_orb(load: float, cfg: MultiOrbConfig, level_probs: np.ndarray | None = None,
                            tail: float = 1e-12) -> float:
    """Expected GB + GF users served on one ORB with Poisson(load) pool arrivals.

    Enumerates level occupancies (truncated at ``tail``) and integrates the
    GB user's fading in closed form for each decoding event of the kernel.
    """
    pop = cfg.population
    levels = np.asarray(cfg.pool.levels)
    if level_probs is None:
        level_probs = pool_level_distribution(cfg.pool, pop.power_range[1], pop.fading)
    eps_gb = np.mean([gb.eps for gb in cfg.gb_users])
    eps_gf = pop.eps
    surv = _survival(cfg)

    rates = load * np.asarray(level_probs)
    ranges = [np.arange(int(poisson.isf(tail, r)) + 2 if r > 0 else 1) for r in rates]
    grid = np.meshgrid(*ranges, indexing="ij")
    counts = np.stack([g.ravel() for g in grid], axis=1)
    prob = np.prod([poisson.pmf(counts[:, j], rates[j]) for j in range(len(rates))], axis=0)

    occupied = counts > 0
    empty = ~occupied.any(axis=1)
    top = np.where(empty, 0, occupied.argmax(axis=1))
    c_top = counts[np.arange(len(counts)), top]
    lower = np.arange(len(levels))[None, :] > top[:, None]
    bg = (counts * levels * lower).sum(axis=1)
    sa = levels[top]
    total = bg + c_top * sa

    served = np.where(empty, surv(np.full(len(counts), eps_gb)), 0.0)
    collide = ~empty & (c_top >= 2)
    served += np.where(collide, surv(eps_gb * (1.0 + total)), 0.0)

    single = ~empty & (c_top == 1)
    pf_thr = eps_gb * (1.0 + bg + sa)
    p_pf = surv(pf_thr)
    gf_if_pf = (sa / (1.0 + bg) >= eps_gf).astype(float)
    # GB decoded second: GF needs alpha_gb <= cap, GB then needs alpha_gb >= eps_gb (1 + bg)
    cap = np.minimum(sa / eps_gf - 1.0 - bg, pf_thr)
    p_gf_first = np.where(cap >= 0, 1.0 - surv(cap), 0.0)
    lo = eps_gb * (1.0 + bg)
    p_both = np.where(cap >= lo, surv(lo) - surv(cap), 0.0)
    served += np.where(single, p_pf * (1.0 + gf_if_pf) + p_gf_first + p_both, 0.0)
    return float(np.sum(prob * served))


@functools.lru_cache(maxsize=256)
def ideal_barring(cfg: MultiOrbConfig) -> AcbPolicy:
    """Barring factor maximising :func:`expected_served_per_orb` (never above 1).

    Permitted users spread over the ORBs, so barring sets the per-ORB load to
    ``q * rho * K / M``; with a single pool level and no fading this reduces
    to matching the permitted load to one user per ORB.
    """
    pop = cfg.population
    offered = pop.activation_prob * pop.k / cfg.orbs
    probs = pool_level_distribution(cfg.pool, pop.power_range[1], pop.fading)
    if offered <= 0 or probs.sum() <= 0:
        return AcbPolicy(1.0)

    def objective(lam):
        return expected_served_per_orb(lam, cfg, probs)

    grid = np.linspace(0.0, offered, 41)[1:]
    values = [objective(lam) for lam in grid]
    best = int(np.argmax(values))
    if best == len(grid) - 1:
        return AcbPolicy(1.0)
    lo_b, hi_b = grid[max(best - 1, 0)], grid[best + 1]
    res = minimize_scalar(lambda lam: -objective(lam), bounds=(lo_b, hi_b), method="bounded",
                          options={"xatol": 1e-6})
    return AcbPolicy(min(1.0, float(res.x) / offered))


def _gb_by_orb(cfg: MultiOrbConfig) -> list[GbUser]:
    return sorted(cfg.gb_users, key=lambda g: g.orb_id)


def prepare_slots(cfg: MultiOrbConfig, u: np.ndarray, variants: Sequence[str]) -> dict:
    """Kernel inputs for each variant from one uniform block (common random numbers).

    Column layout per slot: M GB gains, then K activation, K barring, K ORB,
    K gain and K power/level uniforms.
    """
    m, k = cfg.orbs, cfg.population.k
    pop = cfg.population
    gbs = _gb_by_orb(cfg)
    alpha_gb = np.empty((u.shape[0], m))
    for j, gb in enumerate(gbs):
        alpha_gb[:, j] = gb.transmit_power * (gb.fading or pop.fading).gains_from_uniforms(u[:, j], j)
    eps_gb = np.array([gb.eps for gb in gbs])

    cols = [u[:, m + i * k:m + (i + 1) * k] for i in range(5)]
    u_act, u_acb, u_orb, u_gain, u_pow = cols
    active = u_act < pop.activation_prob
    orb = _orb_choice(u_orb, m)
    gains = pop.fading.gains_from_uniforms(u_gain, np.arange(k))
    levels = np.asarray(cfg.pool.levels)
    silent = np.full(active.shape, -1, dtype=np.int64)

    out = {}
    for variant in variants:
        if variant == GB_ONLY:
            level, alpha = silent, np.zeros(active.shape)
        elif variant == PLAIN:
            level = np.where(active, 0, -1)
            alpha = pop.powers(u_pow) * gains
        elif variant in (POWER_POOL, POWER_POOL_ACB):
            tx = active
            if variant == POWER_POOL_ACB:
                tx = tx & _acb_keep(u_acb, cfg.barring().barring_factor)
            choice = _pool_levels(gains, u_pow, levels, pop.power_range[1])
            level = np.where(tx, choice, -1)
            alpha = np.where(level >= 0, levels[np.maximum(level, 0)], 0.0)
        else:
            raise ValueError(f"unknown variant {variant!r}")
        out[variant] = (orb, level.astype(np.int64), alpha, alpha_gb, eps_gb, pop.eps)
    return out


def run_multi_orb_slot(gb_users: Sequence[GbUser], pop: GfPopulation, orbs: int, variant: str,
                       rng: RngStream, slot: int = 0, pool: PowerPool | None = None,
                       acb: AcbPolicy | None = None) -> SlotResult:
    gb_users = tuple(gb_users)
    if len(gb_users) != orbs:
        raise ValueError("one GB user per ORB is required")
    cfg = MultiOrbConfig(gb_users, pop, pool, acb)
    u = rng.uniform_block(slot, 1, cfg.width)
    args = prepare_slots(cfg, u, [variant])[variant]
    served_gb, served_gf, coll = (int(v) for v in kernels.orb_slots(*args)[0])
    alpha_gb, eps_gb = args[3][0], args[4]
    # the kernel only returns per-slot totals; isolate each ORB for its GB flag
    flags = []
    for j in range(orbs):
        mask = args[0] == j
        lv = np.where(mask, args[1], -1)
        one = kernels.orb_slots(np.zeros_like(args[0]), lv, args[2], alpha_gb[None, j:j + 1],
                                eps_gb[j:j + 1], args[5])[0]
        flags.append(not one[0])
    return SlotResult(served_gf, served_gb, coll, flags, [float(a) for a in alpha_gb])


@dataclass(frozen=True)
class ConnectivityEstimate:
    mean_served: float
    ci_low: float
    ci_high: float
    slots: int
    mean_gb: float = 0.0
    mean_gf: float = 0.0
    collisions_per_slot: float = 0.0


def connectivity_variants(cfg: MultiOrbConfig, variants: Sequence[str], slots: int, rng: RngStream,
                          workers: int = 1, chunk: int = 2048) -> dict[str, ConnectivityEstimate]:
    """Mean served users per slot for several variants on shared slot realizations."""
    if slots < 1:
        raise ValueError("slots must be >= 1")
    variants = list(variants)
    if POWER_POOL_ACB in variants and cfg.acb is None:
        cfg = replace(cfg, acb=ideal_barring(cfg))

    def work(first, count):
        u = rng.uniform_block(first, count, cfg.width)
        prepared = prepare_slots(cfg, u, variants)
        out = np.zeros((len(variants), 5), dtype=np.int64)
        for j, v in enumerate(variants):
            res = kernels.orb_slots(*prepared[v])
            served = res[:, 0] + res[:, 1]
            out[j] = [served.sum(), (served * served).sum(), res[:, 0].sum(), res[:, 1].sum(), res[:, 2].sum()]
        return out

    parts = map_chunks(work, slots, workers, chunk)
    total = parts[0].copy()
    for p in parts[1:]:
        total += p

    result = {}
    for j, v in enumerate(variants):
        s, sq, gb, gf, coll = (int(x) for x in total[j])
        mean = s / slots
        var = (sq - s * s / slots) / (slots - 1) if slots > 1 else 0.0
        half = Z95 * math.sqrt(max(var, 0.0) / slots)
        result[v] = ConnectivityEstimate(mean, mean - half, mean + half, slots,
                                         gb / slots, gf / slots, coll / slots)
    return result


def connectivity(cfg: MultiOrbConfig, slots: int, rng: RngStream, variant: str = POWER_POOL_ACB,
                 workers: int = 1) -> ConnectivityEstimate:
    return connectivity_variants(cfg, [variant], slots, rng, workers)[variant]
