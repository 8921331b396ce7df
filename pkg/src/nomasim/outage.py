"""Monte Carlo outage estimation for two-user uplink SIC, SNR sweeps and error-floor checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Sequence

import numpy as np

from . import kernels
from .channel import DETERMINISTIC, FadingModel, db_to_linear
from .engine import DEFAULT_CHUNK, sum_chunks
from .rng import RngStream
from .sic import PRIMARY, SECONDARY, DecodingPolicy, sinr_threshold

USERS = (PRIMARY, SECONDARY)
Z95 = NormalDist().inv_cdf(0.975)

# stream id reserved for the gain-only oracle so it never shares draws with a sweep point
ORACLE_STREAM = 0xF100_0000_0000_0001


@dataclass(frozen=True)
class OutageEstimate:
    p_hat: float
    ci_low: float
    ci_high: float
    trials: int
    failures: int = 0

    @property
    def width(self) -> float:
        return self.ci_high - self.ci_low

    @classmethod
    def from_counts(cls, failures: int, trials: int) -> "OutageEstimate":
        low, high = wilson_interval(failures, trials)
        return cls(failures / trials, low, high, trials, failures)


def wilson_interval(k: int, n: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n < 1 or not 0 <= k <= n:
        raise ValueError("need n >= 1 and 0 <= k <= n")
    p = k / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    # clamp rounding so that low <= p <= high always holds
    return max(0.0, min(centre - half, p)), min(1.0, max(centre + half, p))


@dataclass(frozen=True)
class ClusterOutage:
    primary: OutageEstimate
    secondary: OutageEstimate
    first_stage: OutageEstimate

    @property
    def users(self) -> tuple[OutageEstimate, OutageEstimate]:
        return self.primary, self.secondary

    def __getitem__(self, user: int | str) -> OutageEstimate:
        if user in (0, PRIMARY):
            return self.primary
        if user in (1, SECONDARY):
            return self.secondary
        raise KeyError(user)


def _as_models(fading) -> tuple[FadingModel, FadingModel]:
    if isinstance(fading, FadingModel):
        return (fading, fading)
    models = tuple(fading)
    if len(models) != 2:
        raise ValueError("need one fading model per user (two users)")
    return models


def _thresholds(rates: Sequence[float]) -> np.ndarray:
    if len(rates) != 2:
        raise ValueError("need one target rate per user (two users)")
    return np.array([sinr_threshold(r) for r in rates])


def _cluster_alpha(u: np.ndarray, models, powers) -> np.ndarray:
    alpha = np.empty_like(u)
    for i, model in enumerate(models):
        alpha[:, i] = powers[i] * model.gains_from_uniforms(u[:, i], i)
    return alpha


def outage_counts(policies: Sequence[DecodingPolicy | str], rates, powers, fading, trials: int,
                  rng: RngStream, workers: int = 1, chunk: int = DEFAULT_CHUNK) -> dict:
    """Failure counts (primary, secondary, first stage) per policy on common random numbers."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    policies = [DecodingPolicy(p) for p in policies]
    eps = _thresholds(rates)
    models = _as_models(fading)
    powers = [float(p) for p in powers]
    if len(powers) != 2 or any(p < 0 or not math.isfinite(p) for p in powers):
        raise ValueError("need two finite transmit powers >= 0")
    if eps[0] <= 0:
        raise ValueError("primary target rate must be > 0")

    def work(first, count):
        alpha = _cluster_alpha(rng.uniform_block(first, count, 2), models, powers)
        out = np.empty((len(policies), 3), dtype=np.int64)
        for j, pol in enumerate(policies):
            ok = kernels.decode_pairs(alpha, eps, pol.code)
            out[j] = count - ok.sum(axis=0, dtype=np.int64)
        return out

    total = sum_chunks(work, trials, workers, chunk)
    return {pol: total[j] for j, pol in enumerate(policies)}


def _to_cluster(counts, trials) -> ClusterOutage:
    return ClusterOutage(*(OutageEstimate.from_counts(int(c), trials) for c in counts))


def estimate_outage(policy, rates, powers, fading, trials: int, rng: RngStream,
                    workers: int = 1) -> ClusterOutage:
    """Outage of each user (and of the first SIC stage) under ``policy``.

    User 0 is the primary user, user 1 the secondary user.
    """
    counts = outage_counts([policy], rates, powers, fading, trials, rng, workers)
    return _to_cluster(next(iter(counts.values())), trials)


@dataclass(frozen=True)
class SweepSpec:
    snr_db: tuple[float, ...]
    trials_per_point: int
    rates: tuple[float, float]
    policies: tuple[DecodingPolicy, ...] = tuple(DecodingPolicy)
    fading: tuple[FadingModel, FadingModel] = (FadingModel(), FadingModel())
    master_seed: int = 0
    power_scale: tuple[float, float] = (1.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "snr_db", tuple(float(s) for s in self.snr_db))
        object.__setattr__(self, "policies", tuple(DecodingPolicy(p) for p in self.policies))
        object.__setattr__(self, "fading", _as_models(self.fading))
        if not self.snr_db:
            raise ValueError("snr grid must not be empty")
        if any(b <= a for a, b in zip(self.snr_db, self.snr_db[1:])):
            raise ValueError("snr grid must be strictly increasing")
        if self.trials_per_point < 1:
            raise ValueError("trials_per_point must satisfy trials >= 1")
        if not self.policies:
            raise ValueError("at least one policy is required")
        _thresholds(self.rates)
        if len(self.power_scale) != 2 or any(c < 0 for c in self.power_scale):
            raise ValueError("power_scale needs two values >= 0")


@dataclass
class OutageCurve:
    """Outage estimates for every (policy, user, SNR) cell of a sweep."""

    snr_db: tuple[float, ...]
    policies: tuple[DecodingPolicy, ...]
    cells: dict = field(default_factory=dict)

    def get(self, policy, user, snr_db: float | None = None, index: int | None = None) -> OutageEstimate:
        if index is None:
            index = self.snr_db.index(float(snr_db))
        return self.cells[(DecodingPolicy(policy), _user_name(user), index)]

    def series(self, policy, user) -> list[OutageEstimate]:
        return [self.get(policy, user, index=i) for i in range(len(self.snr_db))]

    def rows(self):
        """(policy, user, snr_db, estimate) in deterministic order."""
        for pol in self.policies:
            for user in USERS:
                for i, snr in enumerate(self.snr_db):
                    yield pol, user, snr, self.cells[(pol, user, i)]


def _user_name(user) -> str:
    if user in (0, PRIMARY):
        return PRIMARY
    if user in (1, SECONDARY):
        return SECONDARY
    if user == "first_stage":
        return user
    raise KeyError(user)


def snr_sweep(spec: SweepSpec, workers: int = 1) -> OutageCurve:
    """Outage curves over the grid; point ``j`` uses stream ``(master_seed, j)`` shared by all policies."""
    curve = OutageCurve(spec.snr_db, spec.policies)
    for j, snr in enumerate(spec.snr_db):
        p = db_to_linear(snr)
        powers = [p * spec.power_scale[0], p * spec.power_scale[1]]
        rng = RngStream(spec.master_seed, j)
        counts = outage_counts(spec.policies, spec.rates, powers, spec.fading,
                               spec.trials_per_point, rng, workers)
        for pol, c in counts.items():
            est = _to_cluster(c, spec.trials_per_point)
            curve.cells[(pol, PRIMARY, j)] = est.primary
            curve.cells[(pol, SECONDARY, j)] = est.secondary
            curve.cells[(pol, "first_stage", j)] = est.first_stage
    return curve


def asymptotic_floor_oracle(policy, rates, fading, trials: int, rng: RngStream,
                            power_scale=(1.0, 1.0)) -> ClusterOutage:
    """Outage in the limit of infinite transmit power, from channel gains only.

    With both powers scaled by P -> inf the first-stage SINR tends to the
    ratio of the two scaled gains and every post-cancellation stage succeeds,
    so failure reduces to a comparison of gain ratios against thresholds.
    Gains are drawn with numpy's own exponential sampler, independently of
    the inversion path used by the simulator.
    """
    policy = DecodingPolicy(policy)
    eps_p, eps_s = _thresholds(rates)
    models = _as_models(fading)
    gen = np.random.Generator(np.random.Philox(key=rng.key))
    x = np.empty((trials, 2))
    for i, model in enumerate(models):
        if model.kind == DETERMINISTIC:
            x[:, i] = model.fixed_gains[i % len(model.fixed_gains)]
        else:
            x[:, i] = model.mean_gain * gen.standard_exponential(trials)
        x[:, i] *= power_scale[i]
    xp, xs = x[:, 0], x[:, 1]

    if policy is DecodingPolicy.QOS_BASED:
        stage1_fail = xp < eps_p * xs
    elif policy is DecodingPolicy.CSI_BASED:
        p_strong = xp >= xs
        stage1_fail = np.where(p_strong, xp < eps_p * xs, xs < eps_s * xp)
    else:
        p_first = eps_p * xs <= xp
        stage1_fail = ~p_first & (xs < eps_s * xp)
    k = int(stage1_fail.sum())
    return _to_cluster([k, k, k], trials)


@dataclass(frozen=True)
class FloorVerdict:
    kind: str  # "floored" | "decaying" | "inconclusive"
    value: float | None = None

    def __str__(self):
        return f"floored({self.value:.4g})" if self.kind == "floored" else self.kind


def classify_floor(snr_db: Sequence[float], estimates: Sequence[OutageEstimate]) -> FloorVerdict:
    """Floor verdict from the decade-spaced (10 dB) points ending at the last grid point.

    floored: the last two decade points have overlapping CIs and both exceed
    ten times the final CI width. decaying: every decade step at least halves
    the estimate. Anything else is inconclusive.
    """
    snr_db = [float(s) for s in snr_db]
    if len(snr_db) != len(estimates):
        raise ValueError("snr grid and estimates must align")
    picked = []
    target = snr_db[-1]
    for s, est in zip(reversed(snr_db), reversed(estimates)):
        if math.isclose(s, target, abs_tol=1e-9):
            picked.append(est)
            target -= 10.0
    picked.reverse()
    if len(picked) < 3:
        raise ValueError("floor detection needs >= 3 decade-spaced points spanning >= 20 dB")

    prev, last = picked[-2], picked[-1]
    overlap = prev.ci_low <= last.ci_high and last.ci_low <= prev.ci_high
    if overlap and min(prev.p_hat, last.p_hat) > 10.0 * last.width:
        return FloorVerdict("floored", last.p_hat)
    if all(b.p_hat <= a.p_hat / 2.0 for a, b in zip(picked, picked[1:])):
        return FloorVerdict("decaying")
    return FloorVerdict("inconclusive")


def detect_floor(curve: OutageCurve, user, policy=None) -> FloorVerdict:
    if policy is None:
        if len(curve.policies) != 1:
            raise ValueError("curve holds several policies; name one")
        policy = curve.policies[0]
    return classify_floor(curve.snr_db, curve.series(policy, user))
