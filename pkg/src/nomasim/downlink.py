"""QoS-driven downlink NOMA: sensor/broadband pairing and minimal power allocation.

Sensors carry a latency (blocklength) and reliability (decoding error)
requirement, broadband users a plain rate target. Each cluster holds one
sensor and one stronger broadband user; the sensor is always decoded first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from scipy.special import erfcinv

from .sic import decode, sinr_threshold

LOG2E = math.log2(math.e)


def q_inv(delta: float) -> float:
    """Inverse Gaussian tail function."""
    return math.sqrt(2.0) * float(erfcinv(2.0 * delta))


def _check_delta(delta):
    if not 0.0 < delta < 0.5:
        raise ValueError(f"decoding error probability must lie in (0, 0.5), got {delta}")


def fb_rate(gamma: float, n: float, delta: float) -> float:
    """Normal-approximation achievable rate (bits/s/Hz) at blocklength n and error delta."""
    _check_delta(delta)
    if gamma < 0 or n < 1:
        raise ValueError("need gamma >= 0 and n >= 1")
    dispersion = 1.0 - 1.0 / (1.0 + gamma) ** 2
    rate = math.log2(1.0 + gamma) - math.sqrt(dispersion / n) * q_inv(delta) * LOG2E
    return max(rate, 0.0)


def required_sensor_sinr(bits: float, n: float, delta: float, rtol: float = 1e-9) -> float:
    """Smallest SINR meeting both the finite-blocklength rate and the plain decoding rate b/n."""
    _check_delta(delta)
    if bits < 1 or n < 1:
        raise ValueError("need payload bits >= 1 and blocklength >= 1")
    target = bits / n
    lo, hi = 0.0, max(1.0, 2.0**target - 1.0)
    while fb_rate(hi, n, delta) < target:
        lo, hi = hi, 2.0 * hi
    # the clamped rate is 0 then strictly increasing, so the crossing is unique
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if fb_rate(mid, n, delta) >= target:
            hi = mid
        else:
            lo = mid
    return max(hi, 2.0**target - 1.0)


@dataclass(frozen=True)
class SensorProfile:
    payload_bits: float
    blocklength: float
    decoding_error: float
    channel_gain: float

    def __post_init__(self):
        if self.blocklength < 1 or self.payload_bits < 1:
            raise ValueError("sensor needs blocklength >= 1 and payload_bits >= 1")
        _check_delta(self.decoding_error)
        if not self.channel_gain >= 0:
            raise ValueError("channel gain must be >= 0")

    @property
    def eps(self) -> float:
        return required_sensor_sinr(self.payload_bits, self.blocklength, self.decoding_error)


@dataclass(frozen=True)
class BroadbandProfile:
    target_rate: float
    channel_gain: float

    def __post_init__(self):
        if not self.target_rate > 0:
            raise ValueError("broadband target_rate must be > 0")
        if not self.channel_gain >= 0:
            raise ValueError("channel gain must be >= 0")

    @property
    def eps(self) -> float:
        return sinr_threshold(self.target_rate)


@dataclass
class ClusterPlan:
    sensor: int  # index into the sensor list
    broadband: int  # index into the broadband list
    sensor_gain: float
    broadband_gain: float
    p_sensor: float = 0.0
    p_broadband: float = 0.0
    eps_sensor: float = 0.0
    eps_broadband: float = 0.0
    feasible: bool = True

    @property
    def required_total(self) -> float:
        return self.p_sensor + self.p_broadband


@dataclass
class Pairing:
    clusters: list[ClusterPlan]
    unpaired_sensors: list[int]
    unpaired_broadbands: list[int]


def pair_users(sensor_gains: Sequence[float], broadband_gains: Sequence[float]) -> Pairing:
    """Greedy pairing: strongest sensor first, each takes the weakest free broadband user stronger than itself."""
    sensors = sorted(range(len(sensor_gains)), key=lambda i: -sensor_gains[i])
    free = sorted(range(len(broadband_gains)), key=lambda j: broadband_gains[j])
    clusters, leftover = [], []
    for i in sensors:
        g_s = sensor_gains[i]
        match = next((j for j in free if broadband_gains[j] > g_s), None)
        if match is None:
            leftover.append(i)
            continue
        free.remove(match)
        clusters.append(ClusterPlan(i, match, float(g_s), float(broadband_gains[match])))
    return Pairing(clusters, sorted(leftover), sorted(free))


def _raise_until(value: float, ok) -> float:
    # closed forms can land one ulp short of the threshold
    while not ok(value):
        value = math.nextafter(value, math.inf)
    return value


def q_pa(cluster: ClusterPlan, eps_sensor: float, eps_broadband: float) -> ClusterPlan:
    """Minimal powers meeting both users' thresholds with the sensor decoded first.

    The broadband power meets its post-cancellation threshold with equality;
    the sensor power meets the sensor's own threshold under broadband
    interference with equality. Decoding the sensor at the stronger broadband
    receiver then holds automatically, and is checked.
    """
    g_s, g_b = cluster.sensor_gain, cluster.broadband_gain
    if not (eps_sensor > 0 and eps_broadband > 0):
        raise ValueError("thresholds must be > 0")
    cluster.eps_sensor, cluster.eps_broadband = eps_sensor, eps_broadband
    if not (g_s > 0 and g_b > g_s):
        cluster.feasible = False
        cluster.p_sensor = cluster.p_broadband = math.inf
        return cluster

    p_b = _raise_until(eps_broadband / g_b, lambda p: p * g_b >= eps_broadband)
    p_s = _raise_until(eps_sensor * (p_b * g_s + 1.0) / g_s,
                       lambda p: (p * g_s) / (1.0 + p_b * g_s) >= eps_sensor)
    cluster.p_sensor, cluster.p_broadband = p_s, p_b
    cluster.feasible = all(cluster_decodes(cluster))
    return cluster


def cluster_decodes(cluster: ClusterPlan) -> tuple[bool, bool]:
    """(sensor ok at its receiver, broadband ok at its receiver) via SIC decoding."""
    p_s, p_b = cluster.p_sensor, cluster.p_broadband
    g_s, g_b = cluster.sensor_gain, cluster.broadband_gain
    eps = [cluster.eps_sensor, cluster.eps_broadband]
    at_sensor = decode([0], [p_s * g_s], eps[:1], background=p_b * g_s)
    at_broadband = decode([0, 1], [p_s * g_b, p_b * g_b], eps)
    return at_sensor.success[0], all(at_broadband.success)


def maximize_connectivity(clusters: Sequence[ClusterPlan], power_budget: float) -> list[ClusterPlan]:
    """Admit clusters cheapest-first while the cumulative power stays within budget."""
    admitted, spent = [], 0.0
    for c in sorted((c for c in clusters if c.feasible), key=lambda c: c.required_total):
        if spent + c.required_total > power_budget:
            break
        spent += c.required_total
        admitted.append(c)
    return admitted


@dataclass
class DownlinkPlan:
    clusters: list[ClusterPlan]
    admitted: list[ClusterPlan]
    unpaired_sensors: list[int]
    unpaired_broadbands: list[int]


def plan_downlink(sensors: Sequence[SensorProfile], broadbands: Sequence[BroadbandProfile],
                  power_budget: float) -> DownlinkPlan:
    pairing = pair_users([s.channel_gain for s in sensors], [b.channel_gain for b in broadbands])
    for c in pairing.clusters:
        q_pa(c, sensors[c.sensor].eps, broadbands[c.broadband].eps)
    admitted = maximize_connectivity(pairing.clusters, power_budget)
    return DownlinkPlan(pairing.clusters, admitted, pairing.unpaired_sensors, pairing.unpaired_broadbands)
