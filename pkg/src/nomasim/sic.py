"""SIC decoding orders and sequential decoding for an uplink NOMA cluster.

In a two-user cluster user 0 is the primary user (delay/QoS constrained) and
user 1 the secondary user, unless roles are given explicitly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

PRIMARY = "primary"
SECONDARY = "secondary"


class DecodingPolicy(str, enum.Enum):
    CSI_BASED = "csi_based"
    QOS_BASED = "qos_based"
    HYBRID = "hybrid"

    @property
    def code(self) -> int:
        # integer codes understood by the compiled kernels
        return _POLICY_CODES[self]


_POLICY_CODES = {DecodingPolicy.CSI_BASED: 0, DecodingPolicy.QOS_BASED: 1, DecodingPolicy.HYBRID: 2}


def sinr_threshold(rate: float) -> float:
    if rate < 0:
        raise ValueError(f"target rate must be >= 0, got {rate}")
    return 2.0**rate - 1.0


@dataclass
class UserLoad:
    target_rate: float
    role: str = SECONDARY
    transmit_power: float = 1.0

    def __post_init__(self):
        if not self.target_rate > 0:
            raise ValueError("target_rate must be > 0")
        if self.role not in (PRIMARY, SECONDARY):
            raise ValueError(f"role must be primary or secondary, got {self.role!r}")
        if self.transmit_power < 0:
            raise ValueError("transmit_power must be >= 0")

    @property
    def sinr_threshold(self) -> float:
        return sinr_threshold(self.target_rate)


@dataclass
class DecodingOutcome:
    """Result of one SIC pass.

    ``stage_sinr[k]`` is the SINR seen at stage ``k`` (0.0 for stages never
    attempted because an earlier stage failed); ``success`` is indexed by user.
    """

    order: tuple[int, ...]
    stage_sinr: list[float]
    success: list[bool]
    tolerance: float | None = None

    @property
    def stage_success(self) -> list[bool]:
        return [self.success[u] for u in self.order]


def stage_sinr(alpha_target: float, interference_sum: float) -> float:
    if alpha_target < 0 or interference_sum < 0:
        raise ValueError("SNR and interference must be >= 0")
    return alpha_target / (1.0 + interference_sum)


def resolve_order_csi(alpha: Sequence[float]) -> tuple[int, ...]:
    # stable sort keeps the lower index first on ties
    return tuple(sorted(range(len(alpha)), key=lambda i: -alpha[i]))


def resolve_order_qos(roles: Sequence[str]) -> tuple[int, ...]:
    primaries = [i for i, r in enumerate(roles) if r == PRIMARY]
    if len(primaries) != 1:
        raise ValueError(f"QoS-based order needs exactly one primary user, got {len(primaries)}")
    p = primaries[0]
    return (p,) + tuple(i for i in range(len(roles)) if i != p)


def interference_tolerance(alpha_primary: float, eps_primary: float) -> float:
    """Largest interference (in SNR units) the primary user can absorb and still meet its threshold."""
    if not eps_primary > 0:
        raise ValueError("primary SINR threshold must be > 0")
    return alpha_primary / eps_primary - 1.0


def primary_first(alpha_primary: float, alpha_secondary: float, eps_primary: float,
                  background: float = 0.0) -> bool:
    """Hybrid rule: keep the primary at stage 1 iff it tolerates the secondary's interference.

    Evaluated as ``stage_sinr(a_p, a_s) >= eps_p``, which is the same event as
    ``a_s <= interference_tolerance(a_p, eps_p)`` but rounds exactly like decode().
    """
    if not eps_primary > 0:
        raise ValueError("primary SINR threshold must be > 0")
    return stage_sinr(alpha_primary, background + alpha_secondary) >= eps_primary


def resolve_order_hybrid(alpha_primary: float, alpha_secondary: float, eps_primary: float) -> tuple[int, int]:
    """Order over (primary=0, secondary=1)."""
    return (0, 1) if primary_first(alpha_primary, alpha_secondary, eps_primary) else (1, 0)


def decode(order: Sequence[int], alpha: Sequence[float], eps: Sequence[float],
           background: float = 0.0) -> DecodingOutcome:
    """Sequential SIC over ``order``.

    The user at stage k sees every not-yet-cancelled user of ``order`` plus
    ``background`` (undecoded signals outside the cluster) as interference.
    Once a stage fails nothing further is cancelled, so later stages fail too.
    """
    order = tuple(order)
    if sorted(order) != list(range(len(alpha))) or len(eps) != len(alpha):
        raise ValueError("order must be a permutation of the users and lists must align")
    success = [False] * len(alpha)
    sinrs = [0.0] * len(order)
    for k, user in enumerate(order):
        remaining = sum(alpha[j] for j in order[k + 1:])
        sinrs[k] = stage_sinr(alpha[user], background + remaining)
        if sinrs[k] < eps[user]:
            break
        success[user] = True
    return DecodingOutcome(order, sinrs, success)


def resolve_order(policy: DecodingPolicy | str, alpha: Sequence[float], eps: Sequence[float],
                  roles: Sequence[str] = (PRIMARY, SECONDARY), background: float = 0.0) -> tuple[int, ...]:
    policy = DecodingPolicy(policy)
    if policy is DecodingPolicy.CSI_BASED:
        return resolve_order_csi(alpha)
    if policy is DecodingPolicy.QOS_BASED:
        return resolve_order_qos(roles)
    if len(alpha) != 2:
        raise ValueError("hybrid ordering is defined for two-user clusters")
    p, s = resolve_order_qos(roles)
    return (p, s) if primary_first(alpha[p], alpha[s], eps[p], background) else (s, p)


def decode_cluster(policy: DecodingPolicy | str, alpha: Sequence[float], eps: Sequence[float],
                   roles: Sequence[str] = (PRIMARY, SECONDARY), background: float = 0.0) -> DecodingOutcome:
    """Resolve the order under ``policy`` and decode."""
    policy = DecodingPolicy(policy)
    order = resolve_order(policy, alpha, eps, roles, background)
    outcome = decode(order, alpha, eps, background)
    if policy is DecodingPolicy.HYBRID:
        p = roles.index(PRIMARY)
        outcome.tolerance = interference_tolerance(alpha[p], eps[p])
    return outcome
