"""Channel power gains and received SNR (noise power normalised to 1)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .rng import RngStream

RAYLEIGH = "rayleigh"
DETERMINISTIC = "deterministic"


@dataclass(frozen=True)
class FadingModel:
    """Power-gain distribution.

    ``rayleigh`` draws exponential power gains with mean ``mean_gain``;
    ``deterministic`` cycles through ``fixed_gains``.
    """

    kind: str = RAYLEIGH
    mean_gain: float = 1.0
    fixed_gains: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "fixed_gains", tuple(float(g) for g in self.fixed_gains))
        if self.kind == RAYLEIGH:
            if not self.mean_gain > 0:
                raise ValueError(f"rayleigh fading needs mean_gain > 0, got {self.mean_gain}")
        elif self.kind == DETERMINISTIC:
            if not self.fixed_gains:
                raise ValueError("deterministic fading needs at least one fixed gain")
            if any(not (g >= 0 and np.isfinite(g)) for g in self.fixed_gains):
                raise ValueError("fixed gains must be finite and >= 0")
        else:
            raise ValueError(f"unknown fading kind {self.kind!r}")

    @classmethod
    def rayleigh(cls, mean_gain: float = 1.0) -> "FadingModel":
        return cls(RAYLEIGH, mean_gain)

    @classmethod
    def deterministic(cls, gains: Sequence[float]) -> "FadingModel":
        return cls(DETERMINISTIC, 1.0, tuple(gains))

    def gains_from_uniforms(self, u: np.ndarray, index: np.ndarray | int | None = None) -> np.ndarray:
        """Map uniforms to power gains by inversion.

        ``index`` selects the cycling position for deterministic models; it
        defaults to the position along the last axis of ``u``.
        """
        u = np.asarray(u, dtype=np.float64)
        if self.kind == RAYLEIGH:
            return -self.mean_gain * np.log1p(-u)
        fixed = np.asarray(self.fixed_gains)
        if index is None:
            index = np.arange(u.shape[-1]) if u.ndim else 0
        index = np.asarray(index) % len(fixed)
        return np.broadcast_to(fixed[index], u.shape).copy()


@dataclass
class LinkRealization:
    gains: list[float]
    received_snr: list[float]

    def __post_init__(self):
        if len(self.gains) != len(self.received_snr):
            raise ValueError("gains and received_snr must have equal length")
        for v in (*self.gains, *self.received_snr):
            if not (np.isfinite(v) and v >= 0):
                raise ValueError("gains and SNRs must be finite and >= 0")


def sample_gains(model: FadingModel, rng: RngStream, n: int, trial: int = 0) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be >= 1")
    if model.kind == DETERMINISTIC:
        return model.gains_from_uniforms(np.zeros(n))
    return model.gains_from_uniforms(rng.uniforms(n, trial))


def to_received_snr(transmit_power, gain):
    p = np.asarray(transmit_power, dtype=np.float64)
    g = np.asarray(gain, dtype=np.float64)
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(g))):
        raise ValueError("transmit power and gain must be finite")
    out = p * g
    return float(out) if out.ndim == 0 else out


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=np.float64) / 10.0)


def realize_link(powers: Sequence[float], models: Sequence[FadingModel], rng: RngStream,
                 trial: int = 0) -> LinkRealization:
    """One realization for users sharing a resource block (one model per user)."""
    u = rng.uniforms(len(models), trial)
    gains = [float(m.gains_from_uniforms(u[i:i + 1], i)[0]) for i, m in enumerate(models)]
    snr = [to_received_snr(p, g) for p, g in zip(powers, gains)]
    return LinkRealization(gains, snr)
