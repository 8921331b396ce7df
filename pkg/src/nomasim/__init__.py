"""Seeded Monte Carlo simulator for NOMA multiple access.

Modules: ``channel`` (fading, SNR), ``sic`` (decoding orders), ``outage``
(outage sweeps and floor oracles), ``semigf`` (semi-grant-free uplink),
``downlink`` (QoS clustering and power allocation), ``cli`` (runner).
"""

from .channel import FadingModel, sample_gains, to_received_snr
from .kernels import BACKEND
from .rng import RngStream
from .sic import DecodingPolicy, decode, sinr_threshold

__version__ = "0.1.0"

__all__ = ["BACKEND", "DecodingPolicy", "FadingModel", "RngStream", "decode", "sample_gains",
           "sinr_threshold", "to_received_snr"]
