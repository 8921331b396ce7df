"""Counter-based random streams.

Every stream is a Philox-4x64 generator keyed by ``(master_seed, stream_id)``.
Trial ``t`` of a stream always reads the same counter window, so a trial's
draws do not depend on which worker runs it or how trials are chunked.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_WORDS_PER_BLOCK = 4  # Philox-4x64 emits four 64-bit words per counter step
_TO_UNIT = 2.0**-53
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            value = getattr(self, name)
            if not 0 <= int(value) <= _MASK64:
                raise ValueError(f"{name} must be a 64-bit unsigned integer, got {value}")

    @property
    def key(self) -> np.ndarray:
        seq = np.random.SeedSequence([int(self.master_seed), int(self.stream_id)])
        return seq.generate_state(2, dtype=np.uint64)

    def child(self, stream_id: int) -> "RngStream":
        return RngStream(self.master_seed, stream_id)

    def raw_block(self, first_trial: int, n_trials: int, width: int) -> np.ndarray:
        """Raw 64-bit words for trials ``first_trial .. first_trial + n_trials - 1``.

        Returns an array of shape ``(n_trials, width)``.
        """
        if n_trials < 0 or first_trial < 0 or width < 1:
            raise ValueError("first_trial, n_trials must be >= 0 and width >= 1")
        blocks = -(-width // _WORDS_PER_BLOCK)
        start = first_trial * blocks
        counter = np.array(
            [start & _MASK64, start >> 64, 0, 0], dtype=np.uint64
        )
        bitgen = np.random.Philox(key=self.key, counter=counter)
        raw = bitgen.random_raw(n_trials * blocks * _WORDS_PER_BLOCK)
        raw = raw.reshape(n_trials, blocks * _WORDS_PER_BLOCK)
        return raw[:, :width]

    def uniform_block(self, first_trial: int, n_trials: int, width: int) -> np.ndarray:
        """Uniform doubles on [0, 1) with 53-bit resolution, shape ``(n_trials, width)``."""
        raw = self.raw_block(first_trial, n_trials, width)
        return (raw >> np.uint64(11)).astype(np.float64) * _TO_UNIT

    def uniforms(self, n: int, trial: int = 0) -> np.ndarray:
        """``n`` uniforms belonging to a single trial."""
        if n == 0:
            return np.empty(0)
        return self.uniform_block(trial, 1, n)[0]
