"""Seeded, platform-independent random streams.

The generator is PCG64 (XSL-RR 128/64) whose 128-bit state and increment are
expanded from a 64-bit seed with splitmix64. Floats are produced from the raw
64-bit outputs as ``(x >> 11) * 2**-53`` so no library-specific transform sits
between the generator and the numbers the simulator consumes.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
_TWO_POW_M53 = 2.0**-53


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state; return ``(new_state, output)``."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


class RandomStream:
    """Deterministic stream of uint64 words and uniform doubles in [0, 1)."""

    def __init__(self, seed: int):
        if seed < 0 or seed > MASK64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = seed
        sm = seed
        words = []
        for _ in range(4):
            sm, out = splitmix64(sm)
            words.append(out)
        self._bitgen = np.random.PCG64()
        self.set_state((words[0] << 64) | words[1], ((words[2] << 64) | words[3]) | 1)

    def raw(self, n: int) -> np.ndarray:
        return self._bitgen.random_raw(n).astype(np.uint64, copy=False)

    def uniform(self, n: int) -> np.ndarray:
        """``n`` doubles in [0, 1), one raw word each."""
        if n == 0:
            return np.zeros(0)
        return (self.raw(n) >> np.uint64(11)).astype(np.float64) * _TWO_POW_M53

    def get_state(self) -> tuple[int, int]:
        st = self._bitgen.state["state"]
        return int(st["state"]), int(st["inc"])

    def set_state(self, state: int, inc: int) -> None:
        self._bitgen.state = {
            "bit_generator": "PCG64",
            "state": {"state": state, "inc": inc},
            "has_uint32": 0,
            "uinteger": 0,
        }


def random_stream(seed: int) -> RandomStream:
    return RandomStream(seed)
