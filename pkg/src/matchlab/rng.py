"""Deterministic counter-based random streams for Monte Carlo trials.

Every simulation draw in this package comes from one documented scheme so
that trial streams are reproducible bit-for-bit across runs, worker counts,
and language ports:

* ``mix64`` is the splitmix64 finalizer (Steele/Lea/Flood mixing constants).
* The per-trial seed is ``trial_seed(master, t) = mix64(master + (t+1)*GOLDEN)``,
  i.e. the ``t``-th output of a splitmix64 sequence seeded with ``master``.
* Trial ``t`` then exposes a counter-indexed stream: draw ``k`` is
  ``mix64(trial_seed + (k+1)*GOLDEN)`` and the corresponding uniform in
  ``[0, 1)`` is that 64-bit word divided by 2**64.

Simulation kernels consume the stream in a fixed order (see
``matchlab.simulate``): when the arrival order is randomized, draws
``0 .. m-2`` drive a Fisher-Yates shuffle (swap index ``j = floor(u*(i+1))``
for ``i = m-1 .. 1``); edge-existence draws follow, indexed by edge id, so a
realization does not depend on the arrival order used.
"""

from __future__ import annotations

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB
_INV_2_64 = 1.0 / 2.0**64


def mix64(z: int) -> int:
    """splitmix64 finalizer: a 64-bit bijective mixing of ``z``."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX_A) & MASK64
    z = ((z ^ (z >> 27)) * _MIX_B) & MASK64
    return z ^ (z >> 31)


def trial_seed(master: int, trial_index: int) -> int:
    """Seed of trial ``trial_index`` under master seed ``master``."""
    return mix64(master + (trial_index + 1) * GOLDEN)


def stream_word(seed: int, k: int) -> int:
    """``k``-th 64-bit word of the stream rooted at ``seed`` (k >= 0)."""
    return mix64(seed + (k + 1) * GOLDEN)


def stream_uniform(seed: int, k: int) -> float:
    """``k``-th uniform draw in [0, 1) of the stream rooted at ``seed``."""
    return stream_word(seed, k) * _INV_2_64


class TrialStream:
    """Sequential reader over one trial's draw stream (reference path).

    The numba kernels implement identical arithmetic; tests assert equality.
    """

    def __init__(self, master: int, trial_index: int):
        self.seed = trial_seed(master, trial_index)
        self.k = 0

    def uniform(self) -> float:
        u = stream_uniform(self.seed, self.k)
        self.k += 1
        return u

    def below(self, n: int) -> int:
        """Integer in [0, n) as floor(u*n); tiny floor bias is accepted."""
        return int(self.uniform() * n)

    def shuffle(self, seq: list) -> None:
        """Fisher-Yates using draws 0..len-2 of the stream."""
        for i in range(len(seq) - 1, 0, -1):
            j = self.below(i + 1)
            seq[i], seq[j] = seq[j], seq[i]
