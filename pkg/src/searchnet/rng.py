"""Deterministic random-stream derivation.

Every stochastic component of the simulator draws from one of two kinds
of sources, both derived from a single 64-bit master seed:

* named substreams -- independent ``numpy.random.Generator`` instances
  addressed by an integer path, e.g. ``substream(seed, replicate, CH_SIDE)``.
  Streams with distinct paths never share state, so consuming one cannot
  shift another.  This is what makes engine-on / engine-off runs coupled
  counterfactuals: they read the same side/prototype streams while only
  the search streams diverge.
* keyed uniforms -- stateless counter-style draws addressed by integer
  keys (node ids, infection age, time slot) instead of consumption order.
  Used by the rumor simulator, where trials must be re-derivable per
  (source, target, age) triple regardless of evaluation order.

Substream channel map (path after the master seed):

    evolution, per replicate r:
        (r, CH_SIDE)   arrival-side coin, one draw per step
        (r, CH_PROTO)  prototype selection, one draw per step
        (r, CH_COPY)   copy-target choices, variable draws per step
        (r, CH_GATE)   search-gate coin, one draw per step (always consumed)
        (r, CH_PICK)   search-target choices, only when the gate fires
        (r, CH_SEED_GRAPH)  synthetic seed-graph construction
    (CH_SIR_INIT,)     initial infected-set sampling for a rumor run

Keyed-uniform channels (independent of the substream map):

    KCH_CONTACT   per (infectious node, contact node, infection age)
    KCH_RECOVERY  per (node, infection age)
    KCH_SEARCH    per (node, time slot)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_U64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_K1 = 0xC2B2AE3D27D4EB4F
_K2 = 0x165667B19E3779F9

CH_SIDE = 0
CH_PROTO = 1
CH_COPY = 2
CH_GATE = 3
CH_PICK = 4
CH_SEED_GRAPH = 5

CH_SIR_INIT = 13

KCH_CONTACT = 1
KCH_RECOVERY = 2
KCH_SEARCH = 3


def substream(seed: int, *path: int) -> np.random.Generator:
    """Generator for the named substream ``path`` of ``seed``.

    The same (seed, path) pair always yields an identical stream;
    distinct paths yield statistically independent streams.
    """
    return np.random.default_rng(
        np.random.SeedSequence(seed & _U64, spawn_key=tuple(path))
    )


def derive_seed(seed: int, *path: int) -> int:
    """A 64-bit integer seed for the named substream (for nested configs)."""
    state = np.random.SeedSequence(seed & _U64, spawn_key=tuple(path)).generate_state(2)
    return int(state[0]) | (int(state[1]) << 32)


def as_generator(rng: np.random.Generator | int) -> np.random.Generator:
    """Accept either a Generator or an integer seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(np.random.SeedSequence(int(rng) & _U64))


def _mix64(x: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer over uint64 arrays; multiplication wraps mod 2**64
    x = x ^ (x >> np.uint64(30))
    x = x * np.uint64(0xBF58476D1CE4E5B9)
    x = x ^ (x >> np.uint64(27))
    x = x * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def keyed_u01(seed: int, channel: int, a, b=0, c=0):
    """Uniforms in [0, 1) addressed by integer keys rather than draw order.

    Broadcasts over array-valued ``a``/``b``/``c``.  The same
    (seed, channel, a, b, c) always returns the same value, which lets
    coupled simulations share individual trials without sharing a
    sequential stream.
    """
    base = np.uint64((seed ^ (channel * _GOLDEN)) & _U64)
    h = _mix64(base ^ (np.asarray(a, dtype=np.uint64) * np.uint64(_GOLDEN)))
    h = _mix64(h ^ (np.asarray(b, dtype=np.uint64) * np.uint64(_K1)))
    h = _mix64(h ^ (np.asarray(c, dtype=np.uint64) * np.uint64(_K2)))
    return (h >> np.uint64(11)).astype(np.float64) * (2.0**-53)


@dataclass
class EvolutionStreams:
    """The five named streams one evolution run consumes.

    Per step the draw order is fixed: one side coin, one prototype draw,
    a variable number of copy-choice draws, one gate coin (consumed even
    when the gate probability is zero), then search-choice draws only if
    the gate fired.  Keeping the search draws on their own streams means
    an engine-off run replays the identical arrival/copy randomness.
    """

    side: np.random.Generator
    proto: np.random.Generator
    copy: np.random.Generator
    gate: np.random.Generator
    pick: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int, replicate: int = 0) -> "EvolutionStreams":
        return cls(
            side=substream(seed, replicate, CH_SIDE),
            proto=substream(seed, replicate, CH_PROTO),
            copy=substream(seed, replicate, CH_COPY),
            gate=substream(seed, replicate, CH_GATE),
            pick=substream(seed, replicate, CH_PICK),
        )
