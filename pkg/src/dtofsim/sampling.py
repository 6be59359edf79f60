"""Counter-based random streams and time-domain sampling strategies.

Random numbers come from a stateless counter hash (splitmix64 finalizer) so
that any sample can be regenerated from its key alone.  This is what makes
random replay trivial: re-tracing a path with the same (seed, pixel, pair)
key reproduces the primal path's random tableau without storing anything.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .varlab import STRATEGIES

# Fixed tableau layout: dimension indices within a pair's time stream.
TIME_DIM_STRATUM_JITTER = 0
TIME_DIM_SWAP = 1
TIME_DIM_PARTNER = 2

# Path-tracing tableau: dims 0,1 are the pixel jitter, then 5 dims per bounce
# (3 for BSDF sampling, 2 for the light sample).
PATH_DIMS_PIXEL = 2
PATH_DIMS_PER_BOUNCE = 5

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def _splitmix64(z):
    """SplitMix64 finalizer: a high-quality 64-bit mixing function."""
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def hash_u64(*words):
    """Mix an arbitrary tuple of integer words into one uint64 (vectorized).

    Each word is absorbed with a golden-ratio increment then mixed, so
    distinct key tuples land in statistically independent points.
    """
    with np.errstate(over="ignore"):
        state = np.uint64(0)
        for w in words:
            w = np.asarray(w).astype(np.uint64)
            state = _splitmix64(state + _GOLDEN + w)
        return state


def u01_from_bits(bits):
    """Map uint64 bits to floats uniform in [0, 1) with 53-bit precision."""
    return (np.asarray(bits, dtype=np.uint64) >> np.uint64(11)).astype(
        np.float64) * (1.0 / 9007199254740992.0)


# Stream kinds. Replay streams intentionally share the primal kind so an
# antithetic retrace consumes the exact same numbers.
KIND_TIME = 0
KIND_PATH = 1
KIND_CONTINUATION = 2  # independent continuation beyond the mapping depth


@dataclass(frozen=True)
class RngStream:
    """Stateless random stream keyed by (seed, kind, pixel, pair).

    ``u01(dim)`` returns the uniform sample at tableau position ``dim``;
    pixel/pair may be numpy arrays for a whole wavefront at once.  A
    replay-role stream is simply the same key again, so it reproduces the
    primal sequence exactly.
    """

    seed: int
    kind: int
    pixel: object = 0
    pair: object = 0

    def u01(self, dim):
        return u01_from_bits(
            hash_u64(self.seed, self.kind, self.pixel, self.pair, dim))

    def bits(self, dim):
        return hash_u64(self.seed, self.kind, self.pixel, self.pair, dim)

    def with_kind(self, kind):
        return RngStream(self.seed, kind, self.pixel, self.pair)


@dataclass
class TimePair:
    """A primal/antithetic time pair with pdf bookkeeping.

    All densities are 1/T: stratification rearranges samples but never
    reweights them. ``swapped`` records whether the primal/antithetic roles
    were exchanged for this pair. Fields may be numpy arrays (one entry per
    pixel or per wavefront lane).
    """

    t_primal: object
    t_antithetic: object
    strategy: str
    t_s: float
    pdf_primal: object
    pdf_antithetic: object
    swapped: object


def antithetic_partner(strategy, t, t_s, T):
    """The shifted or mirrored antithetic map on [0, T]."""
    if strategy in ("shifted", "shifted-antithetic"):
        return np.mod(t + t_s, T)
    if strategy in ("mirrored", "mirrored-antithetic"):
        return np.mod(-t + t_s, T)
    raise ValueError(f"no antithetic partner map for strategy {strategy!r}")


def default_time_shift(strategy, T):
    return 0.5 * T if strategy.startswith("shifted") else 0.0


def _canonical(strategy):
    s = strategy.replace("-antithetic", "")
    if s not in STRATEGIES:
        raise ValueError(f"unknown time-sampling strategy {strategy!r}")
    return s


def sample_time(strategy, pair_index, n_pairs, rng: RngStream, T,
                t_s=None):
    """Draw one primal/antithetic time pair with further stratification.

    The primal time is jittered within stratum ``pair_index`` of the left
    half of [0, T] (stratum width T/(2*n_pairs)); the antithetic partner is
    placed by the strategy map.  With probability 1/2 the two roles are
    swapped so that primal samples cover the whole exposure across pairs.
    For the non-antithetic strategies the second sample is an independent
    (uniform) or stratified draw rather than a deterministic partner.
    """
    s = _canonical(strategy)
    if t_s is None:
        t_s = default_time_shift(s, T)
    if not 0.0 <= t_s <= T:
        raise ValueError("time shift t_s must lie in [0, T]")
    if np.any(np.asarray(pair_index) >= n_pairs):
        raise ValueError("pair_index must be < n_pairs")

    u = rng.u01(TIME_DIM_STRATUM_JITTER)
    pdf = np.broadcast_to(np.asarray(1.0 / T), np.shape(u)).copy()

    if s == "uniform":
        t_p = u * T
        t_a = rng.u01(TIME_DIM_PARTNER) * T
        swap = np.zeros(np.shape(u), dtype=bool)
        return TimePair(t_p, t_a, s, t_s, pdf, pdf.copy(), swap)

    half = T / 2.0
    width = half / n_pairs
    t_p = (pair_index + u) * width

    if s == "stratified":
        # Plain stratification: independent jitter in the mirror stratum of
        # the right half; no cross-sample correlation beyond the strata.
        t_a = half + (pair_index + rng.u01(TIME_DIM_PARTNER)) * width
    elif s == "decorrelated-stratified":
        v = rng.u01(TIME_DIM_PARTNER)
        j = np.minimum((v * n_pairs).astype(np.int64), n_pairs - 1)
        t_a = half + (j + np.mod(v * n_pairs, 1.0)) * width
    else:
        t_a = antithetic_partner(s, t_p, t_s, T)

    swap = rng.u01(TIME_DIM_SWAP) < 0.5
    t_p, t_a = np.where(swap, t_a, t_p), np.where(swap, t_p, t_a)
    return TimePair(t_p, t_a, s, t_s, pdf, pdf.copy(), swap)


def sample_time_periodic(n_t, rng: RngStream, T):
    """One uniform time plus n_t - 1 copies shifted by multiples of T/n_t.

    Generalizes the single shifted antithetic (n_t = 2) to the periodic
    shift family [T/n_t, 2T/n_t, ..., (n_t-1)T/n_t].  ``n_t`` must be a
    power of two (matching the usual sweep 2..1024).
    """
    if n_t < 2 or n_t & (n_t - 1):
        raise ValueError("n_t must be a power of two >= 2")
    t_p = rng.u01(TIME_DIM_STRATUM_JITTER) * T
    return [np.mod(t_p + k * T / n_t, T) for k in range(n_t)]


def sample_time_decorrelated_stratified(i, n, rng: RngStream, T):
    """Primal in left-half stratum i, partner in a random right-half stratum.

    The stratified-without-antithetic-structure baseline: it keeps the
    n-strata coverage but correlates stratum i with a uniformly random
    stratum on the other half instead of a deterministic partner.
    """
    return sample_time("decorrelated-stratified", i, n, rng, T)
