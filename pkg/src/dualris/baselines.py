"""Reference schemes with fixed reflection phases.

All baselines keep their phases frozen and re-optimize the beamformers with
the same machinery as the proposed scheme, so comparisons isolate the value
of phase optimization. Because a common phase factor per surface can be
absorbed into the beamformers, SameRandom is a rotated copy of FixedPhase
and must match its optimized rate; that degeneracy doubles as a regression
check on the whole pipeline.
"""

import dataclasses
import enum

import numpy as np

from .model import PhasePair
from .optimizer import AlternatingConfig, matched_filter_init, optimize


class BaselineKind(enum.Enum):
    FIXED_PHASE = "FixedPhase"
    ALL_RANDOM = "AllRandom"
    SAME_RANDOM = "SameRandom"


_RNG_STREAM = {
    BaselineKind.FIXED_PHASE: 1,
    BaselineKind.ALL_RANDOM: 2,
    BaselineKind.SAME_RANDOM: 3,
}


def baseline_phases(kind, n, rng=None):
    """Phases for one baseline: all ones, i.i.d. random, or one common draw.

    FixedPhase never consumes randomness. AllRandom draws an independent
    uniform angle per element and surface; SameRandom draws a single angle
    per surface and repeats it across elements.
    """
    if kind is BaselineKind.FIXED_PHASE:
        ones = np.ones(n, dtype=np.complex128)
        return PhasePair(phi1=ones, phi2=ones.copy())
    if rng is None:
        raise ValueError(f"{kind.value} needs an rng")
    if kind is BaselineKind.ALL_RANDOM:
        theta1 = rng.uniform(0.0, 2.0 * np.pi, size=n)
        theta2 = rng.uniform(0.0, 2.0 * np.pi, size=n)
    elif kind is BaselineKind.SAME_RANDOM:
        theta1 = np.full(n, float(rng.uniform(0.0, 2.0 * np.pi)))
        theta2 = np.full(n, float(rng.uniform(0.0, 2.0 * np.pi)))
    else:
        raise ValueError(f"unknown baseline kind {kind!r}")
    return PhasePair(phi1=np.exp(1j * theta1), phi2=np.exp(1j * theta2))


def run_baseline(kind, ch, cfg, alt=None, rng=None):
    """Optimize beamformers against frozen baseline phases.

    Runs the proposed scheme's outer loop with the phase stage disabled and
    a single start, so the trace shape, initialization scaling and best
    iterate selection are identical and comparisons isolate the phase
    strategy. The rng defaults to a stream derived from cfg.rng_seed and the
    baseline kind.
    """
    alt = alt if alt is not None else AlternatingConfig()
    alt = dataclasses.replace(alt, run_phase_stage=False, restarts=1)
    if rng is None and kind is not BaselineKind.FIXED_PHASE:
        rng = np.random.default_rng([cfg.rng_seed, _RNG_STREAM[kind]])
    ph = baseline_phases(kind, cfg.N, rng)
    bp0 = matched_filter_init(ch, cfg, ph)
    return optimize(ch, cfg, alt=alt, init=(bp0, ph))
