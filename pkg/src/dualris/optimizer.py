"""Alternating loop joining the beamforming stage and the phase stage."""

import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize_scalar

from .beamformer import beamforming_stage, consistent_state
from .errors import ConvergenceError, NumericalError
from .model import BeamPair, PhasePair, effective_channels, sinr_and_rate, static_power
from .phaseopt import phase_stage

OBJECTIVES = ("ee", "rate")


@dataclass(frozen=True)
class AlternatingConfig:
    """Iteration budgets and tolerances for the outer loop and both stages."""

    n_max: int = 200
    eps: float = 1e-4
    beam_tol: float = 1e-4
    beam_max_sweeps: int = 100
    phase_eps: float = 1e-5
    phase_max_iters: int = 50
    bisect_eps: float = 1e-9
    objective: str = "ee"
    run_phase_stage: bool = True
    restarts: int = 1
    init_scale: float = 1.0
    init_watts: float = None
    power_scale: bool = None

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError(f"n_max must be positive, got {self.n_max}")
        if self.eps <= 0 or self.beam_tol <= 0 or self.phase_eps <= 0:
            raise ValueError("tolerances must be positive")
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}, got {self.objective!r}")
        if self.restarts < 1:
            raise ValueError(f"restarts must be positive, got {self.restarts}")
        if not 0.0 < self.init_scale <= 1.0:
            raise ValueError(f"init_scale must be in (0, 1], got {self.init_scale}")
        if self.init_watts is not None and not self.init_watts > 0.0:
            raise ValueError(f"init_watts must be positive, got {self.init_watts}")
        if self.power_scale not in (None, True, False):
            raise ValueError(f"power_scale must be None or bool, got {self.power_scale!r}")

    def wants_power_scale(self):
        """Resolved power-scale switch: defaults to on for the ratio objective."""
        if self.power_scale is None:
            return self.objective == "ee"
        return self.power_scale


@dataclass
class OuterRecord:
    """Metrics of the iterate reached after one outer iteration.

    best_objective, best_sum_rate and best_ee describe the best iterate
    encountered so far (mid-cycle candidates included), which is what
    optimize ultimately returns; the plain fields describe the iterate the
    cycle ended on.
    """

    iteration: int
    sum_rate: float
    ee: float
    power: float
    min_rate: float
    qos_ok: bool
    phase_feasible: bool
    beam_sweeps: int
    phase_iters: int
    objective: float
    best_objective: float
    best_sum_rate: float
    best_ee: float
    wall_ms: float


@dataclass
class IterationTrace:
    records: list = field(default_factory=list)
    converged: bool = False
    cap_hit: bool = False
    restart: int = 0


def matched_filter_init(ch, cfg, ph, watts=None):
    """Beamformers proportional to the effective channel conjugates.

    Columns are scaled jointly so the pair spends exactly the power budget,
    or exactly `watts` when given. The watts path never reads the budget, so
    the same target power yields bit-identical pairs across budgets.
    """
    hbar1, hbar2 = effective_channels(ch, ph)
    v1 = hbar1.conj().T
    v2 = hbar2.conj().T
    total = float(np.sum(np.abs(v1) ** 2) + np.sum(np.abs(v2) ** 2))
    if total > 0:
        scale = np.sqrt((cfg.P_max if watts is None else watts) / total)
        v1 = v1 * scale
        v2 = v2 * scale
    return BeamPair(V1=v1, V2=v2)


def default_init(ch, cfg):
    """All-ones phases plus matched-filter beamformers at full budget."""
    ph = PhasePair(
        phi1=np.ones(cfg.N, dtype=np.complex128),
        phi2=np.ones(cfg.N, dtype=np.complex128),
    )
    return matched_filter_init(ch, cfg, ph), ph


def _iterate_metrics(ch, ph, bp, cfg):
    """Sum rate and efficiency of one iterate."""
    _, _, rate = sinr_and_rate(ch, ph, bp, cfg)
    return rate, rate / (bp.transmit_power() + static_power(cfg))


# fixed geometric ladder of power scales, 8 points per decade
_SCALE_LADDER = np.geomspace(1e-8, 1e8, 129)


def _ee_power_scale(ch, ph, bp, cfg):
    """Move both precoders to the efficiency-optimal transmit power.

    The WMMSE stage drives the rate numerator and spends toward its budget,
    which is the wrong operating point for a ratio with a power denominator.
    With directions fixed, scaling the pair by sqrt(t) multiplies every
    signal and interference power by t, so the ratio is one-dimensional in
    t. Candidates come from the fixed ladder clipped at the true budget:
    wherever the optimum is interior the outcome does not depend on the
    budget at all, which is what makes rate curves plateau exactly once the
    budget stops binding.

    Returns (pair, spend, changed). The spend is the effective budget the
    next beamforming sweep should solve against, so directions get
    re-optimized at the operating point instead of being dragged there by a
    scalar.
    """
    p0 = bp.transmit_power()
    if p0 <= 0.0:
        return bp, cfg.P_max, False
    t_max = cfg.P_max / p0
    cand = np.append(_SCALE_LADDER[_SCALE_LADDER < t_max], t_max)

    hbar1, hbar2 = effective_channels(ch, ph)
    s1 = hbar1 @ bp.V1
    s2 = hbar2 @ bp.V2
    if cfg.coherent:
        p = np.abs(s1 + s2) ** 2
    else:
        p = np.abs(s1) ** 2 + np.abs(s2) ** 2
    sig = np.diagonal(p).copy()
    intf = p.sum(axis=1) - sig
    pc = static_power(cfg)

    def neg_ee(t):
        rate = float(np.log2(1.0 + t * sig / (t * intf + cfg.sigma2)).sum())
        return -rate / (t * p0 + pc)

    vals = np.array([neg_ee(t) for t in cand])
    i = int(np.argmin(vals))
    lo = cand[max(i - 1, 0)]
    hi = cand[min(i + 1, cand.size - 1)]
    res = minimize_scalar(neg_ee, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    t, val = float(res.x), float(res.fun)
    if vals[i] < val:
        t, val = float(cand[i]), float(vals[i])
    if not val < neg_ee(1.0):
        return bp, p0, False
    s = np.sqrt(t)
    bp = BeamPair(V1=bp.V1 * s, V2=bp.V2 * s)
    return bp, bp.transmit_power(), True


_RESTART_TAG = 1381192786


def _restart_init(ch, cfg, r):
    """Random unit-modulus phases with matched-filter beams, deterministic per r."""
    rng = np.random.default_rng([cfg.rng_seed, _RESTART_TAG, r])
    ph = PhasePair(
        phi1=np.exp(2j * np.pi * rng.random(cfg.N)),
        phi2=np.exp(2j * np.pi * rng.random(cfg.N)),
    )
    return matched_filter_init(ch, cfg, ph), ph


def optimize(ch, cfg, alt=None, init=None):
    """Alternate the two stages and return the best iterate seen.

    The loop stops once the tracked objective (energy efficiency by default,
    plain sum rate when alt.objective == "rate") changes by less than alt.eps
    relatively, or when n_max outer iterations have run. Because the phase
    stage optimizes a surrogate, the raw iterate sequence need not be
    monotone in the tracked objective; the returned pair is the best recorded
    one, and the per-iteration trace keeps both views honest.

    With alt.restarts > 1 the loop reruns from additional random-phase
    matched-filter starts (streams keyed off cfg.rng_seed, so results stay
    deterministic) and the best iterate across starts wins. alt.init_scale
    shrinks every initial beamformer pair below the power budget; the default
    1.0 keeps the full-budget start. alt.init_watts instead pins the starting
    power in absolute terms and takes precedence; its float path never reads
    the budget, so sweeps over P_max start from bit-identical pairs. Under
    the ratio objective each cycle also rescales the pair to the
    efficiency-optimal transmit power (alt.power_scale overrides; see
    _ee_power_scale).
    """
    alt = alt if alt is not None else AlternatingConfig()
    watts = None if alt.init_watts is None else min(alt.init_watts, cfg.P_max)
    best_run = None
    for r in range(alt.restarts):
        if r == 0:
            bp0, ph0 = init if init is not None else default_init(ch, cfg)
        else:
            bp0, ph0 = _restart_init(ch, cfg, r)
        if watts is not None:
            if r == 0 and init is not None:
                total = bp0.transmit_power()
                if total > 0:
                    s = np.sqrt(watts / total)
                    bp0 = BeamPair(V1=bp0.V1 * s, V2=bp0.V2 * s)
            else:
                bp0 = matched_filter_init(ch, cfg, ph0, watts=watts)
        elif alt.init_scale != 1.0:
            s = np.sqrt(alt.init_scale)
            bp0 = BeamPair(V1=bp0.V1 * s, V2=bp0.V2 * s)
        obj, bp, ph, trace = _alternate(ch, cfg, alt, bp0, ph0)
        trace.restart = r
        if best_run is None or obj > best_run[0]:
            best_run = (obj, bp, ph, trace)
    return best_run[1], best_run[2], best_run[3]


def _alternate(ch, cfg, alt, bp, ph):
    trace = IterationTrace()
    best = (-np.inf, bp, ph)
    best_metrics = (-np.inf, -np.inf)
    prev_obj = None
    scale_power = alt.wants_power_scale()
    # under the ratio objective the first sweep already solves at the spend
    # of the start pair; growth beyond it comes from the scale step only
    budget = min(cfg.P_max, bp.transmit_power()) if scale_power else cfg.P_max
    if budget <= 0.0:
        budget = cfg.P_max
    for n in range(1, alt.n_max + 1):
        t0 = time.perf_counter()
        try:
            cfg_beam = replace(cfg, P_max=budget) if budget != cfg.P_max else cfg
            bp, state, beam_trace = beamforming_stage(
                ch, ph, bp, cfg_beam, tol=alt.beam_tol, max_sweeps=alt.beam_max_sweeps
            )
            if scale_power:
                bp, budget, scaled = _ee_power_scale(ch, ph, bp, cfg)
                if scaled:
                    state = consistent_state(ch, ph, bp, cfg, mu=state.mu)
            # the post-beam pair is an encountered iterate in its own right;
            # the phase step may trade objective for feasibility, so rank it
            mid_rate, mid_ee = _iterate_metrics(ch, ph, bp, cfg)
            mid_obj = mid_rate if alt.objective == "rate" else mid_ee
            if mid_obj > best[0]:
                best = (mid_obj, bp, ph)
                best_metrics = (mid_rate, mid_ee)
            phase_feasible = True
            phase_iters = 0
            if alt.run_phase_stage:
                ph, phase_trace = phase_stage(
                    ch,
                    bp,
                    state,
                    ph,
                    cfg,
                    eps=alt.phase_eps,
                    n_max=alt.phase_max_iters,
                    bisect_eps=alt.bisect_eps,
                )
                phase_feasible = not phase_trace.infeasible
                phase_iters = phase_trace.iterations
        except (NumericalError, ConvergenceError) as err:
            raise type(err)(f"outer iteration {n}: {err}") from err
        wall_ms = (time.perf_counter() - t0) * 1e3

        _, rates, sum_rate = sinr_and_rate(ch, ph, bp, cfg)
        ee = sum_rate / (bp.transmit_power() + static_power(cfg))
        obj = sum_rate if alt.objective == "rate" else ee
        if obj > best[0]:
            best = (obj, bp, ph)
            best_metrics = (sum_rate, ee)
        trace.records.append(
            OuterRecord(
                iteration=n,
                sum_rate=sum_rate,
                ee=ee,
                power=bp.transmit_power(),
                min_rate=float(rates.min()),
                qos_ok=bool(beam_trace.qos_ok[-1]) if beam_trace.qos_ok else False,
                phase_feasible=phase_feasible,
                beam_sweeps=beam_trace.sweeps,
                phase_iters=phase_iters,
                objective=obj,
                best_objective=best[0],
                best_sum_rate=best_metrics[0],
                best_ee=best_metrics[1],
                wall_ms=wall_ms,
            )
        )
        # signed test: a cycle that fails to improve the objective ends the
        # run, it does not get a second chance by moving the iterate far
        # enough downhill; best-iterate tracking covers what is reported
        if prev_obj is not None and (obj - prev_obj) <= alt.eps * max(1.0, abs(prev_obj)):
            trace.converged = True
            break
        prev_obj = obj
    else:
        trace.cap_hit = True
    return best[0], best[1], best[2], trace
