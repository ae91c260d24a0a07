"""Weighted-MMSE transmit beamforming under a total power budget.

For fixed reflection phases the rate problem is lifted to an equivalent
weighted mean-square-error problem with per-user scalar decoders u_k and
positive weights q_k. All three blocks have closed forms:

    u_k = sbar_kk / J_k,          J_k = sum_j |sbar_kj|^2 + sigma2
    q_k = 1 / e_k
    v_ik = (A_i + mu I)^-1 hbar_ik^H u_k q_k

where sbar_kj = hbar1k v1j + hbar2k v2j is the symbol gain of stream j at
user k and A_i = sum_k q_k |u_k|^2 hbar_ik^H hbar_ik. The power multiplier
mu is the unique root of the diagonalized budget equation and is found by
bisection on a bracket that provably contains it.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, NumericalError
from .model import BeamPair, effective_channels, sinr_and_rate
from .numerics import HPD_MIN_EIG, hermitian_eig, solve_hpd

# PSD inputs may carry rounding this far below zero before being rejected.
PSD_TOL = 1e-8
# Relative power residual targeted by the dual bisection.
POWER_RESIDUAL_TOL = 1e-8
# Bisection budget for the dual variable.
POWER_MAX_ITER = 200


@dataclass
class WmmseState:
    """Per-user decoders, weights and errors, plus the power multiplier."""

    u: np.ndarray
    q: np.ndarray
    e: np.ndarray
    mu: float = 0.0


@dataclass
class BeamTrace:
    """Per-sweep surrogate objective and feasibility flags."""

    objective: list = field(default_factory=list)
    qos_ok: list = field(default_factory=list)
    sweeps: int = 0
    converged: bool = False
    cap_hit: bool = False


def stream_gains(hbar1, hbar2, bp):
    """K x K matrix with entry (k, j) = hbar1k @ v1j + hbar2k @ v2j."""
    return hbar1 @ bp.V1 + hbar2 @ bp.V2


def mse(u_k, hbar1k, hbar2k, bp, k, sigma2):
    """Mean square error of user k under scalar decoder u_k.

    e_k = |u_k^* sbar_kk - 1|^2 + |u_k|^2 (sum_{j != k} |sbar_kj|^2 + sigma2)
    """
    s = hbar1k @ bp.V1 + hbar2k @ bp.V2
    desired = s[k]
    interference = float(np.sum(np.abs(s) ** 2) - np.abs(desired) ** 2)
    return float(
        np.abs(np.conj(u_k) * desired - 1.0) ** 2
        + np.abs(u_k) ** 2 * (interference + sigma2)
    )


def update_decoder(ch, ph, bp, cfg):
    """MMSE-optimal scalar decoders for all users."""
    hbar1, hbar2 = effective_channels(ch, ph)
    s = stream_gains(hbar1, hbar2, bp)
    j = np.sum(np.abs(s) ** 2, axis=1) + cfg.sigma2
    return np.diagonal(s) / j


def update_weight(e):
    """Optimal weights q_k = 1 / e_k; a nonpositive error means the decoder
    update is broken upstream and is rejected."""
    e = np.asarray(e, dtype=float)
    if np.any(e <= 0):
        raise NumericalError(f"nonpositive mse encountered (min {e.min():.3e})")
    return 1.0 / e


def _eigenbasis_weights(a, rhs, name):
    """Eigen-decompose a PSD matrix and project rhs onto its eigenbasis.

    Returns (eigenvalues clipped at zero, eigenvector matrix, per-direction
    squared magnitudes of the projected right-hand sides).
    """
    eig = hermitian_eig(a)
    lam = eig.eigenvalues
    if lam[0] < -PSD_TOL:
        raise NumericalError(
            f"{name} is not positive semidefinite (min eigenvalue {lam[0]:.3e})",
            min_eigenvalue=float(lam[0]),
        )
    lam = np.maximum(lam, 0.0)
    proj = eig.eigenvectors.conj().T @ rhs
    weights = np.sum(np.abs(proj) ** 2, axis=1)
    return lam, eig.eigenvectors, weights


def _budget_power(mu, lam1, w1, lam2, w2):
    """Radiated power of the dual solution at multiplier mu.

    Directions with zero projected weight contribute nothing even on a zero
    eigenvalue (the minimum-norm convention); a nonzero weight on a zero
    denominator means unbounded power.
    """
    total = 0.0
    for lam, w in ((lam1, w1), (lam2, w2)):
        den = (lam + mu) ** 2
        active = w > 0.0
        if np.any(active & (den == 0.0)):
            return math.inf
        total += float(np.sum(w[active] / den[active])) if np.any(active) else 0.0
    return total


def solve_power_dual(a1, a2, rhs1, rhs2, p_max):
    """Find the power multiplier mu >= 0 for the budget constraint.

    The beamformers (A_i + mu I)^-1 rhs_i spend
    f(mu) = sum_m w1_m / (lam1_m + mu)^2 + sum_m w2_m / (lam2_m + mu)^2
    in the eigenbases of A1 and A2; f is strictly decreasing, so mu = 0 is
    returned when the unconstrained solution is already within budget and the
    root is bisected on [0, sqrt((sum w1 + sum w2) / p_max)] otherwise.
    """
    if p_max <= 0:
        raise ValueError(f"p_max must be positive, got {p_max}")
    lam1, _, w1 = _eigenbasis_weights(a1, np.atleast_2d(rhs1.T).T, "a1")
    lam2, _, w2 = _eigenbasis_weights(a2, np.atleast_2d(rhs2.T).T, "a2")

    if _budget_power(0.0, lam1, w1, lam2, w2) <= p_max:
        return 0.0

    total = float(w1.sum() + w2.sum())
    hi = math.sqrt(total / p_max)
    lo = 0.0
    # f(hi) <= p_max because every (lam + mu)^2 >= mu^2; keep hi feasible so
    # the returned multiplier never overspends the budget.
    for _ in range(POWER_MAX_ITER):
        if p_max - _budget_power(hi, lam1, w1, lam2, w2) <= POWER_RESIDUAL_TOL * p_max:
            return hi
        mid = 0.5 * (lo + hi)
        if _budget_power(mid, lam1, w1, lam2, w2) > p_max:
            lo = mid
        else:
            hi = mid
    raise ConvergenceError(
        f"power bisection did not reach residual {POWER_RESIDUAL_TOL:.1e} * p_max "
        f"in {POWER_MAX_ITER} iterations"
    )


def _shifted_solve(a, mu, rhs):
    """Solve (a + mu I) x = rhs for PSD a, falling back to the eigenbasis.

    The fallback covers the slack-budget corner where a is singular but every
    right-hand side lies in its range: the minimum-norm solution is the one
    whose power the dual bisection measured.
    """
    try:
        return solve_hpd(a + mu * np.eye(a.shape[0]), rhs)
    except NumericalError:
        eig = hermitian_eig(a)
        lam = np.maximum(eig.eigenvalues, 0.0) + mu
        proj = eig.eigenvectors.conj().T @ rhs
        scale = np.where(lam > HPD_MIN_EIG, lam, 1.0)
        proj = np.where(lam[:, None] > HPD_MIN_EIG, proj / scale[:, None], 0.0)
        return eig.eigenvectors @ proj


def _rate_polish(ch, ph, bp, cfg):
    """Best per-surface complex rescaling of the pair by achieved sum rate.

    The sweep updates descend a surrogate whose per-surface solves ignore the
    cross-surface coupling, so the converged pair can split power badly
    between the two surfaces. With directions frozen, the achieved rate
    depends only on a split fraction and a relative phase on the budget
    sphere; a common upscale never lowers the rate, so the search stays on
    the boundary. Zoomed grids refine the two parameters; the rescaled pair
    is kept only when it strictly improves the rate.
    """
    p1 = float(np.sum(np.abs(bp.V1) ** 2))
    p2 = float(np.sum(np.abs(bp.V2) ** 2))
    if p1 <= 0.0 or p2 <= 0.0:
        return bp, False
    hbar1, hbar2 = effective_channels(ch, ph)
    s1 = hbar1 @ bp.V1
    s2 = hbar2 @ bp.V2

    def sum_rate(alpha, psi):
        a1 = np.sqrt(cfg.P_max * alpha / p1)
        a2 = np.sqrt(cfg.P_max * (1.0 - alpha) / p2) * np.exp(1j * psi)
        shape = np.broadcast(a1, a2).shape
        t1 = a1[..., None, None] * s1
        t2 = np.asarray(a2)[..., None, None] * s2
        p = np.abs(t1 + t2) ** 2 if cfg.coherent else np.abs(t1) ** 2 + np.abs(t2) ** 2
        sig = np.diagonal(p, axis1=-2, axis2=-1)
        intf = p.sum(axis=-1) - sig
        rate = np.log2(1.0 + sig / (intf + cfg.sigma2)).sum(axis=-1)
        return rate.reshape(shape)

    cur = float(np.sum(sinr_and_rate(ch, ph, bp, cfg)[1]))
    split = p1 / (p1 + p2)
    base = float(sum_rate(np.array([split]), np.array([0.0]))[0])
    # the relative phase only matters when the paths combine coherently
    n_psi = 32 if cfg.coherent else 1
    alpha = np.linspace(0.0, 1.0, 33)
    psi = np.linspace(0.0, 2.0 * np.pi, n_psi, endpoint=False)
    a_span = alpha[1] - alpha[0]
    p_span = 2.0 * np.pi / n_psi if cfg.coherent else 0.0
    best, a0, p0 = base, split, 0.0
    for _ in range(4):
        grid = sum_rate(alpha[:, None], psi[None, :])
        i, j = np.unravel_index(int(np.argmax(grid)), grid.shape)
        if float(grid[i, j]) > best:
            best, a0, p0 = float(grid[i, j]), float(alpha[i]), float(psi[j])
        alpha = np.clip(np.linspace(a0 - a_span, a0 + a_span, 17), 0.0, 1.0)
        psi = np.linspace(p0 - p_span, p0 + p_span, n_psi)
        a_span /= 8.0
        p_span /= 8.0
    if not best > cur:
        return bp, False
    a1 = np.sqrt(cfg.P_max * a0 / p1)
    a2 = np.sqrt(cfg.P_max * (1.0 - a0) / p2) * np.exp(1j * p0)
    return BeamPair(V1=bp.V1 * a1, V2=bp.V2 * a2), True


def update_beamformers(ch, ph, state, cfg):
    """Closed-form beamformers for fixed decoders and weights.

    Sets state.mu to the multiplier actually used so the caller can inspect
    whether the budget was binding.
    """
    hbar1, hbar2 = effective_channels(ch, ph)
    w = state.q * np.abs(state.u) ** 2
    a1 = (hbar1.conj().T * w) @ hbar1
    a2 = (hbar2.conj().T * w) @ hbar2
    # restore exact symmetry lost to non-associative float products; the
    # eigensolver's Hermitian gate is absolute and these grow with power
    a1 = 0.5 * (a1 + a1.conj().T)
    a2 = 0.5 * (a2 + a2.conj().T)
    coef = state.u * state.q
    rhs1 = hbar1.conj().T * coef[None, :]
    rhs2 = hbar2.conj().T * coef[None, :]
    mu = solve_power_dual(a1, a2, rhs1, rhs2, cfg.P_max)
    v1 = _shifted_solve(a1, mu, rhs1)
    v2 = _shifted_solve(a2, mu, rhs2)
    state.mu = mu
    return BeamPair(V1=v1, V2=v2)


def surrogate_objective(state, errors):
    """Weighted-MMSE surrogate sum_k (ln q_k - q_k e_k) at the given errors."""
    return float(np.sum(np.log(state.q) - state.q * errors))


def beamforming_stage(ch, ph, bp_init, cfg, tol=1e-4, max_sweeps=100):
    """Alternate decoder, weight and beamformer updates to convergence.

    Stops when the surrogate objective changes by less than tol relatively,
    or after max_sweeps full sweeps (recorded in the trace). Per-user floors
    ln q_k - q_k e_k >= R are verified after each sweep and reported, never
    enforced. The converged pair then gets one rate polish over per-surface
    rescalings (see _rate_polish), which repairs the power split the
    decoupled beamformer solves cannot see.
    """
    hbar1, hbar2 = effective_channels(ch, ph)
    bp = bp_init
    state = WmmseState(
        u=np.zeros(cfg.K, dtype=np.complex128),
        q=np.ones(cfg.K),
        e=np.ones(cfg.K),
    )
    trace = BeamTrace()
    prev = None
    for sweep in range(1, max_sweeps + 1):
        u = update_decoder(ch, ph, bp, cfg)
        e = np.array([mse(u[k], hbar1[k], hbar2[k], bp, k, cfg.sigma2) for k in range(cfg.K)])
        q = update_weight(e)
        state = WmmseState(u=u, q=q, e=e, mu=state.mu)
        bp = update_beamformers(ch, ph, state, cfg)
        e_after = np.array(
            [mse(u[k], hbar1[k], hbar2[k], bp, k, cfg.sigma2) for k in range(cfg.K)]
        )
        obj = surrogate_objective(state, e_after)
        trace.objective.append(obj)
        trace.qos_ok.append(bool(np.all(np.log(q) - q * e_after >= cfg.R)))
        trace.sweeps = sweep
        if prev is not None and abs(obj - prev) <= tol * max(1.0, abs(prev)):
            trace.converged = True
            break
        prev = obj
    else:
        trace.cap_hit = True
    bp, _ = _rate_polish(ch, ph, bp, cfg)
    # hand back decoder and weights consistent with the final beamformers,
    # not the pre-update snapshot: downstream quadratics built from a stale
    # pair sit exactly at their own stationary point and never move
    return bp, consistent_state(ch, ph, bp, cfg, mu=state.mu), trace


def consistent_state(ch, ph, bp, cfg, mu=0.0):
    """Decoder, error and weight evaluated at the given beamformer pair."""
    hbar1, hbar2 = effective_channels(ch, ph)
    u = update_decoder(ch, ph, bp, cfg)
    e = np.array([mse(u[k], hbar1[k], hbar2[k], bp, k, cfg.sigma2) for k in range(cfg.K)])
    return WmmseState(u=u, q=update_weight(e), e=e, mu=mu)
