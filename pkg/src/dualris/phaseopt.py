"""Reflection-phase optimization for fixed beamformers, decoders and weights.

With everything else frozen, the weighted-MMSE surrogate reduces to a pair of
quadratics in the phase vectors. Writing Phi = diag(phi),

    tr(Phi^H A Phi B) = phi^H (A (.) B^T) phi        (elementwise product)
    tr(Phi C)         = sum_n phi_n C_nn

so the stage minimizes

    f(phi1, phi2) = phi1^H Psi1 phi1 + phi2^H Psi2 phi2
                    - 2 Re[phi1^H c1^*] - 2 Re[phi2^H c2^*]

subject to per-user floors and unit-modulus entries. Each iteration majorizes
f by the linear surrogate built from t^n = c^* + (lam_max I - Psi) phi^n,
linearizes the most violated floor at phi^n, and solves the one-multiplier
subproblem in closed form: phi = exp(j angle(t + x d)) with x found by
bisection on the floor surplus Y(x).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, InfeasibleError
from .model import PhasePair
from .numerics import hermitian_eig

# Doubling budget while bracketing the floor multiplier.
BRACKET_MAX_DOUBLINGS = 60
# Hard cap on bisection steps once a bracket exists.
BISECT_MAX_ITER = 200


@dataclass(frozen=True)
class PhaseQuadratics:
    """Aggregate and per-user quadratic data for both surfaces.

    psi1, psi2 are N x N PSD aggregates; psi1_user, psi2_user stack the
    per-user pieces (K x N x N); c1, c2 and their per-user rows collect the
    linear terms.
    """

    psi1: np.ndarray
    psi2: np.ndarray
    psi1_user: np.ndarray
    psi2_user: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    c1_user: np.ndarray
    c2_user: np.ndarray


@dataclass
class PhaseTrace:
    """Per-iteration objective, worst floor surplus and multiplier."""

    objective: list = field(default_factory=list)
    min_surplus: list = field(default_factory=list)
    multiplier: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    cap_hit: bool = False
    infeasible: bool = False


def build_quadratics(ch, bp, state):
    """Assemble the quadratic forms from channels, beamformers and weights.

    Per user k and surface i:
        A_ik   = q_k |u_k|^2 g_ik^H g_ik
        B_i    = H_i (V_i V_i^H) H_i^H
        Psi_ik = A_ik (.) B_i^T
        c_ik   = (H_i v_ik) (.) g_ik * q_k u_k^*
    Aggregates are sums over users.
    """
    if ch.G1.shape[0] != state.u.size:
        raise DimensionError(
            f"state has {state.u.size} users but channels have {ch.G1.shape[0]}"
        )
    w = state.q * np.abs(state.u) ** 2
    coef = state.q * np.conj(state.u)

    b1 = ch.H1 @ (bp.V1 @ bp.V1.conj().T) @ ch.H1.conj().T
    b2 = ch.H2 @ (bp.V2 @ bp.V2.conj().T) @ ch.H2.conj().T

    outer1 = ch.G1.conj()[:, :, None] * ch.G1[:, None, :]
    outer2 = ch.G2.conj()[:, :, None] * ch.G2[:, None, :]
    psi1_user = w[:, None, None] * outer1 * b1.T[None, :, :]
    psi2_user = w[:, None, None] * outer2 * b2.T[None, :, :]
    # float products drift off Hermitian by ~eps*scale, which the absolute
    # gate in the eigensolver rejects at high transmit power; the exact
    # matrices are Hermitian, so strip the noise before anything sees it
    psi1_user = 0.5 * (psi1_user + psi1_user.conj().transpose(0, 2, 1))
    psi2_user = 0.5 * (psi2_user + psi2_user.conj().transpose(0, 2, 1))

    c1_user = (ch.H1 @ bp.V1).T * ch.G1 * coef[:, None]
    c2_user = (ch.H2 @ bp.V2).T * ch.G2 * coef[:, None]

    return PhaseQuadratics(
        psi1=psi1_user.sum(axis=0),
        psi2=psi2_user.sum(axis=0),
        psi1_user=psi1_user,
        psi2_user=psi2_user,
        c1=c1_user.sum(axis=0),
        c2=c2_user.sum(axis=0),
        c1_user=c1_user,
        c2_user=c2_user,
    )


def surface_objective(psi, c, phi):
    """Single-surface piece phi^H Psi phi - 2 Re[phi^H c^*]."""
    quad = float(np.real(np.vdot(phi, psi @ phi)))
    lin = 2.0 * float(np.real(np.sum(c * phi)))
    return quad - lin


def quadratic_objective(pq, ph):
    """Stage objective f over both surfaces."""
    return surface_objective(pq.psi1, pq.c1, ph.phi1) + surface_objective(
        pq.psi2, pq.c2, ph.phi2
    )


def constraint_surplus(pq, ph):
    """Per-user floor value 2 Re[phi^H c_k^*] - phi^H Psi_k phi over surfaces."""
    lin = 2.0 * np.real(pq.c1_user @ ph.phi1) + 2.0 * np.real(pq.c2_user @ ph.phi2)
    quad1 = np.real(np.einsum("i,kij,j->k", ph.phi1.conj(), pq.psi1_user, ph.phi1))
    quad2 = np.real(np.einsum("i,kij,j->k", ph.phi2.conj(), pq.psi2_user, ph.phi2))
    return lin - quad1 - quad2


def most_violated_user(pq, ph):
    """Index of the user with the smallest floor surplus."""
    return int(np.argmin(constraint_surplus(pq, ph)))


def sca_threshold(pq, ph_n, r_floor, user):
    """Linearize the selected user's floor around the expansion point.

    Returns (r_hat, d1, d2) with d_i = c_ik^* - Psi_ik phi_i^n and
    r_hat = R - phi1^nH Psi_1k phi1^n - phi2^nH Psi_2k phi2^n, so the
    linearized floor reads 2 Re[phi1^H d1] + 2 Re[phi2^H d2] >= r_hat.
    """
    psi1k = pq.psi1_user[user]
    psi2k = pq.psi2_user[user]
    d1 = np.conj(pq.c1_user[user]) - psi1k @ ph_n.phi1
    d2 = np.conj(pq.c2_user[user]) - psi2k @ ph_n.phi2
    r_hat = (
        r_floor
        - float(np.real(np.vdot(ph_n.phi1, psi1k @ ph_n.phi1)))
        - float(np.real(np.vdot(ph_n.phi2, psi2k @ ph_n.phi2)))
    )
    return r_hat, d1, d2


def mm_linearize(pq, phi_n, surface):
    """Majorize one surface's quadratic at phi_n.

    Returns (t_n, lam_max) with t_n = c^* + (lam_max I - Psi) phi_n; on the
    unit-modulus set the surrogate is lam_max N - 2 Re[phi^H t_n] + const.
    """
    if surface == 1:
        psi, c = pq.psi1, pq.c1
    elif surface == 2:
        psi, c = pq.psi2, pq.c2
    else:
        raise ValueError(f"surface must be 1 or 2, got {surface}")
    lam_max = max(float(hermitian_eig(psi).eigenvalues[-1]), 0.0)
    t_n = np.conj(c) + (lam_max * phi_n - psi @ phi_n)
    return t_n, lam_max


def mm_surrogate(psi, c, phi, phi_n):
    """Majorizer value at phi for the expansion point phi_n, constant included.

    g(phi | phi_n) = lam_max N - 2 Re[phi^H t_n] + phi_n^H (lam_max I - Psi) phi_n
    touches surface_objective at phi_n and dominates it on the unit-modulus set.
    """
    lam_max = max(float(hermitian_eig(psi).eigenvalues[-1]), 0.0)
    t_n = np.conj(c) + (lam_max * phi_n - psi @ phi_n)
    const = float(np.real(np.vdot(phi_n, lam_max * phi_n - psi @ phi_n)))
    return lam_max * phi.size - 2.0 * float(np.real(np.vdot(phi, t_n))) + const


def phase_closed_form(t1, t2, d1, d2, x):
    """Optimal phases for multiplier x: phi = exp(j angle(t + x d)).

    A zero argument leaves the corresponding entry at 1 (angle convention).
    """
    if x < 0:
        raise ValueError(f"multiplier must be nonnegative, got {x}")
    pieces = []
    for t, d in ((t1, d1), (t2, d2)):
        w = t + x * d
        phi = np.where(w == 0, 1.0 + 0.0j, np.exp(1j * np.angle(w)))
        pieces.append(phi)
    return PhasePair(phi1=pieces[0], phi2=pieces[1])


def _floor_value(ph, d1, d2):
    return 2.0 * float(np.real(np.vdot(ph.phi1, d1))) + 2.0 * float(
        np.real(np.vdot(ph.phi2, d2))
    )


def multiplier_bisection(t1, t2, d1, d2, r_hat, eps=1e-9):
    """Smallest multiplier whose aligned phases satisfy the linearized floor.

    Y(x) = 2 Re[phi1(x)^H d1] + 2 Re[phi2(x)^H d2] is non-decreasing in x;
    complementary slackness returns x = 0 whenever Y(0) already clears r_hat,
    otherwise the bracket is grown by doubling and bisected down to width eps.
    The returned endpoint is always on the feasible side.
    """
    ph0 = phase_closed_form(t1, t2, d1, d2, 0.0)
    if _floor_value(ph0, d1, d2) >= r_hat:
        return 0.0, ph0

    x_hi = 1.0
    for _ in range(BRACKET_MAX_DOUBLINGS):
        ph_hi = phase_closed_form(t1, t2, d1, d2, x_hi)
        if _floor_value(ph_hi, d1, d2) >= r_hat:
            break
        x_hi *= 2.0
    else:
        raise InfeasibleError(
            f"floor {r_hat:.6g} stays out of reach after "
            f"{BRACKET_MAX_DOUBLINGS} bracket doublings"
        )

    x_lo = 0.0 if x_hi == 1.0 else x_hi / 2.0
    for _ in range(BISECT_MAX_ITER):
        if x_hi - x_lo <= eps:
            break
        mid = 0.5 * (x_lo + x_hi)
        ph_mid = phase_closed_form(t1, t2, d1, d2, mid)
        if _floor_value(ph_mid, d1, d2) >= r_hat:
            x_hi = mid
        else:
            x_lo = mid
    return x_hi, phase_closed_form(t1, t2, d1, d2, x_hi)


def phase_stage(ch, bp, state, ph_init, cfg, eps=1e-5, n_max=50, bisect_eps=1e-9):
    """Iterate majorize-then-align steps until the objective stalls.

    Each iteration linearizes the most violated floor at the current point,
    rebuilds the majorizer, and accepts the aligned phases. The trace records
    the objective, worst exact floor surplus and multiplier per iteration so
    descent and feasibility are checkable piecewise. If the linearized floor
    is unreachable the best exactly feasible iterate seen so far is returned
    with the infeasible flag set.
    """
    pq = build_quadratics(ch, bp, state)
    ph = ph_init
    f_prev = quadratic_objective(pq, ph)
    trace = PhaseTrace()

    def floor_ok(p):
        return bool(np.all(constraint_surplus(pq, p) >= cfg.R - 1e-9))

    best_feasible = (f_prev, ph) if floor_ok(ph) else None

    for iteration in range(1, n_max + 1):
        user = most_violated_user(pq, ph)
        r_hat, d1, d2 = sca_threshold(pq, ph, cfg.R, user)
        t1, _ = mm_linearize(pq, ph.phi1, 1)
        t2, _ = mm_linearize(pq, ph.phi2, 2)
        try:
            x, ph_new = multiplier_bisection(t1, t2, d1, d2, r_hat, eps=bisect_eps)
        except InfeasibleError:
            trace.infeasible = True
            trace.iterations = iteration
            if best_feasible is not None:
                return best_feasible[1], trace
            return ph, trace

        f_new = quadratic_objective(pq, ph_new)
        trace.objective.append(f_new)
        trace.min_surplus.append(float(constraint_surplus(pq, ph_new).min()))
        trace.multiplier.append(x)
        trace.iterations = iteration
        if floor_ok(ph_new) and (best_feasible is None or f_new < best_feasible[0]):
            best_feasible = (f_new, ph_new)
        ph = ph_new
        if abs(f_new - f_prev) <= eps * max(1.0, abs(f_prev)):
            trace.converged = True
            break
        f_prev = f_new
    else:
        trace.cap_hit = True
    return ph, trace
