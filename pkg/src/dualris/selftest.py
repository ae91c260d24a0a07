"""Quick invariant checks wired to the `dualris selftest` subcommand.

Each check is small enough to run in well under a second; together they
cover the numerics kernel, the rate identity, the power dual, the phase
majorizer and an end-to-end optimizer run.
"""

import numpy as np

from . import beamformer, bench, model, numerics, phaseopt
from .optimizer import AlternatingConfig, default_init, optimize


def _random_psd(rng, n):
    a = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    return a @ a.conj().T


def _check_eig(rng):
    a = _random_psd(rng, 8)
    eig = numerics.hermitian_eig(a)
    recon = eig.eigenvectors @ np.diag(eig.eigenvalues) @ eig.eigenvectors.conj().T
    rel = np.linalg.norm(recon - 0.5 * (a + a.conj().T)) / np.linalg.norm(a)
    assert rel < numerics.EIG_RECONSTRUCTION_TOL, f"reconstruction residual {rel:.3e}"
    gram = eig.eigenvectors.conj().T @ eig.eigenvectors
    dev = np.max(np.abs(gram - np.eye(8)))
    assert dev < numerics.UNITARITY_TOL, f"unitarity deviation {dev:.3e}"


def _check_quadratic_form(rng):
    n = 8
    a = _random_psd(rng, n)
    b = _random_psd(rng, n)
    phi = np.exp(1j * rng.uniform(0, 2 * np.pi, n))
    big_phi = np.diag(phi)
    direct = complex(np.trace(big_phi.conj().T @ a @ big_phi @ b))
    psi = numerics.hadamard(a, b.T)
    quad = complex(np.vdot(phi, psi @ phi))
    assert abs(direct - quad) < 1e-9 * max(1.0, abs(direct)), f"gap {abs(direct - quad):.3e}"


def _check_draw_determinism(rng):
    cfg = bench.desk_config(rng_seed=11)
    ch1 = model.draw_channels(cfg, 3)
    ch2 = model.draw_channels(cfg, 3)
    assert np.array_equal(ch1.H1, ch2.H1) and np.array_equal(ch1.G2, ch2.G2), (
        "channel draws are not reproducible"
    )


def _check_rate_identity(rng):
    cfg = bench.desk_config(rng_seed=17)
    ch = model.draw_channels(cfg)
    bp, ph = default_init(ch, cfg)
    u = beamformer.update_decoder(ch, ph, bp, cfg)
    hbar1, hbar2 = model.effective_channels(ch, ph)
    e = np.array(
        [beamformer.mse(u[k], hbar1[k], hbar2[k], bp, k, cfg.sigma2) for k in range(cfg.K)]
    )
    q = beamformer.update_weight(e)
    _, rates, _ = model.sinr_and_rate(ch, ph, bp, cfg)
    gap = np.max(np.abs(np.log(q) / np.log(2.0) - rates))
    assert gap < 1e-8, f"rate identity gap {gap:.3e}"


def _check_power_dual(rng):
    cfg = bench.desk_config(rng_seed=23)
    ch = model.draw_channels(cfg)
    bp, ph = default_init(ch, cfg)
    bp2, state, _ = beamformer.beamforming_stage(ch, ph, bp, cfg, max_sweeps=5)
    power = bp2.transmit_power()
    assert power <= cfg.P_max * (1 + 1e-6), f"power {power:.6g} exceeds budget {cfg.P_max:.6g}"
    if state.mu > 0:
        assert abs(power - cfg.P_max) <= 1e-6 * cfg.P_max, (
            f"binding budget missed: {power:.9g} vs {cfg.P_max:.9g}"
        )


def _check_majorizer(rng):
    n = 8
    psi = _random_psd(rng, n)
    psi /= np.linalg.norm(psi, 2)
    c = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
    phi_n = np.exp(1j * rng.uniform(0, 2 * np.pi, n))
    touch = phaseopt.mm_surrogate(psi, c, phi_n, phi_n) - phaseopt.surface_objective(
        psi, c, phi_n
    )
    assert abs(touch) < 1e-8, f"majorizer does not touch: {touch:.3e}"
    for _ in range(20):
        phi = np.exp(1j * rng.uniform(0, 2 * np.pi, n))
        gap = phaseopt.mm_surrogate(psi, c, phi, phi_n) - phaseopt.surface_objective(
            psi, c, phi
        )
        assert gap >= -1e-8, f"majorizer dips below objective by {gap:.3e}"


def _check_optimize(rng):
    cfg = bench.desk_config(rng_seed=29)
    ch = model.draw_channels(cfg)
    alt = AlternatingConfig(n_max=5, objective="rate")
    bp, ph, trace = optimize(ch, cfg, alt)
    assert np.max(np.abs(np.abs(ph.phi1) - 1)) < 1e-10, "phases left the unit circle"
    assert bp.transmit_power() <= cfg.P_max * (1 + 1e-6), "power budget violated"
    best = [r.best_objective for r in trace.records]
    assert all(b2 >= b1 for b1, b2 in zip(best, best[1:])), "best-iterate curve decreased"


CHECKS = (
    ("hermitian-eig", _check_eig),
    ("quadratic-form", _check_quadratic_form),
    ("draw-determinism", _check_draw_determinism),
    ("rate-identity", _check_rate_identity),
    ("power-dual", _check_power_dual),
    ("majorizer", _check_majorizer),
    ("optimize", _check_optimize),
)


def run_selftest(out=print):
    """Run every check; returns 0 when all pass, 1 otherwise."""
    rng = np.random.default_rng(2024)
    failures = 0
    for name, check in CHECKS:
        try:
            check(rng)
        except AssertionError as err:
            out(f"FAIL - {name}: {err}")
            failures += 1
        else:
            out(f"ok - {name}")
    return 0 if failures == 0 else 1
