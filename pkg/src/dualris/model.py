"""System model for a two-surface reflected downlink.

An M-antenna transmitter serves K single-antenna users. There is no direct
path; every signal bounces off one of two reconfigurable surfaces with N
elements each. Surface i applies a diagonal unit-modulus reflection
diag(phi_i), so the effective row channel of user k through surface i is

    hbar_ik = g_ik @ diag(phi_i) @ H_i          (1 x M)

with H_i the transmitter-to-surface block (N x M) and g_ik the
surface-to-user row (1 x N). All small-scale fading is i.i.d. CN(0, 1);
large-scale effects are absorbed into the transmit budget, which follows the
convention P_linear = 10**(P_dB / 10) against a unit noise reference.
"""

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError

# Largest deviation of |phi_n| from 1 accepted for a reflection coefficient.
UNIT_MODULUS_TOL = 1e-12


def power_from_db(p_db):
    """Linear power for a dB value under the unit-noise convention."""
    return float(10.0 ** (p_db / 10.0))


@dataclass(frozen=True)
class SystemConfig:
    """Static description of one system instance.

    Defaults match the large evaluation setup used for the headline figures;
    the benchmark module carries a scaled-down preset for quick runs.
    """

    M: int = 8            # transmit antennas
    K: int = 8            # single-antenna users
    N: int = 16           # elements per surface
    P_max: float = power_from_db(60.0)   # transmit power budget, linear
    sigma2: float = 1.0   # receiver noise variance
    R: float = 6.6        # per-user rate-surrogate floor (natural-log units)
    beta: float = 1.2     # amplifier inefficiency multiplying transmit power
    P_U: float = 0.1      # per-user terminal power draw
    P_B: float = 1.0      # transmitter baseline power draw
    P_n_b: float = 0.01   # per-element surface control power draw
    rng_seed: int = 0
    coherent: bool = True        # combine the two reflected paths coherently
    count_both_ris: bool = True  # count both surfaces in the static power

    def __post_init__(self):
        if self.M < 1 or self.K < 1 or self.N < 1:
            raise ValueError(f"M, K, N must be positive, got {self.M}, {self.K}, {self.N}")
        if self.P_max <= 0:
            raise ValueError(f"P_max must be positive, got {self.P_max}")
        if self.sigma2 <= 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")
        if self.R < 0:
            raise ValueError(f"R must be nonnegative, got {self.R}")
        if self.beta < 1:
            raise ValueError(f"beta must be at least 1, got {self.beta}")
        if self.P_U < 0 or self.P_B < 0 or self.P_n_b < 0:
            raise ValueError("static power terms must be nonnegative")
        if self.rng_seed < 0:
            raise ValueError(f"rng_seed must be nonnegative, got {self.rng_seed}")


@dataclass(frozen=True)
class ChannelSet:
    """One fading realization: H1, H2 are N x M; G1, G2 are K x N."""

    H1: np.ndarray
    H2: np.ndarray
    G1: np.ndarray
    G2: np.ndarray

    def __post_init__(self):
        if self.H1.ndim != 2 or self.G1.ndim != 2:
            raise DimensionError("channel blocks must be 2-D")
        if self.H1.shape != self.H2.shape or self.G1.shape != self.G2.shape:
            raise DimensionError("the two surfaces must have equally shaped blocks")
        if self.H1.shape[0] != self.G1.shape[1]:
            raise DimensionError(
                f"element-count mismatch: H has {self.H1.shape[0]} rows, "
                f"G has {self.G1.shape[1]} columns"
            )


@dataclass(frozen=True)
class PhasePair:
    """Reflection coefficients of both surfaces, each entry on the unit circle."""

    phi1: np.ndarray
    phi2: np.ndarray

    def __post_init__(self):
        for name, phi in (("phi1", self.phi1), ("phi2", self.phi2)):
            if phi.ndim != 1:
                raise DimensionError(f"{name} must be 1-D")
            if phi.shape != self.phi1.shape:
                raise DimensionError("phi1 and phi2 must have equal length")
            worst = float(np.max(np.abs(np.abs(phi) - 1.0))) if phi.size else 0.0
            if worst > UNIT_MODULUS_TOL:
                raise ValueError(f"{name} is off the unit circle by {worst:.3e}")


@dataclass(frozen=True)
class BeamPair:
    """Per-surface transmit beamformers, columns indexed by user (M x K each)."""

    V1: np.ndarray
    V2: np.ndarray

    def __post_init__(self):
        if self.V1.ndim != 2 or self.V2.ndim != 2:
            raise DimensionError("beamformer blocks must be 2-D")
        if self.V1.shape != self.V2.shape:
            raise DimensionError("V1 and V2 must have equal shape")
        if not (np.all(np.isfinite(self.V1)) and np.all(np.isfinite(self.V2))):
            raise ValueError("beamformers contain non-finite entries")

    def transmit_power(self):
        """Total radiated power ||V1||_F^2 + ||V2||_F^2."""
        return float(np.sum(np.abs(self.V1) ** 2) + np.sum(np.abs(self.V2) ** 2))


def draw_channels(cfg, draw_index=0):
    """Draw one i.i.d. CN(0, 1) channel realization.

    The stream is keyed by (cfg.rng_seed, draw_index) so any realization can
    be regenerated bit-exactly without storing it. Blocks are filled in the
    fixed order H1, H2, G1, G2, real parts before imaginary parts.
    """
    if draw_index < 0:
        raise ValueError(f"draw_index must be nonnegative, got {draw_index}")
    rng = np.random.default_rng([cfg.rng_seed, int(draw_index)])

    def block(rows, cols):
        re = rng.standard_normal((rows, cols))
        im = rng.standard_normal((rows, cols))
        return (re + 1j * im) / np.sqrt(2.0)

    return ChannelSet(
        H1=block(cfg.N, cfg.M),
        H2=block(cfg.N, cfg.M),
        G1=block(cfg.K, cfg.N),
        G2=block(cfg.K, cfg.N),
    )


def effective_channels(ch, ph):
    """Per-user effective rows through both surfaces.

    Returns (hbar1, hbar2), each K x M with row k equal to
    g_ik @ diag(phi_i) @ H_i.
    """
    if ph.phi1.size != ch.H1.shape[0]:
        raise DimensionError(
            f"phase vector length {ph.phi1.size} does not match "
            f"element count {ch.H1.shape[0]}"
        )
    hbar1 = (ch.G1 * ph.phi1[None, :]) @ ch.H1
    hbar2 = (ch.G2 * ph.phi2[None, :]) @ ch.H2
    return hbar1, hbar2


def sinr_and_rate(ch, ph, bp, cfg):
    """Per-user SINR and achievable rate, plus the sum rate.

    With coherent combining the useful power of user k is
    |hbar1k v1k + hbar2k v2k|^2 and stream j interferes with
    |hbar1k v1j + hbar2k v2j|^2. The incoherent variant adds the two surface
    contributions as powers instead, per stream.
    """
    hbar1, hbar2 = effective_channels(ch, ph)
    s1 = hbar1 @ bp.V1
    s2 = hbar2 @ bp.V2
    if cfg.coherent:
        p = np.abs(s1 + s2) ** 2
    else:
        p = np.abs(s1) ** 2 + np.abs(s2) ** 2
    signal = np.diagonal(p).copy()
    interference = p.sum(axis=1) - signal
    sinr = signal / (interference + cfg.sigma2)
    rates = np.log2(1.0 + sinr)
    return sinr, rates, float(rates.sum())


def static_power(cfg):
    """Power drawn independently of the beamformers."""
    surfaces = 2 if cfg.count_both_ris else 1
    return float(cfg.K * cfg.P_U + cfg.P_B + surfaces * cfg.N * cfg.P_n_b)


def total_power(bp, cfg):
    """Total consumed power: amplifier-scaled transmit power plus static draw."""
    return float(cfg.beta * bp.transmit_power() + static_power(cfg))


def ee_objective(ch, ph, bp, cfg):
    """Energy-efficiency ratio: sum rate over (transmit power + static draw)."""
    _, _, rate = sinr_and_rate(ch, ph, bp, cfg)
    return rate / (bp.transmit_power() + static_power(cfg))


def _parse_scalar(kind, text, where):
    if kind is bool:
        lowered = text.lower()
        if lowered in ("true", "yes", "1", "on"):
            return True
        if lowered in ("false", "no", "0", "off"):
            return False
        raise ValueError(f"{where}: cannot parse boolean from '{text}'")
    try:
        return kind(text)
    except ValueError as err:
        raise ValueError(f"{where}: cannot parse {kind.__name__} from '{text}'") from err


def load_config(path):
    """Read a SystemConfig from a plain 'key = value' file.

    Blank lines and '#' comments are ignored; keys are SystemConfig field
    names and unknown keys are rejected loudly. Missing keys keep their
    dataclass defaults.
    """
    field_types = {f.name: f.type for f in dataclasses.fields(SystemConfig)}
    # Field annotations may surface as strings; normalize to constructors.
    by_name = {"int": int, "float": float, "bool": bool}
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got '{line}'")
            key, _, text = line.partition("=")
            key = key.strip()
            text = text.strip()
            if key not in field_types:
                raise ValueError(f"{path}:{lineno}: unknown key '{key}'")
            kind = field_types[key]
            if isinstance(kind, str):
                kind = by_name[kind]
            values[key] = _parse_scalar(kind, text, f"{path}:{lineno}")
    return SystemConfig(**values)
