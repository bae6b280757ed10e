"""Measurement statistics of a BPSK coherent-state link with homodyne detection.

A transmitter sends one of two antipodal coherent states (carrier phases
``phi_m = pi*m``, ``m in {0,1}``) through a phase-rotating channel (unknown
rotation ``theta``) with transmissivity ``eta`` and additive thermal noise
``Na``.  The receiver measures the quadrature selected by a local-oscillator
(LO) phase ``psi``.  The homodyne outcome for symbol ``m`` is then an exact
Gaussian,

    x ~ Normal(mu_m, sigma^2),   mu_m    = A * cos(phi_m + theta - psi),
                                 sigma^2 = Na + 1/2,   A = sqrt(2*eta*E),

so every statistic of the link depends on ``(theta, psi)`` only through the
effective offset ``phi = theta - psi``.  This module holds the parameter
container, the mean/derivative formulas, and a bit-reproducible sampler for
blocks of outcomes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

__all__ = [
    "ChannelParams",
    "ObservationBlock",
    "canonical_phase",
    "carrier_phase",
    "symbol_mean",
    "symbol_mean_deriv",
    "sample_block",
    "trial_seed",
]

_MASK64 = (1 << 64) - 1


def canonical_phase(x: float) -> float:
    """Reduce an angle to the canonical sector [0, pi).

    Plain float modulo can return the modulus itself when the operand is a
    tiny negative number (``-1e-60 % pi == pi``); this helper folds that
    rounding artifact back to 0 so the half-open contract really holds.
    """
    r = float(x) % np.pi
    return 0.0 if r >= np.pi else r


@dataclass(frozen=True)
class ChannelParams:
    """Physical link parameters.

    Attributes:
        E: mean photon number per symbol, > 0.
        eta: channel transmissivity, in (0, 1].
        Na: thermal mean photon number, >= 0.
        theta: true channel phase rotation in radians.
    """

    E: float
    eta: float
    Na: float
    theta: float = 0.0

    def __post_init__(self):
        if not self.E > 0:
            raise ValueError(f"E must be positive, got {self.E}")
        if not 0 < self.eta <= 1:
            raise ValueError(f"eta must be in (0, 1], got {self.eta}")
        if self.Na < 0:
            raise ValueError(f"Na must be non-negative, got {self.Na}")
        if not np.isfinite(self.theta):
            raise ValueError("theta must be finite")

    def amplitude(self) -> float:
        """Signal amplitude A = sqrt(2 * eta * E)."""
        return float(np.sqrt(2.0 * self.eta * self.E))

    def noise_var(self) -> float:
        """Homodyne outcome variance sigma^2 = Na + 1/2."""
        return float(self.Na + 0.5)


def carrier_phase(m: int) -> float:
    """Carrier phase of BPSK symbol ``m``: phi_0 = 0, phi_1 = pi."""
    if m not in (0, 1):
        raise ValueError(f"symbol index must be 0 or 1, got {m}")
    return np.pi * m


@dataclass(frozen=True)
class ObservationBlock:
    """A block of N homodyne outcomes with the symbols that produced them.

    Regenerating with the same (params, psi, n, seed) reproduces ``x``
    bit-exactly; see :func:`sample_block`.
    """

    x: np.ndarray
    s_true: np.ndarray
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "s_true", np.asarray(self.s_true, dtype=np.int64))
        if self.x.ndim != 1 or self.s_true.ndim != 1:
            raise ValueError("x and s_true must be 1-D")
        if len(self.x) != len(self.s_true):
            raise ValueError("x and s_true must have equal length")
        if len(self.x) < 1:
            raise ValueError("observation block must contain at least one outcome")

    @property
    def n(self) -> int:
        return len(self.x)


def symbol_mean(params: ChannelParams, psi: float, m: int) -> float:
    """Mean homodyne outcome for symbol m: A * cos(phi_m + theta - psi)."""
    return params.amplitude() * float(np.cos(carrier_phase(m) + params.theta - psi))


def symbol_mean_deriv(params: ChannelParams, psi: float, m: int) -> float:
    """d(mu_m)/d(theta) = -A * sin(phi_m + theta - psi)."""
    return -params.amplitude() * float(np.sin(carrier_phase(m) + params.theta - psi))


def block_means(params: ChannelParams, psi: float, theta: float | None = None) -> np.ndarray:
    """Both symbol means [mu_0, mu_1] at phase ``theta`` (default: params.theta)."""
    th = params.theta if theta is None else theta
    a = params.amplitude()
    return a * np.cos(np.array([0.0, np.pi]) + th - psi)


def block_mean_derivs(params: ChannelParams, psi: float, theta: float | None = None) -> np.ndarray:
    """Both mean derivatives [mu'_0, mu'_1] with respect to theta."""
    th = params.theta if theta is None else theta
    a = params.amplitude()
    return -a * np.sin(np.array([0.0, np.pi]) + th - psi)


def _splitmix64(v: int) -> int:
    """One step of the splitmix64 hash; used to decorrelate derived seeds."""
    v = (v + 0x9E3779B97F4A7C15) & _MASK64
    v = ((v ^ (v >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    v = ((v ^ (v >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (v ^ (v >> 31)) & _MASK64


def trial_seed(master_seed: int, index: int) -> int:
    """Independent 64-bit stream seed for trial ``index``: master XOR hash(index).

    The hash decorrelates consecutive indices so trials can run in parallel
    with no stream overlap in practice.
    """
    if index < 0:
        raise ValueError("index must be non-negative")
    return (int(master_seed) & _MASK64) ^ _splitmix64(int(index))


def sample_block(params: ChannelParams, psi: float, n: int, seed: int) -> ObservationBlock:
    """Draw a block of ``n`` homodyne outcomes at LO phase ``psi``.

    Symbols are equiprobable on {0, 1}. Outcomes are Gaussian with the
    symbol-conditional mean and variance of the link. Sampling uses a
    counter-based generator (Philox) and the inverse normal CDF, so a block
    is a pure function of (params, psi, n, seed): same inputs, bit-identical
    outputs, and distinct seeds give independent streams.
    """
    if n < 1:
        raise ValueError(f"block length must be >= 1, got {n}")
    rng = np.random.Generator(np.random.Philox(key=int(seed) & _MASK64))
    s = rng.integers(0, 2, size=n)
    # Uniform on the open interval (0,1) so ndtri never returns +-inf.
    u = rng.integers(1, 1 << 53, size=n) * 2.0**-53
    mu = block_means(params, psi)[s]
    x = mu + np.sqrt(params.noise_var()) * ndtri(u)
    return ObservationBlock(x=x, s_true=s, seed=int(seed) & _MASK64)
