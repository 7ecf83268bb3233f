"""Photon source models.

Two emitters are modeled: a neutral dot that emits a single photon in a
superposition of two frequency components (a color qubit), and a charged dot
whose radiative decay leaves the photon color and polarization entangled with
the electron spin.  Temporal envelopes are truncated exponentials with a sharp
rise at the excitation time; the excitation pulse itself is treated as
instantaneous because it is short compared to the radiative lifetime.

Units: time in ps, angular frequency in rad/ps.  Color convention: the blue
component sits at +delta/2 and the red at -delta/2 relative to the common
center frequency, so the blue carrier contributes exp(-i*delta*t/2) and the
red exp(+i*delta*t/2) once the center frequency is factored out.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .qcore import StateVector, state_vector

# Quadrature: uniform grid, Simpson rule.  The span must be long enough that
# the truncated tail stays below the 1e-9 normalization tolerance
# (exp(-25) ~ 1.4e-11); the step is halved for the Richardson check.
QUAD_LIFETIMES = 25.0
QUAD_STEP_PS = 0.5

SPIN_UP, SPIN_DOWN = 0, 1
COLOR_BLUE, COLOR_RED = 0, 1
POL_H, POL_V = 0, 1

_SQRT_HALF = 1.0 / math.sqrt(2.0)

ANALYZER_AXES: dict[str, tuple[complex, complex]] = {
    "H-iV": (_SQRT_HALF, -1j * _SQRT_HALF),
    "H+iV": (_SQRT_HALF, +1j * _SQRT_HALF),
    "H": (1.0, 0.0),
    "V": (0.0, 1.0),
}


@dataclass(frozen=True)
class TemporalMode:
    """Truncated-exponential single-photon temporal envelope.

    The normalized amplitude is sqrt(1/lifetime) * exp(-(t-t0)/(2*lifetime))
    * exp(-i*carrier*t) for t >= t0 and zero before.
    """

    t0: float
    gamma: float  # decay rate, 1/ps
    carrier: float  # angular frequency offset from the common reference

    def __post_init__(self) -> None:
        if self.gamma <= 0.0:
            raise ValueError(f"decay rate must be positive, got {self.gamma}")

    @property
    def lifetime(self) -> float:
        return 1.0 / self.gamma

    def envelope(self, t):
        """Real envelope sqrt(gamma) * exp(-gamma*(t-t0)/2), zero for t < t0."""
        t = np.asarray(t, dtype=np.float64)
        out = np.where(
            t >= self.t0,
            math.sqrt(self.gamma) * np.exp(-0.5 * self.gamma * (t - self.t0)),
            0.0,
        )
        return out if out.ndim else float(out)

    def amplitude(self, t):
        """Complex amplitude including the carrier phase."""
        t = np.asarray(t, dtype=np.float64)
        out = self.envelope(t) * np.exp(-1j * self.carrier * t)
        return out if out.ndim else complex(out)

    def grid(self, step: float = QUAD_STEP_PS) -> np.ndarray:
        n = int(round(QUAD_LIFETIMES * self.lifetime / step))
        if n % 2:  # Simpson needs an even interval count
            n += 1
        return self.t0 + step * np.arange(n + 1)


def make_exponential_mode(t0: float, lifetime: float, carrier: float = 0.0) -> TemporalMode:
    """Build a truncated-exponential mode from its start time and lifetime."""
    if lifetime <= 0.0:
        raise ValueError(f"lifetime must be positive, got {lifetime}")
    return TemporalMode(t0=float(t0), gamma=1.0 / float(lifetime), carrier=float(carrier))


def _simpson(values: np.ndarray, step: float) -> complex:
    weights = np.ones(values.shape[0])
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    return complex(np.sum(weights * values) * step / 3.0)


def mode_overlap(a: TemporalMode, b: TemporalMode) -> complex:
    """Overlap integral conj(xi_a(t)) * xi_b(t) dt of two normalized modes."""
    t_lo = max(a.t0, b.t0)  # the product vanishes before the later rise
    t_hi = max(a.t0 + QUAD_LIFETIMES * a.lifetime, b.t0 + QUAD_LIFETIMES * b.lifetime)
    n = int(round((t_hi - t_lo) / QUAD_STEP_PS))
    if n % 2:
        n += 1
    t = np.linspace(t_lo, t_hi, n + 1)
    vals = np.conj(a.amplitude(t)) * b.amplitude(t)
    return _simpson(vals, t[1] - t[0])


def color_cross_integral(mode: TemporalMode, delta: float) -> complex:
    """Closed form of integral envelope(t)^2 * exp(i*delta*t) dt.

    This is the overlap of the two color components sharing one envelope; it
    sets the normalization correction of a two-color wavepacket.
    """
    g = mode.gamma
    return cmath.exp(1j * delta * mode.t0) * g / (g - 1j * delta)


@dataclass(frozen=True)
class PhotonicQubit:
    """Single photon in a superposition of the blue and red color components.

    alpha multiplies the blue component, beta the red one; the pair is kept
    normalized as abstract qubit amplitudes (|alpha|^2 + |beta|^2 = 1).
    """

    alpha: complex
    beta: complex
    delta: float  # color splitting omega_b - omega_r, rad/ps
    mode: TemporalMode

    def __post_init__(self) -> None:
        norm = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"qubit amplitudes not normalized: {norm}")

    def color_state(self) -> StateVector:
        return state_vector([self.alpha, self.beta], dims=(2,))

    def wavepacket_norm(self) -> float:
        """Norm^2 of alpha*xi_b + beta*xi_r; differs from 1 because the two
        color wavepackets are not exactly orthogonal."""
        lam = color_cross_integral(self.mode, self.delta)
        return 1.0 + 2.0 * (np.conj(self.alpha) * self.beta * lam).real

    def amplitude(self, t):
        """Normalized wavepacket amplitude alpha*xi_b(t) + beta*xi_r(t)."""
        t = np.asarray(t, dtype=np.float64)
        env = self.mode.envelope(t)
        color = self.alpha * np.exp(-0.5j * self.delta * t) + self.beta * np.exp(
            0.5j * self.delta * t
        )
        out = env * color / math.sqrt(self.wavepacket_norm())
        return out if out.ndim else complex(out)

    def delayed(self, d: float) -> "PhotonicQubit":
        """The same wavepacket delayed by d ps (envelope and color phases)."""
        rot = cmath.exp(0.5j * self.delta * d)
        return PhotonicQubit(
            alpha=self.alpha * rot,
            beta=self.beta / rot,
            delta=self.delta,
            mode=TemporalMode(self.mode.t0 + d, self.mode.gamma, self.mode.carrier),
        )


def beat_intensity(q: PhotonicQubit, t):
    """Emission intensity |alpha*xi_b(t) + beta*xi_r(t)|^2 of a color qubit.

    For balanced amplitudes the two components beat at the color splitting,
    modulating the exponential envelope with period 2*pi/delta.  The
    wavepacket is kept normalized, so the intensity integrates to one for any
    amplitude pair.
    """
    amp = q.amplitude(t)
    out = np.abs(np.asarray(amp)) ** 2
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class SourceConfig:
    """Source parameters shared by qubit generation and pair generation."""

    lifetime: float  # ps
    delta: float  # rad/ps
    p_exc: float = 1.0
    analyzer: str = "H-iV"
    t0: float = 0.0

    def __post_init__(self) -> None:
        if self.lifetime <= 0.0:
            raise ValueError("lifetime must be positive")
        if not 0.0 <= self.p_exc <= 1.0:
            raise ValueError("excitation probability must lie in [0, 1]")


@dataclass(frozen=True)
class EntangledPairState:
    """Joint spin (x) photon-color (x optional polarization) state from trion decay."""

    joint: StateVector  # dims (2, 2) after erasure, (2, 2, 2) before
    mode: TemporalMode
    zeeman: float  # spin splitting, rad/ps; matched to the color splitting

    @property
    def has_polarization(self) -> bool:
        return len(self.joint.dims) == 3


def generate_photonic_qubit(cfg: SourceConfig, amplitudes: tuple[complex, complex]) -> PhotonicQubit:
    """Map drive amplitudes (blue, red) linearly onto a normalized color qubit."""
    a, b = complex(amplitudes[0]), complex(amplitudes[1])
    norm = math.sqrt(abs(a) ** 2 + abs(b) ** 2)
    if norm == 0.0:
        raise ValueError("drive amplitudes must not both be zero")
    return PhotonicQubit(
        alpha=a / norm,
        beta=b / norm,
        delta=cfg.delta,
        mode=make_exponential_mode(cfg.t0, cfg.lifetime),
    )


def generate_spin_photon_pair(cfg: SourceConfig, rng: np.random.Generator | None = None):
    """Attempt entangled-pair generation; returns the pair or None on no emission.

    With probability p_exc the trion is excited and decays into the
    polarization-resolved state (|down, red, H> + i |up, blue, V>) / sqrt(2);
    otherwise None is returned and the spin stays in its initialized state.
    The no-emission branch is what makes the unconditioned spin-up population
    exceed one half in the repetition baseline.
    """
    if cfg.p_exc < 1.0:
        if rng is None:
            raise ValueError("p_exc < 1 requires an rng to sample emission")
        if rng.random() >= cfg.p_exc:
            return None
    amps = np.zeros(8, dtype=np.complex128)
    amps[np.ravel_multi_index((SPIN_DOWN, COLOR_RED, POL_H), (2, 2, 2))] = _SQRT_HALF
    amps[np.ravel_multi_index((SPIN_UP, COLOR_BLUE, POL_V), (2, 2, 2))] = 1j * _SQRT_HALF
    return EntangledPairState(
        joint=StateVector(amps, (2, 2, 2)),
        mode=make_exponential_mode(cfg.t0, cfg.lifetime),
        zeeman=cfg.delta,
    )


def analyzer_jones(axis) -> np.ndarray:
    """Normalized Jones vector of a polarization analyzer.

    String axes name the transmitted polarization, e.g. "H-iV" transmits
    (|H> - i|V>)/sqrt(2); a 2-tuple of complex amplitudes is accepted as-is.
    The transmitted amplitude of a state is <axis|state>.
    """
    if isinstance(axis, str):
        try:
            vec = ANALYZER_AXES[axis]
        except KeyError:
            raise ValueError(f"unknown analyzer axis {axis!r}") from None
    else:
        vec = axis
    jones = np.asarray(vec, dtype=np.complex128)
    norm = np.linalg.norm(jones)
    if jones.shape != (2,) or norm == 0.0:
        raise ValueError("analyzer axis must be a nonzero 2-vector")
    return jones / norm


def erase_polarization(pair: EntangledPairState, axis="H-iV") -> tuple[EntangledPairState, float]:
    """Project the photon polarization onto an analyzer axis and drop it.

    Returns the renormalized spin (x) color state and the pass probability.
    """
    if not pair.has_polarization:
        raise ValueError("pair polarization already erased")
    jones = analyzer_jones(axis)
    amps = pair.joint.amplitudes.reshape(2, 2, 2)
    passed = np.tensordot(amps, jones.conj(), axes=([2], [0]))  # (spin, color)
    prob = float(np.sum(np.abs(passed) ** 2))
    if prob <= 1e-15:
        raise ValueError("analyzer fully blocks the pair state")
    erased = EntangledPairState(
        joint=StateVector(passed.ravel() / math.sqrt(prob), (2, 2)),
        mode=pair.mode,
        zeeman=pair.zeeman,
    )
    return erased, prob
