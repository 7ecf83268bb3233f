"""Two-photon interference on a lossless 50:50 beam splitter.

Coincidence densities carry the color carriers inside the temporal
wavepackets; partial distinguishability in every non-color degree of freedom
(spatial profile, polarization mismatch, residual temporal mismatch) is
collapsed into a single scalar overlap M multiplying the interference term.

Heralding: a detector-1/detector-2 coincidence projects the photons onto the
antisymmetric color combination.  For the joint spin-photon input state the
conditional spin density matrix at detection times (t1, t2) is

    rho(t1, t2)  ~  g g+  +  h h+  -  M (g h+ + h g+)

where g (photon A to detector 1, B to detector 2) and h (the swapped
assignment) are two-component spin amplitudes built from the wavepacket
values at the detection times.  At M = 1 this reduces to the pure projected
state; at M = 0 it is the classical color-correlated background.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .qcore import StateVector
from .source import PhotonicQubit, TemporalMode
from .spin import SpinDensity


@dataclass(frozen=True)
class DistinguishabilityModel:
    """Scalar mode overlap plus the polarization configuration of the inputs."""

    overlap: float = 1.0
    polarization: Literal["parallel", "orthogonal"] = "parallel"
    delay: float = 0.0  # extra delay of photon B, ps

    def __post_init__(self) -> None:
        if not 0.0 <= self.overlap <= 1.0:
            raise ValueError("overlap must lie in [0, 1]")

    @property
    def effective_overlap(self) -> float:
        """Orthogonal polarizations switch interference off entirely."""
        return 0.0 if self.polarization == "orthogonal" else self.overlap


@dataclass(frozen=True)
class CoincidenceWindow:
    """Delay acceptance window and repetition folding parameters."""

    lower: float
    upper: float
    period: float
    periods: int

    def __post_init__(self) -> None:
        if not self.lower < self.upper:
            raise ValueError("window lower bound must be below upper bound")
        if self.period <= 0.0:
            raise ValueError("repetition period must be positive")
        if self.periods < 1:
            raise ValueError("period count must be at least 1")


@dataclass(frozen=True)
class HeraldOutcome:
    """Result of conditioning on a coincidence at detection times (t1, t2)."""

    t1: float
    t2: float
    spin: SpinDensity | None
    density: float  # joint detection probability density, 1/ps^2

    @property
    def is_null(self) -> bool:
        return self.spin is None


@dataclass(frozen=True)
class JointState:
    """Spin (x) photon A (x) photon B color state with its mode metadata."""

    state: StateVector  # dims (2, 2, 2), subsystem order (spin, A, B)
    mode_a: TemporalMode
    mode_b: TemporalMode
    delta: float

    def __post_init__(self) -> None:
        if self.state.dims != (2, 2, 2):
            raise ValueError("joint state must have dims (spin, photon A, photon B) = (2, 2, 2)")


def _color_phases(delta: float, t) -> np.ndarray:
    """Carrier phase per color index {blue, red} at time(s) t."""
    t = np.asarray(t, dtype=np.float64)
    return np.stack([np.exp(-0.5j * delta * t), np.exp(0.5j * delta * t)])


def coincidence_density(
    qubit_a: PhotonicQubit,
    qubit_b: PhotonicQubit,
    dist: DistinguishabilityModel,
    t1,
    t2,
):
    """Coincidence probability density for clicks at (t1, t2) on the two outputs.

    Equals |xi_A(t1) xi_B(t2) - xi_A(t2) xi_B(t1)|^2 * M / 4 plus the
    non-interfering part (|xi_A(t1) xi_B(t2)|^2 + |xi_A(t2) xi_B(t1)|^2) *
    (1 - M) / 4, with the color carriers inside the xi and M switched off for
    orthogonal polarizations.
    """
    if dist.delay:
        qubit_b = qubit_b.delayed(dist.delay)
    m = dist.effective_overlap
    t1 = np.asarray(t1, dtype=np.float64)
    t2 = np.asarray(t2, dtype=np.float64)
    g = qubit_a.amplitude(t1) * qubit_b.amplitude(t2)
    h = qubit_a.amplitude(t2) * qubit_b.amplitude(t1)
    dens = 0.25 * (np.abs(g) ** 2 + np.abs(h) ** 2 - 2.0 * m * np.real(g * np.conj(h)))
    dens = np.maximum(dens, 0.0)
    return dens if dens.ndim else float(dens)


def hom_visibility(c_parallel: float, c_orthogonal: float) -> tuple[float, float]:
    """Visibility (C_perp - C_par) / C_perp with propagated counting error."""
    if c_orthogonal <= 0:
        raise ValueError("orthogonal-polarization count must be positive")
    if c_parallel < 0:
        raise ValueError("counts must be nonnegative")
    v = (c_orthogonal - c_parallel) / c_orthogonal
    # Poisson errors on both counts, independent runs.
    rel = c_parallel / c_orthogonal
    err = rel * math.sqrt((1.0 / c_parallel if c_parallel > 0 else 0.0) + 1.0 / c_orthogonal)
    return float(v), float(err)


def herald_amplitudes(joint: JointState, t1, t2) -> tuple[np.ndarray, np.ndarray]:
    """Spin amplitude vectors g (A->D1, B->D2) and h (swapped) at (t1, t2).

    Shapes broadcast over t1/t2; the leading axis indexes the spin basis.
    """
    psi = joint.state.amplitudes.reshape(2, 2, 2)
    pa1 = joint.mode_a.envelope(t1) * _color_phases(joint.delta, t1)  # (color, ...)
    pa2 = joint.mode_a.envelope(t2) * _color_phases(joint.delta, t2)
    pb1 = joint.mode_b.envelope(t1) * _color_phases(joint.delta, t1)
    pb2 = joint.mode_b.envelope(t2) * _color_phases(joint.delta, t2)
    g = np.einsum("sab,a...,b...->s...", psi, pa1, pb2)
    h = np.einsum("sab,b...,a...->s...", psi, pb1, pa2)
    return g, h


def heralded_spin_matrices(
    joint: JointState, dist: DistinguishabilityModel, t1, t2
) -> tuple[np.ndarray, np.ndarray]:
    """Unnormalized conditional spin matrices and herald densities.

    Returns (rho, density) where rho has shape (..., 2, 2) and density is the
    trace of rho (the coincidence density at those times).
    """
    m = dist.effective_overlap
    g, h = herald_amplitudes(joint, t1, t2)
    g = np.moveaxis(g, 0, -1)  # (..., spin)
    h = np.moveaxis(h, 0, -1)
    gg = g[..., :, None] * np.conj(g[..., None, :])
    hh = h[..., :, None] * np.conj(h[..., None, :])
    gh = g[..., :, None] * np.conj(h[..., None, :])
    rho = 0.25 * (gg + hh - m * (gh + np.conj(np.swapaxes(gh, -1, -2))))
    dens = np.real(np.trace(rho, axis1=-2, axis2=-1))
    return rho, dens


def herald_spin_state(
    joint: JointState, dist: DistinguishabilityModel, t1: float, t2: float
) -> HeraldOutcome:
    """Spin state heralded by a coincidence at detection times (t1, t2).

    The heralded state mixes the interference-projected component (weight M)
    with the color-correlated classical background (weight 1 - M); at M = 1
    and matched envelopes it is independent of the detection times, which is
    what makes the protocol insensitive to detector jitter.
    """
    rho, dens = heralded_spin_matrices(joint, dist, float(t1), float(t2))
    rho = rho.reshape(2, 2)
    density = float(dens.reshape(()))
    if density <= 1e-300:
        return HeraldOutcome(t1=t1, t2=t2, spin=None, density=0.0)
    mat = rho / density
    mat = 0.5 * (mat + mat.conj().T)
    return HeraldOutcome(t1=t1, t2=t2, spin=SpinDensity(mat), density=density)
