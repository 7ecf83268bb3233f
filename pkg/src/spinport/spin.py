"""Electron-spin dynamics in the frame rotating at the Zeeman frequency.

The only stochastic ingredient is the quasi-static Overhauser detuning: the
nuclear bath shifts the spin splitting by a zero-mean Gaussian amount that is
constant within one experimental repetition and resampled between
repetitions.  Rotation pulses are instantaneous ideal rotations (the 4 ps
pulse duration is negligible against every other timescale).

Basis order is {|up>, |down>}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

Frame = Literal["lab", "rotating"]
Axis = Literal["x", "y", "z"]
Basis = Literal["z", "x+", "x-"]

_SX = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_SY = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
_SZ = np.array([[1, 0], [0, -1]], dtype=np.complex128)
_PAULI = {"x": _SX, "y": _SY, "z": _SZ}


@dataclass(frozen=True)
class SpinDensity:
    """2x2 spin density matrix with its reference frame."""

    matrix: np.ndarray
    frame: Frame = "rotating"

    def __post_init__(self) -> None:
        mat = np.asarray(self.matrix, dtype=np.complex128)
        if mat.shape != (2, 2):
            raise ValueError("spin density matrix must be 2x2")
        if np.max(np.abs(mat - mat.conj().T)) > 1e-9:
            raise ValueError("spin density matrix not Hermitian")
        if abs(np.trace(mat).real - 1.0) > 1e-9:
            raise ValueError("spin density matrix trace != 1")
        if float(np.min(np.linalg.eigvalsh(mat))) < -1e-9:
            raise ValueError("spin density matrix not positive semidefinite")
        mat = mat.copy()
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    def coherence(self) -> complex:
        return complex(self.matrix[0, 1])

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))


def spin_ket(amplitudes, frame: Frame = "rotating") -> SpinDensity:
    v = np.asarray(amplitudes, dtype=np.complex128)
    v = v / np.linalg.norm(v)
    return SpinDensity(np.outer(v, v.conj()), frame)


def spin_up() -> SpinDensity:
    return spin_ket([1.0, 0.0])


def spin_down() -> SpinDensity:
    return spin_ket([0.0, 1.0])


def spin_mixed() -> SpinDensity:
    return SpinDensity(0.5 * np.eye(2, dtype=np.complex128))


@dataclass(frozen=True)
class OverhauserModel:
    """Zero-mean Gaussian detuning with std sqrt(2)/T2*.

    The convention is pinned by the ensemble free-decay envelope
    exp(-(t/T2*)^2), which the Gaussian average of exp(-i*delta*t) reproduces
    with sigma = sqrt(2)/T2*.
    """

    t2star: float  # ps

    def __post_init__(self) -> None:
        if self.t2star <= 0.0:
            raise ValueError("T2* must be positive")

    @property
    def sigma(self) -> float:
        return math.sqrt(2.0) / self.t2star

    def decay_envelope(self, t: float) -> float:
        """Exact ensemble coherence magnitude after free evolution for t ps."""
        return math.exp(-((t / self.t2star) ** 2))


def sample_overhauser(model: OverhauserModel, rng: np.random.Generator) -> float:
    """One quasi-static detuning draw (rad/ps)."""
    return model.sigma * float(rng.standard_normal())


@dataclass(frozen=True)
class PulseSchedule:
    """Instantaneous rotation pulses plus the readout window.

    pulses: sequence of (time_ps, axis, angle_rad), times nondecreasing.
    """

    pulses: tuple[tuple[float, Axis, float], ...]
    t_echo: float
    readout_window: tuple[float, float] = field(default=(0.0, 0.0))

    def __post_init__(self) -> None:
        pulses = tuple((float(t), ax, float(a)) for t, ax, a in self.pulses)
        object.__setattr__(self, "pulses", pulses)
        times = [t for t, _, _ in pulses]
        if any(t2 < t1 for t1, t2 in zip(times, times[1:])):
            raise ValueError("pulse times must be nondecreasing")
        window = (float(self.readout_window[0]), float(self.readout_window[1]))
        if window == (0.0, 0.0):
            window = (self.t_echo, self.t_echo)
        object.__setattr__(self, "readout_window", window)
        if times and window[0] < times[-1]:
            raise ValueError("readout window must start after the last pulse")

    @property
    def readout_time(self) -> float:
        return self.readout_window[0]


def standard_echo(t_echo: float, readout_window: tuple[float, float] | None = None) -> PulseSchedule:
    """One pi pulse about x at t_echo/2 with readout at t_echo."""
    window = readout_window if readout_window is not None else (t_echo, t_echo)
    return PulseSchedule(pulses=((t_echo / 2.0, "x", math.pi),), t_echo=t_echo, readout_window=window)


def evolve_free(s: SpinDensity, delta: float, duration: float) -> SpinDensity:
    """Free evolution under a detuning: the coherence acquires exp(-i*delta*t)."""
    if duration < 0.0:
        raise ValueError("duration must be nonnegative")
    phase = np.exp(-1j * delta * duration)
    mat = np.array(s.matrix)
    mat[0, 1] *= phase
    mat[1, 0] *= np.conj(phase)
    return SpinDensity(mat, s.frame)


def rotation_matrix(axis: Axis, angle: float) -> np.ndarray:
    """exp(-i * angle/2 * sigma_axis)."""
    try:
        sigma = _PAULI[axis]
    except KeyError:
        raise ValueError(f"unknown rotation axis {axis!r}") from None
    return math.cos(angle / 2.0) * np.eye(2) - 1j * math.sin(angle / 2.0) * sigma


def apply_pulse(s: SpinDensity, axis: Axis, angle: float) -> SpinDensity:
    u = rotation_matrix(axis, angle)
    return SpinDensity(u @ s.matrix @ u.conj().T, s.frame)


def _propagate(rho: np.ndarray, sched: PulseSchedule, deltas: np.ndarray) -> np.ndarray:
    """Propagate a stack of density matrices, one static detuning per trial."""
    now = 0.0
    phases_for = lambda dt: np.exp(-1j * deltas * dt)
    steps = list(sched.pulses) + [(sched.readout_time, None, 0.0)]
    for t_pulse, axis, angle in steps:
        dt = t_pulse - now
        if dt < 0.0:
            raise ValueError("schedule runs backwards")
        if dt > 0.0:
            ph = phases_for(dt)
            rho = rho.copy()
            rho[:, 0, 1] *= ph
            rho[:, 1, 0] *= np.conj(ph)
        if axis is not None:
            u = rotation_matrix(axis, angle)
            rho = np.einsum("ab,nbc,dc->nad", u, rho, u.conj())
        now = t_pulse
    return rho


def run_echo(
    s: SpinDensity,
    sched: PulseSchedule,
    model: OverhauserModel,
    rng: np.random.Generator | int | None = None,
    trials: int | None = None,
) -> SpinDensity:
    """Ensemble-averaged spin state after the pulse schedule.

    With ``trials`` set, averages Monte Carlo trajectories over quasi-static
    Overhauser draws (one detuning per trial, vectorized; the draw order is a
    single batched normal sample so results are reproducible for a fixed rng
    seed).  With ``trials=None`` the exact Gaussian ensemble average is
    computed instead, which requires every pulse to be a pi rotation about x
    or y (the schedules used by the protocol).
    """
    if trials is None:
        return _run_echo_exact(s, sched, model)
    if trials <= 0:
        raise ValueError("trials must be positive")
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    deltas = model.sigma * gen.standard_normal(trials)
    rho = np.broadcast_to(s.matrix, (trials, 2, 2)).copy()
    rho = _propagate(rho, sched, deltas)
    avg = rho.mean(axis=0)
    avg = 0.5 * (avg + avg.conj().T)
    return SpinDensity(avg, s.frame)


def _run_echo_exact(s: SpinDensity, sched: PulseSchedule, model: OverhauserModel) -> SpinDensity:
    # Between pi pulses the coherence accumulates detuning phase with a sign
    # that flips at each pulse; averaging exp(-i*delta*s_net) over the
    # Gaussian gives exp(-sigma^2 * s_net^2 / 2) exactly.
    for _, axis, angle in sched.pulses:
        if axis not in ("x", "y") or abs(abs(angle) - math.pi) > 1e-12:
            raise ValueError("exact ensemble average supports only pi pulses about x or y")
    now = 0.0
    s_net = 0.0
    sign = 1.0
    mat = np.array(s.matrix)
    for t_pulse, axis, angle in sched.pulses:
        s_net += sign * (t_pulse - now)
        u = rotation_matrix(axis, angle)
        mat = u @ mat @ u.conj().T
        sign = -sign
        now = t_pulse
    s_net += sign * (sched.readout_time - now)
    damp = math.exp(-0.5 * (model.sigma * s_net) ** 2)
    mat[0, 1] *= damp
    mat[1, 0] *= damp
    return SpinDensity(mat, s.frame)


def net_detuning_weight(sched: PulseSchedule) -> float:
    """Signed detuning-time sum seen by the coherence (0 for a balanced echo)."""
    now = 0.0
    s_net = 0.0
    sign = 1.0
    for t_pulse, axis, angle in sched.pulses:
        s_net += sign * (t_pulse - now)
        if axis in ("x", "y") and abs(abs(angle) - math.pi) < 1e-12:
            sign = -sign
        now = t_pulse
    return s_net + sign * (sched.readout_time - now)


def measure_in_basis(s: SpinDensity, basis: Basis) -> tuple[float, float]:
    """Projective measurement probabilities (p_first, p_second) in a basis.

    Rotated bases are realized by pulse composition followed by a z readout,
    mirroring the experimental sequence (pi/2 pulse, then readout).
    """
    if basis == "z":
        rotated = s
    elif basis == "x+":
        rotated = apply_pulse(s, "y", -math.pi / 2.0)
    elif basis == "x-":
        rotated = apply_pulse(s, "y", math.pi / 2.0)
    else:
        raise ValueError(f"unknown measurement basis {basis!r}")
    p_first = float(np.real(rotated.matrix[0, 0]))
    p_first = min(max(p_first, 0.0), 1.0)
    return p_first, 1.0 - p_first
