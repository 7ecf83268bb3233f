"""Experiment orchestration: teleportation, interference and correlation runs.

Each experiment exists in two modes.  Monte Carlo mode samples per-repetition
trajectories (emission, beam-splitter outcome, detection times, spin
measurement) through the sampling kernels; analytic mode replaces sampling
with density integration on a fine time grid.  Both are deterministic for a
fixed master seed: randomness comes from named substreams derived as
SeedSequence([seed, input_index, stream_id, batch]), so aggregation order and
worker layout cannot change the result.

The echo bookkeeping works in the frame where the heralded spin state is
static: the deterministic pi rotation of the echo is folded into the outcome
labels (a pi pulse about x swaps the z outcomes and leaves the x outcomes
unchanged), while the stochastic Overhauser phase is applied explicitly with
its echo-filtered sign.  tests/test_protocol.py checks this shortcut against
the literal pulse-by-pulse propagation in the spin module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import erf

from . import kernels
from .interference import (
    CoincidenceWindow,
    DistinguishabilityModel,
    JointState,
    heralded_spin_matrices,
    hom_visibility,
)
from .qcore import permute_subsystems, tensor_product
from .source import PhotonicQubit, SourceConfig, erase_polarization, generate_photonic_qubit, generate_spin_photon_pair
from .spin import OverhauserModel, net_detuning_weight, standard_echo
from .tagstream import (
    CoincidenceHistogram,
    TagStream,
    TwofoldResult,
    apply_jitter,
    correlate_threefold,
    correlate_twofold,
    fit_oscillation_period,
    histogram_taus,
)

TWO_PI = 2.0 * math.pi

INPUT_LABELS = ("omega_r", "omega_b", "plus", "minus")

# label -> (drive amplitudes (blue, red), measurement basis, correct outcome index)
_INPUT_TABLE: dict[str, tuple[tuple[complex, complex], str, int]] = {
    "omega_r": ((0.0, 1.0), "z", 0),  # teleports onto |up>
    "omega_b": ((1.0, 0.0), "z", 1),  # onto |down>
    "plus": ((1.0, 1.0), "x", 0),  # onto |up>+|down>
    "minus": ((-1.0, 1.0), "x", 1),  # onto |up>-|down>
}

# Substream ids; never renumber (seeded results depend on them).
_S_EMISSION = 1
_S_PAIR = 2
_S_JITTER = 3
_S_MEASURE = 4
_S_SPIN = 5
_S_DARK = 6
_S_SINGLES = 7
_S_EFFICIENCY = 8

KERNEL_BATCH = 1 << 16


@dataclass(frozen=True)
class ExperimentConfig:
    """Timing and run parameters of the teleportation sequence."""

    input_states: tuple[str, ...] = INPUT_LABELS
    delta: float = TWO_PI * 0.0049  # rad/ps (4.9 GHz)
    lifetime: float = 650.0  # ps
    repetition: float = 13100.0  # ps
    t_echo: float = 13000.0  # ps
    propagation_delay: float = 11000.0  # ps
    herald_offset: float = 0.0  # ps from the pulse rise
    herald_window: float = 800.0  # ps
    readout_time: float = 0.0  # ps; 0 means "at the echo refocus", i.e. t_echo
    trials: int = 100_000
    seed: int = 1
    periods: int = 7
    bin_width: float = 50.0
    tau_range: float = 1200.0  # ps, half-width of delay histograms

    def __post_init__(self) -> None:
        labels = (self.input_states,) if isinstance(self.input_states, str) else tuple(self.input_states)
        for label in labels:
            if label not in _INPUT_TABLE:
                raise ValueError(f"unknown input state {label!r}")
        object.__setattr__(self, "input_states", labels)
        for name in ("delta", "lifetime", "repetition", "t_echo", "propagation_delay", "herald_window", "bin_width", "tau_range"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.trials <= 0 or self.periods < 1:
            raise ValueError("trials and periods must be positive")
        if self.readout_time and self.readout_time < self.t_echo / 2.0:
            raise ValueError("readout must come after the echo pulse")

    @property
    def window(self) -> tuple[float, float]:
        return (self.herald_offset, self.herald_offset + self.herald_window)

    @property
    def readout(self) -> float:
        return self.readout_time if self.readout_time > 0.0 else self.t_echo


@dataclass(frozen=True)
class NoiseModel:
    """Imperfection knobs of the full experiment."""

    overlap: float = 1.0
    jitter_sigma: float = 0.0  # ps
    t2star: float = 1000.0  # ps
    p_exc: float = 1.0
    p_up_init: float = 0.5  # unconditioned spin-up population
    readout_error: float = 0.0
    dark_rate: float = 0.0  # 1/ps per detector
    g2_residual: float = 0.0  # two-photon emission probability per pulse
    herald_efficiency: float = 1.0  # per-click detection efficiency at the splitter outputs

    def __post_init__(self) -> None:
        for name in ("overlap", "p_exc", "p_up_init", "readout_error", "g2_residual", "herald_efficiency"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.jitter_sigma < 0.0 or self.dark_rate < 0.0:
            raise ValueError("jitter sigma and dark rate must be nonnegative")
        if self.t2star <= 0.0:
            raise ValueError("T2* must be positive")
        if self.p_exc < 1.0:
            lo, hi = 0.5 * self.p_exc, 1.0 - 0.5 * self.p_exc
            if not lo - 1e-9 <= self.p_up_init <= hi + 1e-9:
                raise ValueError(
                    f"p_up_init must lie in [{lo}, {hi}] for p_exc={self.p_exc} "
                    "(emitted repetitions leave the spin unpolarized)"
                )

    @property
    def q_init(self) -> float:
        """P(spin up | no emission) reproducing the requested p_up_init."""
        if self.p_exc >= 1.0:
            return 1.0
        return (self.p_up_init - 0.5 * self.p_exc) / (1.0 - self.p_exc)


IDEAL_NOISE = NoiseModel()


@dataclass(frozen=True)
class InputResult:
    """Teleportation statistics for one photonic input state."""

    label: str
    basis: str
    fidelity: float
    fidelity_err: float
    ratio: float  # correct / wrong period-0 counts
    n_heralds: float
    counts: np.ndarray  # (2, periods): [outcome, period], logical labels
    tau_hist_correct: CoincidenceHistogram
    tau_hist_wrong: CoincidenceHistogram
    herald_stream: TagStream | None = None
    readout_stream: TagStream | None = None


@dataclass(frozen=True)
class TeleportResult:
    per_input: dict[str, InputResult]
    f_overall: float
    f_overall_err: float
    trials: int
    seed: int
    mode: str

    def fidelities(self) -> dict[str, float]:
        return {k: r.fidelity for k, r in self.per_input.items()}


def classical_ratio_to_fidelity(ratio: float) -> float:
    """Conditional fidelity implied by a correct/wrong count ratio: r/(1+r)."""
    if not ratio > 0.0:
        raise ValueError("ratio must be positive")
    if math.isinf(ratio):
        return 1.0
    return ratio / (1.0 + ratio)


def threshold_significance(f: float, stderr: float) -> float:
    """Distance of a fidelity above the measure-and-prepare bound 2/3, in sigma."""
    if stderr <= 0.0:
        raise ValueError("stderr must be positive")
    return (f - 2.0 / 3.0) / stderr


def build_joint_state(label: str, cfg: ExperimentConfig) -> tuple[JointState, PhotonicQubit]:
    """Assemble the pre-splitter spin (x) photon A (x) photon B color state."""
    drive, _, _ = _INPUT_TABLE[label]
    scfg = SourceConfig(lifetime=cfg.lifetime, delta=cfg.delta, p_exc=1.0)
    qubit = generate_photonic_qubit(scfg, drive)
    pair = generate_spin_photon_pair(scfg)
    erased, _ = erase_polarization(pair, "H-iV")
    joint = tensor_product(erased.joint, qubit.color_state())  # (spin, B, A)
    joint = permute_subsystems(joint, (0, 2, 1))  # -> (spin, A, B)
    return JointState(joint, qubit.mode, erased.mode, cfg.delta), qubit


def _seedseq(cfg: ExperimentConfig, input_idx: int, stream: int, *extra: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([cfg.seed, input_idx, stream, *extra])


def _rng(cfg: ExperimentConfig, input_idx: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(_seedseq(cfg, input_idx, stream))


def _sample_pairs_batched(
    cfg: ExperimentConfig,
    input_idx: int,
    n: int,
    pa: kernels.PhotonParams,
    pb: kernels.PhotonParams,
    overlap: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    outcome = np.empty(n, dtype=np.int8)
    t1 = np.empty(n)
    t2 = np.empty(n)
    for bi, start in enumerate(range(0, n, KERNEL_BATCH)):
        stop = min(start + KERNEL_BATCH, n)
        bg = np.random.PCG64(_seedseq(cfg, input_idx, _S_PAIR, bi))
        oc, x, y = kernels.sample_pair_clicks(bg, stop - start, pa, pb, cfg.delta, overlap)
        outcome[start:stop] = oc
        t1[start:stop] = x
        t2[start:stop] = y
    return outcome, t1, t2


def _sample_times_batched(
    cfg: ExperimentConfig, input_idx: int, stream: int, n: int, p: kernels.PhotonParams
) -> np.ndarray:
    out = np.empty(n)
    for bi, start in enumerate(range(0, n, KERNEL_BATCH)):
        stop = min(start + KERNEL_BATCH, n)
        bg = np.random.PCG64(_seedseq(cfg, input_idx, stream, bi))
        out[start:stop] = kernels.sample_times(bg, stop - start, p, cfg.delta)
    return out


def _echo_phase_factor(cfg: ExperimentConfig, deltas: np.ndarray) -> np.ndarray:
    """Per-trial coherence phase surviving the echo (1.0 for a balanced echo)."""
    sched = standard_echo(cfg.t_echo, (cfg.readout, cfg.readout))
    s_net = net_detuning_weight(sched)
    return np.exp(-1j * deltas * s_net)


def _measure_first_prob(rho: np.ndarray, basis: str) -> np.ndarray:
    """P(first basis outcome) for a stack of logical spin density matrices."""
    if basis == "z":
        p = np.real(rho[..., 0, 0])
    else:  # x basis: <+|rho|+> with unit trace
        p = 0.5 * np.real(rho[..., 0, 0] + rho[..., 1, 1]) + np.real(rho[..., 0, 1])
    return np.clip(p, 0.0, 1.0)


def _teleport_input_mc(cfg: ExperimentConfig, noise: NoiseModel, label: str) -> InputResult:
    input_idx = INPUT_LABELS.index(label)
    _, basis, correct = _INPUT_TABLE[label]
    n = cfg.trials
    w0, w1 = cfg.window

    gen_e = _rng(cfg, input_idx, _S_EMISSION)
    emitted = gen_e.random(n) < noise.p_exc
    init_up = gen_e.random(n) < noise.q_init
    idx_pairs = np.flatnonzero(emitted)

    joint, qubit = build_joint_state(label, cfg)
    pa = kernels.PhotonParams(t0=0.0, tau=cfg.lifetime, amp_blue=qubit.alpha, amp_red=qubit.beta)
    pb = kernels.PhotonParams(t0=0.0, tau=cfg.lifetime, entangled=True)

    outcome = np.full(n, -1, dtype=np.int8)
    t1 = np.zeros(n)
    t2 = np.zeros(n)
    oc, x, y = _sample_pairs_batched(cfg, input_idx, idx_pairs.size, pa, pb, noise.overlap)
    outcome[idx_pairs] = oc
    t1[idx_pairs] = x
    t2[idx_pairs] = y

    gen_j = _rng(cfg, input_idx, _S_JITTER)
    m1 = t1 + noise.jitter_sigma * gen_j.standard_normal(n)
    m2 = t2 + noise.jitter_sigma * gen_j.standard_normal(n)

    in_win = (m1 >= w0) & (m1 <= w1) & (m2 >= w0) & (m2 <= w1)
    heralded = emitted & (outcome == kernels.SPLIT) & in_win
    if noise.herald_efficiency < 1.0:
        gen_eff = _rng(cfg, input_idx, _S_EFFICIENCY)
        eta = noise.herald_efficiency
        heralded &= (gen_eff.random(n) < eta) & (gen_eff.random(n) < eta)

    # Unconditioned readout branch probabilities.
    if basis == "z":
        p_first = np.where(emitted, 0.5, np.where(init_up, 1.0, 0.0))
    else:
        p_first = np.full(n, 0.5)

    # Heralded branch: exact conditional spin state at the true detection times.
    h_idx = np.flatnonzero(heralded)
    dist = DistinguishabilityModel(overlap=noise.overlap)
    gen_s = _rng(cfg, input_idx, _S_SPIN)
    deltas = OverhauserModel(noise.t2star).sigma * gen_s.standard_normal(n)
    if h_idx.size:
        rho, dens = heralded_spin_matrices(joint, dist, t1[h_idx], t2[h_idx])
        rho = rho / dens[:, None, None]
        phase = _echo_phase_factor(cfg, deltas[h_idx])
        rho[:, 0, 1] *= phase
        rho[:, 1, 0] *= np.conj(phase)
        p_first[h_idx] = _measure_first_prob(rho, basis)

    gen_m = _rng(cfg, input_idx, _S_MEASURE)
    first = gen_m.random(n) < p_first
    first ^= gen_m.random(n) < noise.readout_error

    # False heralds from dark counts (pragmatic model: any trial acquiring
    # in-window clicks on both detectors heralds; non-pair clicks leave the
    # spin unconditioned, which the branch probabilities above already encode).
    if noise.dark_rate > 0.0:
        heralded = heralded | _dark_heralds(cfg, noise, input_idx, n, emitted, outcome, m1, m2)

    trials_idx = np.arange(n, dtype=np.int64)
    h_idx = np.flatnonzero(heralded)
    base = trials_idx[h_idx] * cfg.repetition + cfg.propagation_delay
    herald_stream = TagStream(
        detector=np.concatenate([np.zeros(h_idx.size), np.ones(h_idx.size)]),
        timestamp=np.concatenate([base + m1[h_idx], base + m2[h_idx]]),
        trial=np.concatenate([trials_idx[h_idx]] * 2),
        channel=np.zeros(2 * h_idx.size),
    )
    readout_stream = TagStream(
        detector=np.where(first, 0, 1).astype(np.int8),
        timestamp=trials_idx * cfg.repetition + cfg.propagation_delay + cfg.readout,
        trial=trials_idx,
        channel=np.ones(n),
    )

    tf = correlate_threefold(herald_stream, readout_stream, cfg.periods)
    return _assemble_input_result(
        cfg, label, basis, correct, tf.counts.astype(float), tf.n_heralds,
        (tf.tau_first, tf.tau_second), herald_stream, readout_stream,
    )


def _dark_heralds(
    cfg: ExperimentConfig,
    noise: NoiseModel,
    input_idx: int,
    n: int,
    emitted: np.ndarray,
    outcome: np.ndarray,
    m1: np.ndarray,
    m2: np.ndarray,
) -> np.ndarray:
    """Trials heralded only with help from dark counts."""
    w0, w1 = cfg.window
    lam = noise.dark_rate * (w1 - w0)
    gen_d = _rng(cfg, input_idx, _S_DARK)
    dark1 = gen_d.poisson(lam, n) > 0
    dark2 = gen_d.poisson(lam, n) > 0
    in1 = np.zeros(n, dtype=bool)
    in2 = np.zeros(n, dtype=bool)
    # Real clicks per detector from the pair outcomes (bunched pairs light up
    # a single detector; split pairs light up both).
    split = emitted & (outcome == kernels.SPLIT)
    both1 = emitted & (outcome == kernels.BOTH_D1)
    both2 = emitted & (outcome == kernels.BOTH_D2)
    w_in = lambda t: (t >= w0) & (t <= w1)
    in1 |= split & w_in(m1)
    in2 |= split & w_in(m2)
    in1 |= both1 & (w_in(m1) | w_in(m2))
    in2 |= both2 & (w_in(m1) | w_in(m2))
    # Lone photon from the qubit source when the pair source did not fire.
    gen_sg = _rng(cfg, input_idx, _S_SINGLES)
    lone_det = gen_sg.random(n) < 0.5
    lone_t = gen_sg.random(n) * (w1 - w0) + w0  # envelope detail irrelevant here
    lone = ~emitted
    in1 |= lone & lone_det & w_in(lone_t)
    in2 |= lone & ~lone_det & w_in(lone_t)
    return (in1 | dark1) & (in2 | dark2)


def _assemble_input_result(
    cfg: ExperimentConfig,
    label: str,
    basis: str,
    correct: int,
    counts: np.ndarray,
    n_heralds: float,
    taus: tuple[np.ndarray, np.ndarray],
    herald_stream: TagStream | None = None,
    readout_stream: TagStream | None = None,
) -> InputResult:
    n0 = counts[0, 0] + counts[1, 0]
    f = counts[correct, 0] / n0 if n0 > 0 else float("nan")
    f_err = math.sqrt(max(f * (1.0 - f), 0.0) / n0) if n0 > 0 else float("nan")
    wrong = counts[1 - correct, 0]
    ratio = counts[correct, 0] / wrong if wrong > 0 else float("inf")
    tau_c = taus[correct]
    tau_w = taus[1 - correct]
    hist_c = (
        tau_c
        if isinstance(tau_c, CoincidenceHistogram)
        else histogram_taus(tau_c, -cfg.tau_range, cfg.tau_range, cfg.bin_width)
    )
    hist_w = (
        tau_w
        if isinstance(tau_w, CoincidenceHistogram)
        else histogram_taus(tau_w, -cfg.tau_range, cfg.tau_range, cfg.bin_width)
    )
    return InputResult(
        label=label,
        basis=basis,
        fidelity=float(f),
        fidelity_err=float(f_err),
        ratio=float(ratio),
        n_heralds=float(n_heralds),
        counts=counts,
        tau_hist_correct=hist_c,
        tau_hist_wrong=hist_w,
        herald_stream=herald_stream,
        readout_stream=readout_stream,
    )


def _window_weight(t: np.ndarray, w0: float, w1: float, sigma: float) -> np.ndarray:
    """P(t + jitter falls inside [w0, w1])."""
    if sigma == 0.0:
        return ((t >= w0) & (t <= w1)).astype(float)
    s = sigma * math.sqrt(2.0)
    return 0.5 * (erf((w1 - t) / s) - erf((w0 - t) / s))


def _simpson_weights(n: int, step: float) -> np.ndarray:
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * step / 3.0


def _analytic_grid(cfg: ExperimentConfig, noise: NoiseModel, step: float = 1.0) -> np.ndarray:
    hi = cfg.window[1] + 6.0 * noise.jitter_sigma + 2.0 * step
    npts = int(round(hi / step))
    if npts % 2:
        npts += 1
    return np.linspace(0.0, hi, npts + 1)


def _teleport_input_analytic(cfg: ExperimentConfig, noise: NoiseModel, label: str) -> InputResult:
    if noise.dark_rate > 0.0:
        raise ValueError("dark counts are supported in Monte Carlo mode only")
    _, basis, correct = _INPUT_TABLE[label]
    joint, qubit = build_joint_state(label, cfg)
    w0, w1 = cfg.window

    t = _analytic_grid(cfg, noise)
    step = t[1] - t[0]
    wquad = _simpson_weights(t.size, step) * _window_weight(t, w0, w1, noise.jitter_sigma)

    psi_a = qubit.amplitude(t)
    env_b = joint.mode_b.envelope(t)
    chi = joint.state.amplitudes.reshape(2, 2, 2)
    # Photon-B side amplitudes per spin component (the joint state is a
    # product of the input qubit and the spin-B pair, so this is exact).
    qamp = np.array([qubit.alpha, qubit.beta])
    pair_amp = np.einsum("sab,a->sb", chi, np.conj(qamp)) / np.vdot(qamp, qamp)
    phase = np.stack([np.exp(-0.5j * cfg.delta * t), np.exp(0.5j * cfg.delta * t)])
    phi = np.einsum("sc,ct->st", pair_amp, phase) * env_b  # (spin, t)

    i_a = float(np.sum(wquad * np.abs(psi_a) ** 2))
    k_mat = np.einsum("t,st,ut->su", wquad, phi, np.conj(phi))
    l_vec = np.einsum("t,st,t->s", wquad, phi, np.conj(psi_a))
    m = noise.overlap
    rho_raw = 0.5 * (i_a * k_mat - m * np.outer(l_vec, np.conj(l_vec)))
    p_herald = float(np.real(np.trace(rho_raw))) * noise.herald_efficiency**2
    rho = rho_raw / np.real(np.trace(rho_raw))
    # Ensemble-averaged echo damping of the coherence (zero net weight for a
    # balanced echo, so this is the identity in the standard sequence).
    s_net = net_detuning_weight(standard_echo(cfg.t_echo, (cfg.readout, cfg.readout)))
    damp = math.exp(-0.5 * (OverhauserModel(noise.t2star).sigma * s_net) ** 2)
    rho[0, 1] *= damp
    rho[1, 0] *= damp

    p_first = float(_measure_first_prob(rho[None, :, :], basis)[0])
    eps = noise.readout_error
    p_first = (1.0 - eps) * p_first + eps * (1.0 - p_first)
    p_corr = p_first if correct == 0 else 1.0 - p_first

    n_her = cfg.trials * noise.p_exc * p_herald
    counts = np.zeros((2, cfg.periods))
    counts[correct, 0] = n_her * p_corr
    counts[1 - correct, 0] = n_her * (1.0 - p_corr)
    if basis == "z":
        p_up_base = noise.p_up_init + eps * (1.0 - 2.0 * noise.p_up_init)
    else:
        p_up_base = 0.5
    # A partner repetition is itself heralded with probability h, in which
    # case its readout reflects the steered state rather than the
    # unconditioned population.
    h = noise.p_exc * p_herald
    p_first_base = (1.0 - h) * p_up_base + h * p_first
    counts[0, 1:] = n_her * p_first_base
    counts[1, 1:] = n_her * (1.0 - p_first_base)

    hist_first, hist_second = _analytic_tau_histograms(cfg, noise, joint, qubit, basis)
    result = _assemble_input_result(cfg, label, basis, correct, counts, n_her, (hist_first, hist_second))
    # Expected-count fidelity has no sampling error; attach the binomial scale
    # of an equivalent Monte Carlo run so significance estimates stay usable.
    err = math.sqrt(max(p_corr * (1.0 - p_corr), 1e-300) / max(n_her, 1.0))
    return replace(result, fidelity=p_corr, fidelity_err=err)


def _analytic_tau_histograms(
    cfg: ExperimentConfig,
    noise: NoiseModel,
    joint: JointState,
    qubit: PhotonicQubit,
    basis: str,
) -> tuple[CoincidenceHistogram, CoincidenceHistogram]:
    """Expected per-outcome delay densities of period-0 three-folds."""
    w0, w1 = cfg.window
    t = _analytic_grid(cfg, noise)
    step = t[1] - t[0]
    nbins = int(round(2.0 * cfg.tau_range / cfg.bin_width))
    edges = -cfg.tau_range + cfg.bin_width * np.arange(nbins + 1)
    centers = 0.5 * (edges[:-1] + edges[1:])
    dist = DistinguishabilityModel(overlap=noise.overlap)
    t2g = t[:, None] - centers[None, :]
    rho, dens = heralded_spin_matrices(joint, dist, t[:, None], t2g)
    wwin = _window_weight(t, w0, w1, noise.jitter_sigma)[:, None] * _window_weight(
        t2g, w0, w1, noise.jitter_sigma
    )
    if basis == "z":
        first_raw = np.real(rho[..., 0, 0])  # unnormalized first-outcome density
    else:
        first_raw = 0.5 * np.real(rho[..., 0, 0] + rho[..., 1, 1]) + np.real(rho[..., 0, 1])
    first_raw = np.clip(first_raw, 0.0, dens)
    eps = noise.readout_error
    first = (1.0 - eps) * first_raw + eps * (dens - first_raw)
    second = dens - first
    simpson = _simpson_weights(t.size, step)
    # heralded_spin_matrices uses bare joint-state amplitudes; fold in the
    # color cross-term normalization of the photon-A wavepacket so the scale
    # matches the Monte Carlo herald rate.
    scale = (
        cfg.trials * noise.p_exc * cfg.bin_width * noise.herald_efficiency**2
        / qubit.wavepacket_norm()
    )
    q_first = np.einsum("t,tk->k", simpson, wwin * first) * scale
    q_second = np.einsum("t,tk->k", simpson, wwin * second) * scale
    # A jittered delay carries the noise of two clicks: smear by sigma*sqrt(2).
    if noise.jitter_sigma > 0.0:
        q_first = _smear_bins(q_first, centers, noise.jitter_sigma * math.sqrt(2.0))
        q_second = _smear_bins(q_second, centers, noise.jitter_sigma * math.sqrt(2.0))
    q_first = np.maximum(q_first, 0.0)
    q_second = np.maximum(q_second, 0.0)
    return (
        CoincidenceHistogram(edges, q_first),
        CoincidenceHistogram(edges, q_second),
    )


def _smear_bins(values: np.ndarray, centers: np.ndarray, sigma: float) -> np.ndarray:
    kernel = np.exp(-0.5 * ((centers - centers.mean()) / sigma) ** 2)
    kernel /= kernel.sum()
    return np.convolve(values, kernel, mode="same")


def run_teleportation(cfg: ExperimentConfig, noise: NoiseModel, mode: str = "mc") -> TeleportResult:
    """Run the heralded teleportation experiment for the configured inputs.

    Monte Carlo mode samples per-repetition trajectories and tallies
    three-fold coincidences; analytic mode computes the same statistics by
    integrating the heralded spin density over the acceptance window (counts
    become expected values).  Identical seeds give bit-identical results.
    """
    if mode not in ("mc", "analytic"):
        raise ValueError(f"unknown mode {mode!r}")
    per_input: dict[str, InputResult] = {}
    for label in cfg.input_states:
        if mode == "mc":
            per_input[label] = _teleport_input_mc(cfg, noise, label)
        else:
            per_input[label] = _teleport_input_analytic(cfg, noise, label)
    fids = [r.fidelity for r in per_input.values()]
    errs = [r.fidelity_err for r in per_input.values()]
    f_all = float(np.mean(fids))
    f_err = float(np.sqrt(np.sum(np.square(errs))) / len(errs))
    return TeleportResult(
        per_input=per_input,
        f_overall=f_all,
        f_overall_err=f_err,
        trials=cfg.trials,
        seed=cfg.seed,
        mode=mode,
    )


@dataclass(frozen=True)
class CorrelationResult:
    """Spin-photon correlations in the rotated basis vs pair detection time."""

    hist_aligned: CoincidenceHistogram  # detection times of rotated-basis "aligned" outcomes
    hist_anti: CoincidenceHistogram
    contrast: float
    contrast_phase: float
    c_z: float  # spin-color correlation contrast
    fidelity_bound: float
    expected_smear: float  # Gaussian jitter factor exp(-(delta*sigma)^2/2)
    n_pairs: float


def _fit_contrast(
    centers: np.ndarray,
    n_aligned: np.ndarray,
    n_anti: np.ndarray,
    delta: float,
    fit_range: tuple[float, float],
    bin_width: float,
) -> tuple[float, float]:
    """Weighted LSQ of the outcome fraction onto 1, cos, sin at frequency delta.

    Bin-averaging a cosine over a width-w bin scales its amplitude by
    sinc(delta*w/2); that known factor is divided back out so the returned
    contrast refers to the underlying oscillation.
    """
    total = n_aligned + n_anti
    mask = (total > 0) & (centers >= fit_range[0]) & (centers <= fit_range[1])
    t = centers[mask]
    frac = n_aligned[mask] / total[mask]
    w = total[mask]
    design = np.stack([np.ones_like(t), np.cos(delta * t), np.sin(delta * t)], axis=1)
    wd = design * w[:, None]
    coef, *_ = np.linalg.lstsq(wd.T @ design, wd.T @ frac, rcond=None)
    half = 0.5 * delta * bin_width
    sinc = math.sin(half) / half if half > 0 else 1.0
    contrast = 2.0 * math.hypot(coef[1], coef[2]) / sinc
    phase = math.atan2(-coef[2], coef[1])
    return float(contrast), float(phase)


def entanglement_correlation_run(
    cfg: ExperimentConfig, noise: NoiseModel, mode: str = "mc"
) -> CorrelationResult:
    """Rotated-basis spin-photon correlations vs pair photon detection time.

    The photon of an entangled pair is detected directly (no interference);
    conditioning the spin readout in the superposition basis on the detection
    time produces oscillations at the color splitting, smeared by detector
    jitter.  Returns the fitted contrast and the entanglement fidelity bound
    (1 + C_z) / 4 + C_rot / 2 built from the color correlation C_z and the
    rotated-basis contrast C_rot.
    """
    if mode not in ("mc", "analytic"):
        raise ValueError(f"unknown mode {mode!r}")
    input_idx = 17  # distinct substream family from the teleport inputs
    sigma = noise.jitter_sigma
    expected_smear = math.exp(-0.5 * (cfg.delta * sigma) ** 2)
    hist_hi = cfg.herald_offset + 6.0 * cfg.lifetime
    fit_range = (max(4.0 * sigma, 2.0 * cfg.bin_width), hist_hi - 4.0 * sigma)
    edges = np.arange(0.0, hist_hi + cfg.bin_width, cfg.bin_width)
    centers = 0.5 * (edges[:-1] + edges[1:])
    eps = noise.readout_error

    if mode == "analytic":
        t = np.arange(0.0, hist_hi + 6.0 * sigma, 0.5)
        env2 = np.exp(-t / cfg.lifetime) / cfg.lifetime
        p_anti_minus = 0.5 * (1.0 + np.cos(cfg.delta * t))  # rotated-basis aligned outcome
        dens_aligned = env2 * ((1.0 - eps) * p_anti_minus + eps * (1.0 - p_anti_minus))
        dens_anti = env2 - dens_aligned
        if sigma > 0.0:
            kern_t = np.arange(-5.0 * sigma, 5.0 * sigma + 0.5, 0.5)
            kern = np.exp(-0.5 * (kern_t / sigma) ** 2)
            kern /= kern.sum()
            dens_aligned = np.convolve(dens_aligned, kern, mode="same")
            dens_anti = np.convolve(dens_anti, kern, mode="same")
        # Bin-integrate exactly as the Monte Carlo histogram does.
        in_bins = np.histogram(t, bins=edges)[0]
        n_al = np.histogram(t, bins=edges, weights=dens_aligned)[0] / np.maximum(in_bins, 1)
        n_an = np.histogram(t, bins=edges, weights=dens_anti)[0] / np.maximum(in_bins, 1)
        scale = cfg.trials * noise.p_exc * cfg.bin_width
        n_al = n_al * scale
        n_an = n_an * scale
        c_z = 1.0 - 2.0 * eps
        n_pairs = cfg.trials * noise.p_exc
    else:
        n = cfg.trials
        gen_e = _rng(cfg, input_idx, _S_EMISSION)
        emitted = gen_e.random(n) < noise.p_exc
        n_em = int(emitted.sum())
        pb = kernels.PhotonParams(t0=0.0, tau=cfg.lifetime, entangled=True)
        t_true = _sample_times_batched(cfg, input_idx, _S_PAIR, n_em, pb)
        gen_j = _rng(cfg, input_idx, _S_JITTER)
        t_meas = t_true + sigma * gen_j.standard_normal(n_em)
        # Conditional spin state at detection: coherence -0.5*exp(-i*delta*t);
        # the echo leaves x-basis outcomes untouched and the balanced echo
        # cancels the Overhauser phase per trial.
        gen_s = _rng(cfg, input_idx, _S_SPIN)
        deltas = OverhauserModel(noise.t2star).sigma * gen_s.standard_normal(n_em)
        phase = _echo_phase_factor(cfg, deltas)
        coh = -0.5 * np.exp(-1j * cfg.delta * t_true) * phase
        p_minus = np.clip(0.5 - np.real(coh), 0.0, 1.0)
        gen_m = _rng(cfg, input_idx, _S_MEASURE)
        aligned = gen_m.random(n_em) < p_minus
        aligned ^= gen_m.random(n_em) < eps
        n_al, _ = np.histogram(t_meas[aligned], bins=edges)
        n_an, _ = np.histogram(t_meas[~aligned], bins=edges)
        # Color correlation run (z basis): the photon color branch is an even
        # coin and the spin follows it exactly, up to readout error.
        gen_c = _rng(cfg, input_idx, _S_DARK)
        match = np.ones(n_em, dtype=bool)
        match ^= gen_c.random(n_em) < eps
        c_z = float(2.0 * match.mean() - 1.0) if n_em else float("nan")
        n_pairs = float(n_em)

    contrast, phi = _fit_contrast(
        centers, np.asarray(n_al, float), np.asarray(n_an, float), cfg.delta, fit_range, cfg.bin_width
    )
    f_bound = 0.25 * (1.0 + c_z) + 0.5 * contrast
    return CorrelationResult(
        hist_aligned=CoincidenceHistogram(edges, np.maximum(np.asarray(n_al, float), 0.0)),
        hist_anti=CoincidenceHistogram(edges, np.maximum(np.asarray(n_an, float), 0.0)),
        contrast=contrast,
        contrast_phase=phi,
        c_z=c_z,
        fidelity_bound=f_bound,
        expected_smear=expected_smear,
        n_pairs=float(n_pairs),
    )


@dataclass(frozen=True)
class HomResult:
    """Two-photon interference statistics for parallel and orthogonal inputs."""

    visibility: float
    visibility_err: float
    center_parallel: float
    center_orthogonal: float
    ratio_parallel: float
    ratio_orthogonal: float
    twofold_parallel: TwofoldResult | None
    twofold_orthogonal: TwofoldResult | None
    n_pairs: float
    mode: str


def _hom_click_stream(
    cfg: ExperimentConfig,
    noise: NoiseModel,
    input_idx: int,
    qa: PhotonicQubit,
    qb: PhotonicQubit,
    overlap: float,
) -> TagStream:
    """Full beam-splitter click stream over cfg.trials repetition periods."""
    n = cfg.trials
    pa = kernels.PhotonParams(0.0, cfg.lifetime, qa.alpha, qa.beta)
    pb = kernels.PhotonParams(qb.mode.t0, cfg.lifetime, qb.alpha, qb.beta)
    outcome, t1, t2 = _sample_pairs_batched(cfg, input_idx, n, pa, pb, overlap)
    trials = np.arange(n, dtype=np.int64)
    base = trials * cfg.repetition
    det1 = np.where(outcome == kernels.BOTH_D2, 1, 0)
    det2 = np.where(outcome == kernels.BOTH_D1, 0, 1)
    stream = TagStream(
        detector=np.concatenate([det1, det2]),
        timestamp=np.concatenate([base + t1, base + t2]),
        trial=np.concatenate([trials, trials]),
        channel=np.zeros(2 * n),
    )
    gen_j = _rng(cfg, input_idx, _S_JITTER)
    return apply_jitter(stream, noise.jitter_sigma, gen_j)


def run_hom(
    cfg: ExperimentConfig, noise: NoiseModel, mode: str = "mc", delay: float = 0.0
) -> HomResult:
    """Two-photon interference of matched color qubits, parallel vs orthogonal.

    Parallel polarization interferes with the configured mode overlap; the
    orthogonal control switches interference off.  A nonzero ``delay`` shifts
    photon B, which renders the wavepackets distinguishable regardless of the
    overlap once the delayed-mode overlap vanishes.  The visibility is
    (C_perp - C_par) / C_perp over the center delay window.
    """
    if mode not in ("mc", "analytic"):
        raise ValueError(f"unknown mode {mode!r}")
    scfg = SourceConfig(lifetime=cfg.lifetime, delta=cfg.delta)
    qa = generate_photonic_qubit(scfg, (1.0, 1.0))
    qb = generate_photonic_qubit(scfg, (1.0, 1.0))
    window = CoincidenceWindow(-cfg.tau_range, cfg.tau_range, cfg.repetition, cfg.periods)
    if mode == "analytic":
        center_par, side = _analytic_center_side(cfg, noise, qa, qb, delay, noise.overlap)
        center_orth, _ = _analytic_center_side(cfg, noise, qa, qb, delay, 0.0)
        v = (center_orth - center_par) / center_orth
        return HomResult(
            visibility=float(v),
            visibility_err=0.0,
            center_parallel=center_par,
            center_orthogonal=center_orth,
            ratio_parallel=center_par / side,
            ratio_orthogonal=center_orth / side,
            twofold_parallel=None,
            twofold_orthogonal=None,
            n_pairs=float(cfg.trials),
            mode=mode,
        )
    qb_run = qb.delayed(delay) if delay else qb
    stream_par = _hom_click_stream(cfg, noise, 23, qa, qb_run, noise.overlap)
    stream_orth = _hom_click_stream(cfg, noise, 29, qa, qb_run, 0.0)
    two_par = correlate_twofold(stream_par, window, cfg.bin_width)
    two_orth = correlate_twofold(stream_orth, window, cfg.bin_width)
    v, v_err = (float("nan"), float("nan"))
    if two_orth.center_count > 0:
        v, v_err = hom_visibility(two_par.center_count, two_orth.center_count)
    return HomResult(
        visibility=v,
        visibility_err=v_err,
        center_parallel=two_par.center_count,
        center_orthogonal=two_orth.center_count,
        ratio_parallel=two_par.center_side_ratio,
        ratio_orthogonal=two_orth.center_side_ratio,
        twofold_parallel=two_par,
        twofold_orthogonal=two_orth,
        n_pairs=float(cfg.trials),
        mode=mode,
    )


def _analytic_center_side(
    cfg: ExperimentConfig,
    noise: NoiseModel,
    qa: PhotonicQubit,
    qb: PhotonicQubit,
    delay: float,
    overlap: float,
) -> tuple[float, float]:
    """Expected center-window coincidence count and per-period side count."""
    qb = qb.delayed(delay) if delay else qb
    t = np.arange(0.0, delay + 12.0 * cfg.lifetime, 1.0)
    step = 1.0
    a = qa.amplitude(t)
    b = qb.amplitude(t)
    pa = np.abs(a) ** 2
    pb = np.abs(b) ** 2
    w = a * np.conj(b)
    nlag = int(round(cfg.tau_range / step))
    lags = np.arange(-nlag, nlag + 1)

    def corr(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        # c(tau_k) = sum_t x(t) y(t - tau_k), tau_k = lags * step
        full = np.correlate(x, y, mode="full")  # index offset t_x - t_y
        mid = y.size - 1
        return full[mid + lags]

    i_env = corr(pa, pb) * step
    j_int = np.real(corr(w, w)) * step
    split_tau = 0.25 * (i_env + i_env[::-1]) - 0.5 * overlap * j_int
    mix = 0.5 * (pa + pb)
    side_tau = corr(mix, mix) * step  # two uncorrelated photons per period, both pairings
    if noise.jitter_sigma > 0.0:
        s = noise.jitter_sigma * math.sqrt(2.0)
        kern_t = np.arange(-5.0 * s, 5.0 * s + step, step)
        kern = np.exp(-0.5 * (kern_t / s) ** 2)
        kern /= kern.sum()
        split_tau = np.convolve(split_tau, kern, mode="same")
        side_tau = np.convolve(side_tau, kern, mode="same")
    center = float(np.sum(split_tau) * step) * cfg.trials
    side = float(np.sum(side_tau) * step) * cfg.trials
    return center, side


@dataclass(frozen=True)
class BeatResult:
    """Time-resolved emission of the two-color photonic qubit."""

    histogram: CoincidenceHistogram
    fitted_period: float
    expected_period: float
    n_photons: float
    mode: str


def run_qubit_beat(cfg: ExperimentConfig, noise: NoiseModel, mode: str = "mc") -> BeatResult:
    """Time-resolved intensity of the color qubit; beats at the color splitting."""
    if mode not in ("mc", "analytic"):
        raise ValueError(f"unknown mode {mode!r}")
    scfg = SourceConfig(lifetime=cfg.lifetime, delta=cfg.delta)
    qubit = generate_photonic_qubit(scfg, (1.0, 1.0))
    hi = 8.0 * cfg.lifetime
    edges = np.arange(0.0, hi + cfg.bin_width, cfg.bin_width)
    centers = 0.5 * (edges[:-1] + edges[1:])
    if mode == "analytic":
        from .source import beat_intensity

        t = np.arange(0.0, hi + 6.0 * noise.jitter_sigma, 0.5)
        dens = beat_intensity(qubit, t)
        if noise.jitter_sigma > 0.0:
            kern_t = np.arange(-5 * noise.jitter_sigma, 5 * noise.jitter_sigma + 0.5, 0.5)
            kern = np.exp(-0.5 * (kern_t / noise.jitter_sigma) ** 2)
            kern /= kern.sum()
            dens = np.convolve(dens, kern, mode="same")
        counts = np.interp(centers, t, dens) * cfg.trials * cfg.bin_width
    else:
        p = kernels.PhotonParams(0.0, cfg.lifetime, qubit.alpha, qubit.beta)
        times = _sample_times_batched(cfg, 31, _S_PAIR, cfg.trials, p)
        gen_j = _rng(cfg, 31, _S_JITTER)
        times = times + noise.jitter_sigma * gen_j.standard_normal(cfg.trials)
        counts, _ = np.histogram(times, bins=edges)
    envelope = np.exp(-centers / cfg.lifetime)
    expected = TWO_PI / cfg.delta
    fitted = fit_oscillation_period(
        centers, np.asarray(counts, float), (0.5 * expected, 2.0 * expected), envelope
    )
    return BeatResult(
        histogram=CoincidenceHistogram(edges, np.maximum(np.asarray(counts, float), 0.0)),
        fitted_period=float(fitted),
        expected_period=float(expected),
        n_photons=float(cfg.trials),
        mode=mode,
    )


@dataclass(frozen=True)
class G2Result:
    """Autocorrelation of one source behind a 50:50 splitter."""

    g2_zero: float
    center_count: float
    side_mean: float
    twofold: TwofoldResult
    n_periods: int


def run_g2(cfg: ExperimentConfig, noise: NoiseModel) -> G2Result:
    """Second-order autocorrelation; an ideal single-photon source has no
    same-period coincidences (g2(0) = 0), a residual two-photon emission
    probability lifts the center peak."""
    n = cfg.trials
    input_idx = 37
    scfg = SourceConfig(lifetime=cfg.lifetime, delta=cfg.delta)
    qubit = generate_photonic_qubit(scfg, (1.0, 1.0))
    p = kernels.PhotonParams(0.0, cfg.lifetime, qubit.alpha, qubit.beta)
    t_one = _sample_times_batched(cfg, input_idx, _S_PAIR, n, p)
    gen = _rng(cfg, input_idx, _S_SINGLES)
    double = gen.random(n) < noise.g2_residual
    t_extra = _sample_times_batched(cfg, input_idx, _S_DARK, int(double.sum()), p)
    det_one = (gen.random(n) < 0.5).astype(np.int8)
    det_extra = (gen.random(int(double.sum())) < 0.5).astype(np.int8)
    trials = np.arange(n, dtype=np.int64)
    base = trials * cfg.repetition
    stream = TagStream(
        detector=np.concatenate([det_one, det_extra]),
        timestamp=np.concatenate([base + t_one, base[double] + t_extra]),
        trial=np.concatenate([trials, trials[double]]),
        channel=np.zeros(n + int(double.sum())),
    )
    gen_j = _rng(cfg, input_idx, _S_JITTER)
    stream = apply_jitter(stream, noise.jitter_sigma, gen_j)
    window = CoincidenceWindow(-cfg.tau_range, cfg.tau_range, cfg.repetition, cfg.periods)
    two = correlate_twofold(stream, window, cfg.bin_width)
    side = two.side_mean
    g2 = two.center_count / side if side > 0 else float("nan")
    return G2Result(
        g2_zero=float(g2),
        center_count=two.center_count,
        side_mean=side,
        twofold=two,
        n_periods=n,
    )
