import math

import numpy as np
import pytest

from spinport.spin import (
    OverhauserModel,
    PulseSchedule,
    SpinDensity,
    apply_pulse,
    evolve_free,
    measure_in_basis,
    net_detuning_weight,
    run_echo,
    sample_overhauser,
    spin_down,
    spin_ket,
    spin_mixed,
    spin_up,
    standard_echo,
)

T2STAR = 1000.0
MODEL = OverhauserModel(T2STAR)


def spin_plus():
    return spin_ket([1.0, 1.0])


class TestOverhauserSampling:
    def test_mean_and_std_convention(self):
        rng = np.random.default_rng(2)
        n = 100_000
        samples = np.array([sample_overhauser(MODEL, rng) for _ in range(n)])
        sigma = math.sqrt(2.0) / T2STAR
        assert abs(samples.mean()) < 4 * sigma / math.sqrt(n)
        assert samples.std() == pytest.approx(sigma, rel=0.02)
        assert sigma == pytest.approx(math.sqrt(2) * 1e-3, rel=1e-12)

    def test_fixed_seed_reproducible(self):
        a = [sample_overhauser(MODEL, np.random.default_rng(7)) for _ in range(1)]
        b = [sample_overhauser(MODEL, np.random.default_rng(7)) for _ in range(1)]
        assert a == b


class TestFreeEvolution:
    def test_eigenstate_unchanged(self):
        for delta in (0.0, 0.01, -0.3):
            out = evolve_free(spin_up(), delta, 500.0)
            assert np.allclose(out.matrix, spin_up().matrix)

    def test_pi_phase_flips_superposition(self):
        out = evolve_free(spin_plus(), math.pi / 400.0, 400.0)
        minus = spin_ket([1.0, -1.0])
        assert np.allclose(out.matrix, minus.matrix, atol=1e-12)

    def test_negative_duration_rejected(self):
        with pytest.raises(ValueError):
            evolve_free(spin_plus(), 0.0, -1.0)

    def test_ensemble_decay_matches_gaussian_envelope(self):
        # Free decay: the Gaussian average of exp(-i*delta*t) is
        # exp(-(t/T2*)^2) with the sigma = sqrt(2)/T2* convention.
        trials = 40_000
        for factor in (0.5, 1.0, 2.0):
            t = factor * T2STAR
            sched = PulseSchedule(pulses=(), t_echo=t, readout_window=(t, t))
            out = run_echo(spin_plus(), sched, MODEL, rng=3, trials=trials)
            truth = math.exp(-((t / T2STAR) ** 2))
            mag = 2.0 * abs(out.coherence())
            s2t2 = (MODEL.sigma * t) ** 2
            var = 0.5 * (1 + math.exp(-2 * s2t2)) - math.exp(-s2t2) + 0.5 * (1 - math.exp(-2 * s2t2))
            tol = 3.0 * math.sqrt(var / trials)
            assert abs(mag - truth) <= tol

    def test_exact_ensemble_at_t2star_is_inverse_e(self):
        sched = PulseSchedule(pulses=(), t_echo=T2STAR, readout_window=(T2STAR, T2STAR))
        out = run_echo(spin_plus(), sched, MODEL, trials=None)
        assert 2.0 * abs(out.coherence()) == pytest.approx(math.exp(-1.0), abs=1e-12)


class TestPulses:
    def test_pi_about_x_flips(self):
        out = apply_pulse(spin_up(), "x", math.pi)
        assert np.allclose(out.matrix, spin_down().matrix, atol=1e-12)

    def test_two_half_pulses_compose(self):
        one = apply_pulse(apply_pulse(spin_up(), "x", math.pi / 2), "x", math.pi / 2)
        direct = apply_pulse(spin_up(), "x", math.pi)
        assert np.allclose(one.matrix, direct.matrix, atol=1e-12)

    def test_half_pi_about_y_makes_superposition(self):
        out = apply_pulse(spin_up(), "y", math.pi / 2)
        assert np.allclose(out.matrix, spin_plus().matrix, atol=1e-12)

    def test_unknown_axis_rejected(self):
        with pytest.raises(ValueError):
            apply_pulse(spin_up(), "q", math.pi)


class TestEcho:
    def test_static_detuning_refocuses_exactly(self):
        # Composition of the public operations: the echo output matches the
        # zero-detuning output for any static detuning and any initial state.
        t_echo = 13000.0
        for delta in (0.0, 1.4e-3, -3e-3, 0.02):
            for init in (spin_plus(), spin_ket([0.8, 0.6j]), spin_up()):
                out = evolve_free(init, delta, t_echo / 2)
                out = apply_pulse(out, "x", math.pi)
                out = evolve_free(out, delta, t_echo / 2)
                ref = apply_pulse(init, "x", math.pi)
                assert np.allclose(out.matrix, ref.matrix, atol=1e-12)

    def test_run_echo_refocusing_magnitude(self):
        out = run_echo(spin_plus(), standard_echo(13000.0), MODEL, rng=5, trials=5000)
        assert 2.0 * abs(out.coherence()) >= 0.999

    def test_no_echo_at_13ns_kills_coherence(self):
        sched = PulseSchedule(pulses=(), t_echo=13000.0, readout_window=(13000.0, 13000.0))
        out = run_echo(spin_plus(), sched, MODEL, trials=None)
        assert abs(out.coherence()) <= 1e-10

    def test_zero_detuning_echo_is_identity_on_coherence(self):
        zero = OverhauserModel(1e12)  # sigma ~ 0
        out = run_echo(spin_plus(), standard_echo(13000.0), zero, rng=1, trials=100)
        assert 2.0 * abs(out.coherence()) == pytest.approx(1.0, abs=1e-9)

    def test_net_detuning_weight(self):
        assert net_detuning_weight(standard_echo(13000.0)) == pytest.approx(0.0, abs=1e-12)
        free = PulseSchedule(pulses=(), t_echo=500.0, readout_window=(500.0, 500.0))
        assert net_detuning_weight(free) == pytest.approx(500.0)
        late = standard_echo(13000.0, readout_window=(13500.0, 13500.0))
        assert net_detuning_weight(late) == pytest.approx(-500.0)

    def test_purity_never_increases(self):
        sched = PulseSchedule(pulses=(), t_echo=800.0, readout_window=(800.0, 800.0))
        out = run_echo(spin_plus(), sched, MODEL, rng=9, trials=2000)
        assert out.purity() <= spin_plus().purity() + 1e-12

    def test_mc_matches_exact_average(self):
        sched = PulseSchedule(pulses=(), t_echo=700.0, readout_window=(700.0, 700.0))
        mc = run_echo(spin_plus(), sched, MODEL, rng=12, trials=60_000)
        exact = run_echo(spin_plus(), sched, MODEL, trials=None)
        assert abs(mc.coherence() - exact.coherence()) < 0.01

    def test_malformed_schedule_rejected(self):
        with pytest.raises(ValueError):
            PulseSchedule(pulses=((100.0, "x", math.pi), (50.0, "x", math.pi)), t_echo=200.0)
        with pytest.raises(ValueError):
            PulseSchedule(pulses=((100.0, "x", math.pi),), t_echo=200.0, readout_window=(50.0, 60.0))


class TestMeasurement:
    def test_up_in_z(self):
        assert measure_in_basis(spin_up(), "z") == pytest.approx((1.0, 0.0), abs=1e-12)

    def test_plus_in_x_plus(self):
        assert measure_in_basis(spin_plus(), "x+") == pytest.approx((1.0, 0.0), abs=1e-12)

    def test_minus_in_x_minus(self):
        minus = spin_ket([1.0, -1.0])
        assert measure_in_basis(minus, "x-") == pytest.approx((1.0, 0.0), abs=1e-12)

    def test_mixed_state_any_basis(self):
        for basis in ("z", "x+", "x-"):
            assert measure_in_basis(spin_mixed(), basis) == pytest.approx((0.5, 0.5), abs=1e-12)

    def test_probabilities_sum_to_one(self):
        rho = spin_ket([0.6, 0.48 + 0.64j])
        for basis in ("z", "x+", "x-"):
            p1, p2 = measure_in_basis(rho, basis)
            assert p1 + p2 == pytest.approx(1.0, abs=1e-12)


class TestInvariants:
    def test_trace_and_hermiticity_preserved(self):
        rng = np.random.default_rng(21)
        state = spin_ket([0.6, 0.8j])
        for _ in range(50):
            op = rng.integers(0, 3)
            if op == 0:
                state = evolve_free(state, rng.normal(0, 2e-3), rng.uniform(0, 2000))
            elif op == 1:
                state = apply_pulse(state, "xyz"[rng.integers(0, 3)], rng.uniform(0, 2 * math.pi))
            else:
                state = SpinDensity(0.5 * (state.matrix + state.matrix.conj().T), state.frame)
            assert abs(np.trace(state.matrix) - 1.0) < 1e-12
            assert np.max(np.abs(state.matrix - state.matrix.conj().T)) < 1e-12
