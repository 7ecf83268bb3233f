"""Backend parity and distribution checks for the sampling kernels.

The compiled and pure-Python kernels must consume the BitGenerator in the
same order and produce bit-for-bit identical output.
"""

import math

import numpy as np
import pytest

from spinport import _kernel_py
from spinport.kernels import BOTH_D1, BOTH_D2, SPLIT, PhotonParams, sample_pair_clicks, sample_times
from spinport.tagstream import fit_oscillation_period

try:
    from spinport import _kernel
except ImportError:  # pragma: no cover - compiled extension always built in CI
    _kernel = None

DELTA = 2 * math.pi * 0.0049
LIFETIME = 650.0
ROOT_HALF = 1 / math.sqrt(2)


def bitgen(seed):
    return np.random.PCG64(np.random.SeedSequence([seed]))


PAIR_CASES = [
    # (photon A, photon B, overlap)
    ((0.0, LIFETIME, ROOT_HALF, ROOT_HALF, False), (0.0, LIFETIME, 0.0, 0.0, True), 1.0),
    ((0.0, LIFETIME, ROOT_HALF, -ROOT_HALF, False), (0.0, LIFETIME, 0.0, 0.0, True), 0.802),
    ((0.0, LIFETIME, 1.0, 0.0, False), (0.0, LIFETIME, 0.0, 1.0, False), 1.0),
    ((0.0, LIFETIME, ROOT_HALF, ROOT_HALF, False), (145.0, LIFETIME, ROOT_HALF, ROOT_HALF, False), 0.9),
    ((0.0, LIFETIME, 0.6, 0.8j, False), (0.0, 500.0, 0.8, -0.6, False), 0.5),
    ((0.0, LIFETIME, 0.0, 1.0, False), (0.0, LIFETIME, 0.0, 1.0, False), 0.0),
]


def params(spec):
    t0, tau, ab, ar, entangled = spec
    return PhotonParams(t0=t0, tau=tau, amp_blue=ab, amp_red=ar, entangled=entangled)


@pytest.mark.skipif(_kernel is None, reason="compiled kernel not built")
class TestBackendParity:
    @pytest.mark.parametrize("pa,pb,m", PAIR_CASES)
    def test_pair_clicks_bit_identical(self, pa, pb, m):
        oc1, t1a, t2a = _run_flat(_kernel, params(pa), params(pb), m)
        oc2, t1b, t2b = _run_flat(_kernel_py, params(pa), params(pb), m)
        assert np.array_equal(oc1, oc2)
        assert np.array_equal(t1a, t1b)
        assert np.array_equal(t2a, t2b)

    def test_sample_times_bit_identical(self):
        p = params((25.0, LIFETIME, ROOT_HALF, ROOT_HALF, False))
        a = _kernel.sample_times(bitgen(3), 4000, p.t0, p.tau, ROOT_HALF, 0.0, ROOT_HALF, 0.0, DELTA)
        b = _kernel_py.sample_times(bitgen(3), 4000, p.t0, p.tau, ROOT_HALF, 0.0, ROOT_HALF, 0.0, DELTA)
        assert np.array_equal(a, b)


def _run_flat(mod, pa, pb, m, seed=99, n=5000):
    bg = bitgen(seed)
    return mod.sample_pair_clicks(
        bg, n,
        pa.t0, pa.tau,
        complex(pa.amp_blue).real, complex(pa.amp_blue).imag,
        complex(pa.amp_red).real, complex(pa.amp_red).imag,
        pb.t0, pb.tau,
        complex(pb.amp_blue).real, complex(pb.amp_blue).imag,
        complex(pb.amp_red).real, complex(pb.amp_red).imag,
        bool(pb.entangled), DELTA, m,
    )


class TestSampleTimes:
    def test_exponential_moments(self):
        p = PhotonParams(t0=100.0, tau=LIFETIME, amp_blue=1.0, amp_red=0.0)
        t = sample_times(bitgen(1), 50_000, p, DELTA)
        assert t.min() >= 100.0
        assert t.mean() == pytest.approx(100.0 + LIFETIME, abs=4 * LIFETIME / math.sqrt(50_000))

    def test_beat_modulation_period(self):
        delta = 2 * math.pi * 0.00345
        p = PhotonParams(t0=0.0, tau=LIFETIME, amp_blue=ROOT_HALF, amp_red=ROOT_HALF)
        t = sample_times(bitgen(2), 200_000, p, delta)
        edges = np.arange(0.0, 3000.0, 20.0)
        counts, _ = np.histogram(t, bins=edges)
        centers = 0.5 * (edges[:-1] + edges[1:])
        period = fit_oscillation_period(
            centers, counts.astype(float), (150.0, 600.0), np.exp(-centers / LIFETIME)
        )
        assert period == pytest.approx(1000.0 / 3.45, abs=20.0)

    def test_deterministic(self):
        p = PhotonParams(t0=0.0, tau=LIFETIME, amp_blue=0.6, amp_red=0.8)
        assert np.array_equal(sample_times(bitgen(5), 100, p, DELTA), sample_times(bitgen(5), 100, p, DELTA))


class TestPairOutcomes:
    def test_identical_photons_never_split_at_full_overlap(self):
        p = PhotonParams(t0=0.0, tau=LIFETIME, amp_blue=0.0, amp_red=1.0)
        oc, _, _ = sample_pair_clicks(bitgen(4), 30_000, p, p, DELTA, 1.0)
        assert np.sum(oc == SPLIT) == 0

    def test_distinguishable_split_half(self):
        p = PhotonParams(t0=0.0, tau=LIFETIME, amp_blue=0.0, amp_red=1.0)
        oc, _, _ = sample_pair_clicks(bitgen(5), 40_000, p, p, DELTA, 0.0)
        frac = np.mean(oc == SPLIT)
        assert frac == pytest.approx(0.5, abs=3 * 0.5 / math.sqrt(40_000))

    def test_color_offset_split_probability(self):
        # Different colors on matched envelopes: overlap magnitude^2 is the
        # Lorentzian 1/(1+(delta*tau)^2), so splitting is barely suppressed.
        pa = PhotonParams(t0=0.0, tau=LIFETIME, amp_blue=1.0, amp_red=0.0)
        pb = PhotonParams(t0=0.0, tau=LIFETIME, amp_blue=0.0, amp_red=1.0)
        n = 200_000
        oc, _, _ = sample_pair_clicks(bitgen(6), n, pa, pb, DELTA, 1.0)
        expected = 0.5 * (1.0 - 1.0 / (1.0 + (DELTA * LIFETIME) ** 2))
        assert np.mean(oc == SPLIT) == pytest.approx(expected, abs=3 * 0.5 / math.sqrt(n))

    def test_entangled_partner_split_probability(self):
        # Traced color on photon B halves the effective interference.
        pa = PhotonParams(t0=0.0, tau=LIFETIME, amp_blue=ROOT_HALF, amp_red=ROOT_HALF)
        pb = PhotonParams(t0=0.0, tau=LIFETIME, entangled=True)
        n = 200_000
        m = 0.85
        oc, _, _ = sample_pair_clicks(bitgen(7), n, pa, pb, DELTA, m)
        lam = 1.0 / (1.0 + (DELTA * LIFETIME) ** 2)  # envelope color cross term
        expected = 0.5 * (1.0 - m * (1.0 + 3.0 * lam) / (2.0 * (1.0 + lam)))
        assert np.mean(oc == SPLIT) == pytest.approx(expected, abs=0.004)

    def test_bunched_outcomes_symmetric(self):
        p = PhotonParams(t0=0.0, tau=LIFETIME, amp_blue=0.0, amp_red=1.0)
        oc, _, _ = sample_pair_clicks(bitgen(8), 50_000, p, p, DELTA, 1.0)
        n1, n2 = np.sum(oc == BOTH_D1), np.sum(oc == BOTH_D2)
        assert abs(n1 - n2) < 4 * math.sqrt(n1 + n2)

    def test_rejects_bad_overlap(self):
        p = PhotonParams(t0=0.0, tau=LIFETIME)
        with pytest.raises(ValueError):
            sample_pair_clicks(bitgen(9), 10, p, p, DELTA, 1.2)
