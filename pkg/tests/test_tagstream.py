import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinport.interference import CoincidenceWindow
from spinport.tagstream import (
    CoincidenceHistogram,
    TagRecord,
    TagStream,
    apply_jitter,
    correlate_threefold,
    correlate_twofold,
    fit_oscillation_period,
    read_tagstream,
    write_histogram_csv,
    write_tagstream,
)

T0 = 13100.0
WINDOW = CoincidenceWindow(-1200.0, 1200.0, T0, 3)


def stream_from(dets, times, trials=None, channel=0):
    n = len(dets)
    return TagStream(
        detector=np.array(dets),
        timestamp=np.array(times, dtype=float),
        trial=np.array(trials if trials is not None else [0] * n),
        channel=np.full(n, channel),
    )


class TestApplyJitter:
    def test_zero_sigma_is_identity(self):
        s = stream_from([0, 1, 0], [5.0, 9.0, 100.0])
        out = apply_jitter(s, 0.0, np.random.default_rng(0))
        assert out is s

    def test_shift_statistics(self):
        n = 50_000
        s = stream_from([0] * n, np.zeros(n))
        out = apply_jitter(s, 60.0, np.random.default_rng(1))
        assert out.timestamp.std() == pytest.approx(60.0, rel=0.03)
        assert abs(out.timestamp.mean()) < 4 * 60.0 / math.sqrt(n)

    def test_fixed_seed_reproducible(self):
        s = stream_from([0, 1] * 50, np.arange(100.0))
        a = apply_jitter(s, 60.0, np.random.default_rng(9))
        b = apply_jitter(s, 60.0, np.random.default_rng(9))
        assert np.array_equal(a.timestamp, b.timestamp)

    def test_output_sorted(self):
        s = stream_from([0, 1, 0, 1], [400.0, 1.0, 200.0, 300.0])
        out = apply_jitter(s, 5.0, np.random.default_rng(2))
        assert np.all(np.diff(out.timestamp) >= 0)


class TestCorrelateTwofold:
    def test_hand_built_pairs(self):
        # d1 clicks at 0 and T0+100; d2 click at 50:
        # delays -50 (period 0) and T0+50 (period +1).
        s = stream_from([0, 0, 1], [0.0, T0 + 100.0, 50.0])
        res = correlate_twofold(s, WINDOW, bin_width=100.0)
        assert res.center_count == 1
        assert res.side_counts[1] == 1
        assert sum(res.side_counts.values()) == 1
        assert res.histograms[0].total == 1
        hist = res.histograms[0]
        idx = np.searchsorted(hist.bin_edges, -50.0, side="right") - 1
        assert hist.counts[idx] == 1

    def test_pair_conservation_against_bruteforce(self):
        rng = np.random.default_rng(3)
        n = 300
        dets = rng.integers(0, 2, n)
        times = rng.uniform(0, 8 * T0, n)
        s = stream_from(dets, times)
        res = correlate_twofold(s, WINDOW, bin_width=50.0)
        brute = 0
        t1s = times[dets == 0]
        t2s = times[dets == 1]
        for a in t1s:
            for b in t2s:
                for k in range(-WINDOW.periods, WINDOW.periods + 1):
                    tau = a - b - k * T0
                    if WINDOW.lower <= tau <= WINDOW.upper:
                        brute += 1
        assert res.pair_count == brute
        total_binned = sum(h.total for h in res.histograms.values())
        assert total_binned == brute

    def test_empty_stream(self):
        res = correlate_twofold(stream_from([], [], []), WINDOW)
        assert res.pair_count == 0
        assert res.center_count == 0
        assert all(h.total == 0 for h in res.histograms.values())

    def test_permutation_invariance(self):
        rng = np.random.default_rng(4)
        n = 500
        dets = rng.integers(0, 2, n)
        times = rng.uniform(0, 5 * T0, n)
        s1 = stream_from(dets, times)
        perm = rng.permutation(n)
        s2 = stream_from(dets[perm], times[perm])
        r1 = correlate_twofold(s1, WINDOW)
        r2 = correlate_twofold(s2, WINDOW)
        assert r1.center_count == r2.center_count
        for k in r1.histograms:
            assert np.array_equal(r1.histograms[k].counts, r2.histograms[k].counts)


class TestCorrelateThreefold:
    def herald(self, trials):
        dets, times, tr = [], [], []
        for t in trials:
            dets += [0, 1]
            times += [t * T0 + 100.0, t * T0 + 150.0]
            tr += [t, t]
        return stream_from(dets, times, tr)

    def readout(self, outcome_by_trial):
        trials = sorted(outcome_by_trial)
        return stream_from(
            [outcome_by_trial[t] for t in trials],
            [t * T0 + 13000.0 for t in trials],
            trials,
            channel=1,
        )

    def test_no_readout_clicks(self):
        res = correlate_threefold(self.herald([2, 5]), stream_from([], [], []), periods=4)
        assert res.counts.sum() == 0
        assert res.n_heralds == 2

    def test_period_assignment(self):
        heralds = self.herald([3])
        readouts = self.readout({3: 0, 4: 1, 5: 0, 9: 1})
        res = correlate_threefold(heralds, readouts, periods=4)
        assert res.counts[0, 0] == 1  # same trial, outcome up
        assert res.counts[1, 1] == 1  # next trial, outcome down
        assert res.counts[0, 2] == 1
        assert res.counts.sum() == 3  # trial 9 is beyond the period range

    def test_sum_matches_available_clicks(self):
        trials = [1, 4, 6]
        heralds = self.herald(trials)
        readouts = self.readout({t: (t % 2) for t in range(12)})
        periods = 5
        res = correlate_threefold(heralds, readouts, periods)
        expected = sum(1 for h in trials for k in range(periods) if (h + k) < 12)
        assert res.counts.sum() == expected

    def test_herald_requires_both_detectors(self):
        s = stream_from([0, 0], [10.0, 20.0], [0, 0])
        res = correlate_threefold(s, self.readout({0: 0}), periods=2)
        assert res.n_heralds == 0

    def test_tau_sign_convention(self):
        heralds = self.herald([0])  # d1 at +100, d2 at +150
        res = correlate_threefold(heralds, self.readout({0: 0}), periods=1)
        assert res.tau_first[0] == pytest.approx(-50.0)


class TestExports:
    def test_histogram_csv_format(self, tmp_path):
        hist = CoincidenceHistogram(np.array([0.0, 50.0, 100.0]), np.array([3, 7]), WINDOW, 0)
        path = tmp_path / "h.csv"
        write_histogram_csv(path, hist, {"seed": 5, "config_hash": "abc"})
        lines = path.read_text().splitlines()
        assert lines[0] == "bin_start_ps,bin_end_ps,count"
        assert lines[1] == "0.0,50.0,3"
        meta = json.loads((tmp_path / "h.json").read_text())
        assert meta["schema_id"] == "spinport-histogram-v1"
        assert meta["seed"] == 5
        assert meta["period"] == 0
        assert meta["window"]["period_ps"] == T0

    def test_tagstream_roundtrip_integer_ps(self, tmp_path):
        s = stream_from([0, 1], [100.6, 2000.2], [0, 3], channel=1)
        path = tmp_path / "tags.txt"
        write_tagstream(path, s)
        text = path.read_text()
        assert "d1,101,0,readout" in text
        back = read_tagstream(path)
        assert np.array_equal(back.detector, s.detector)
        assert np.array_equal(back.trial, s.trial)
        assert np.allclose(back.timestamp, [101.0, 2000.0])

    def test_record_roundtrip(self):
        recs = [TagRecord("d1", 10.0, 0, "herald"), TagRecord("d2", 20.0, 1, "readout")]
        s = TagStream.from_records(recs)
        assert s.to_records() == recs

    def test_record_validation(self):
        with pytest.raises(ValueError):
            TagRecord("d3", 1.0, 0, "herald")
        with pytest.raises(ValueError):
            TagRecord("d1", 1.0, -1, "herald")


class TestOscillationFit:
    @given(st.floats(min_value=170.0, max_value=260.0), st.integers(0, 10_000))
    @settings(max_examples=10, deadline=None)
    def test_recovers_known_period(self, period, seed):
        rng = np.random.default_rng(seed)
        edges = np.arange(-1200.0, 1250.0, 50.0)
        centers = 0.5 * (edges[:-1] + edges[1:])
        envelope = np.exp(-np.abs(centers) / 650.0)
        truth = envelope * (1.0 - np.cos(2 * math.pi * centers / period))
        noisy = rng.poisson(truth * 400.0).astype(float)
        fitted = fit_oscillation_period(centers, noisy, (100.0, 400.0), envelope)
        assert fitted == pytest.approx(period, abs=25.0)

    def test_rejects_degenerate_input(self):
        with pytest.raises(ValueError):
            fit_oscillation_period(np.array([0.0, 1.0]), np.array([1.0, 2.0]), (10.0, 20.0))
