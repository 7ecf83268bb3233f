"""Detection-event streams and coincidence statistics.

Tags are stored column-wise (detector, timestamp, trial, channel) so that
counting is a pure vectorized fold: it is permutation-invariant over the
input order and may be sharded by trial and merged.

Readout-channel convention: the spin readout is detected on the same two
detectors as the herald photons, and the detector id encodes the measured
spin outcome (d1 = first basis state, d2 = second).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .interference import CoincidenceWindow

HISTOGRAM_SCHEMA_ID = "spinport-histogram-v1"
TAGSTREAM_SCHEMA_ID = "spinport-tags-v1"

CHANNEL_NAMES = ("herald", "readout")
DETECTOR_NAMES = ("d1", "d2")


@dataclass(frozen=True)
class TagRecord:
    """One detection event."""

    detector: str  # "d1" | "d2"
    timestamp_ps: float
    trial: int
    channel: str  # "herald" | "readout"

    def __post_init__(self) -> None:
        if self.detector not in DETECTOR_NAMES:
            raise ValueError(f"unknown detector {self.detector!r}")
        if self.channel not in CHANNEL_NAMES:
            raise ValueError(f"unknown channel {self.channel!r}")
        if not math.isfinite(self.timestamp_ps):
            raise ValueError("timestamp must be finite")
        if self.trial < 0:
            raise ValueError("trial index must be nonnegative")


@dataclass(frozen=True)
class TagStream:
    """Column-wise stream of detection events."""

    detector: np.ndarray  # int8, 0 = d1, 1 = d2
    timestamp: np.ndarray  # float64 ps
    trial: np.ndarray  # int64
    channel: np.ndarray  # int8, 0 = herald, 1 = readout

    def __post_init__(self) -> None:
        det = np.asarray(self.detector, dtype=np.int8)
        ts = np.asarray(self.timestamp, dtype=np.float64)
        tr = np.asarray(self.trial, dtype=np.int64)
        ch = np.asarray(self.channel, dtype=np.int8)
        if not (det.shape == ts.shape == tr.shape == ch.shape):
            raise ValueError("tag stream columns must have equal length")
        for name, arr in (("detector", det), ("channel", ch)):
            if arr.size and (arr.min() < 0 or arr.max() > 1):
                raise ValueError(f"{name} codes must be 0 or 1")
        for arr in (det, ts, tr, ch):
            arr.setflags(write=False)
        object.__setattr__(self, "detector", det)
        object.__setattr__(self, "timestamp", ts)
        object.__setattr__(self, "trial", tr)
        object.__setattr__(self, "channel", ch)

    def __len__(self) -> int:
        return self.timestamp.size

    @classmethod
    def empty(cls) -> "TagStream":
        z = np.zeros(0)
        return cls(z, z, z, z)

    @classmethod
    def from_records(cls, records) -> "TagStream":
        det = [DETECTOR_NAMES.index(r.detector) for r in records]
        ts = [r.timestamp_ps for r in records]
        tr = [r.trial for r in records]
        ch = [CHANNEL_NAMES.index(r.channel) for r in records]
        return cls(np.array(det), np.array(ts), np.array(tr), np.array(ch))

    def to_records(self) -> list[TagRecord]:
        return [
            TagRecord(DETECTOR_NAMES[d], float(t), int(n), CHANNEL_NAMES[c])
            for d, t, n, c in zip(self.detector, self.timestamp, self.trial, self.channel)
        ]

    def select(self, channel: int | None = None, detector: int | None = None) -> "TagStream":
        mask = np.ones(len(self), dtype=bool)
        if channel is not None:
            mask &= self.channel == channel
        if detector is not None:
            mask &= self.detector == detector
        return TagStream(self.detector[mask], self.timestamp[mask], self.trial[mask], self.channel[mask])

    def sorted_by_time(self) -> "TagStream":
        order = np.argsort(self.timestamp, kind="stable")
        return TagStream(
            self.detector[order], self.timestamp[order], self.trial[order], self.channel[order]
        )


def concat_streams(*streams: TagStream) -> TagStream:
    return TagStream(
        np.concatenate([s.detector for s in streams]),
        np.concatenate([s.timestamp for s in streams]),
        np.concatenate([s.trial for s in streams]),
        np.concatenate([s.channel for s in streams]),
    )


def apply_jitter(stream: TagStream, sigma: float, rng: np.random.Generator) -> TagStream:
    """Shift every timestamp by an independent Gaussian of std sigma, then resort."""
    if sigma < 0.0:
        raise ValueError("jitter sigma must be nonnegative")
    if sigma == 0.0:
        return stream
    shifted = stream.timestamp + sigma * rng.standard_normal(len(stream))
    jittered = TagStream(stream.detector, shifted, stream.trial, stream.channel)
    return jittered.sorted_by_time()


@dataclass(frozen=True)
class CoincidenceHistogram:
    """Binned coincidence counts for one repetition period."""

    bin_edges: np.ndarray  # ps, strictly increasing
    counts: np.ndarray
    window: CoincidenceWindow | None = None
    period: int | None = None

    def __post_init__(self) -> None:
        edges = np.asarray(self.bin_edges, dtype=np.float64)
        counts = np.asarray(self.counts, dtype=np.float64)
        if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
            raise ValueError("bin edges must be strictly increasing")
        if counts.shape != (edges.size - 1,):
            raise ValueError("counts length must match bin count")
        if counts.size and counts.min() < 0:
            raise ValueError("counts must be nonnegative")
        edges.setflags(write=False)
        counts.setflags(write=False)
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "counts", counts)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    @property
    def total(self) -> float:
        return float(self.counts.sum())


@dataclass(frozen=True)
class TwofoldResult:
    """Per-period delay histograms between the two detectors."""

    histograms: dict[int, CoincidenceHistogram]
    center_count: float
    side_counts: dict[int, float]
    pair_count: int  # total pairs binned across all periods

    @property
    def side_mean(self) -> float:
        if not self.side_counts:
            return float("nan")
        return float(np.mean(list(self.side_counts.values())))

    @property
    def center_side_ratio(self) -> float:
        side = self.side_mean
        return float(self.center_count / side) if side > 0 else float("nan")


def _gather_pairs(t1s: np.ndarray, t2s: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Delay values t1 - t2 for every pair with the delay inside [lo, hi]."""
    left = np.searchsorted(t2s, t1s - hi, side="left")
    right = np.searchsorted(t2s, t1s - lo, side="right")
    counts = right - left
    total = int(counts.sum())
    if total == 0:
        return np.zeros(0)
    flat = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts) + np.repeat(left, counts)
    return np.repeat(t1s, counts) - t2s[flat]


def correlate_twofold(
    stream: TagStream, window: CoincidenceWindow, bin_width: float = 50.0
) -> TwofoldResult:
    """Bin detector-1 x detector-2 delays, folded by the repetition period.

    Every (d1, d2) pair whose delay lands within [lower, upper] of a multiple
    k*T0 (|k| up to window.periods) is booked into the period-k histogram;
    the center-window integral (k = 0) is reported separately.
    """
    t1s = np.sort(stream.timestamp[stream.detector == 0])
    t2s = np.sort(stream.timestamp[stream.detector == 1])
    nbins = max(1, int(round((window.upper - window.lower) / bin_width)))
    edges = window.lower + (window.upper - window.lower) * np.arange(nbins + 1) / nbins
    histograms: dict[int, CoincidenceHistogram] = {}
    side_counts: dict[int, float] = {}
    center = 0.0
    pair_count = 0
    for k in range(-window.periods, window.periods + 1):
        shift = k * window.period
        taus = _gather_pairs(t1s, t2s, window.lower + shift, window.upper + shift) - shift
        counts, _ = np.histogram(taus, bins=edges)
        histograms[k] = CoincidenceHistogram(edges, counts, window=window, period=k)
        pair_count += taus.size
        if k == 0:
            center = float(taus.size)
        else:
            side_counts[k] = float(taus.size)
    return TwofoldResult(histograms, center, side_counts, pair_count)


@dataclass(frozen=True)
class ThreefoldResult:
    """Three-fold coincidences: herald pair plus a readout click k periods later."""

    counts: np.ndarray  # shape (2, periods): [outcome, period]
    tau_first: np.ndarray  # herald delays t_d1 - t_d2 for period-0 first-outcome events
    tau_second: np.ndarray
    herald_trials: np.ndarray
    n_heralds: int


def _first_click_per_trial(trials: np.ndarray, times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.lexsort((times, trials))
    trials = trials[order]
    times = times[order]
    uniq, first = np.unique(trials, return_index=True)
    return uniq, times[first]


def correlate_threefold(
    herald_stream: TagStream, readout_stream: TagStream, periods: int
) -> ThreefoldResult:
    """Count (spin outcome, period) three-folds from trial-indexed streams.

    A herald is a trial carrying at least one click on each detector in the
    herald stream; the earliest click per detector defines the herald pair.
    Readout clicks pair with heralds k = 0 .. periods-1 repetitions later;
    the readout detector encodes the measured outcome.
    """
    if periods < 1:
        raise ValueError("periods must be at least 1")
    h1_trials, h1_times = _first_click_per_trial(
        herald_stream.trial[herald_stream.detector == 0],
        herald_stream.timestamp[herald_stream.detector == 0],
    )
    h2_trials, h2_times = _first_click_per_trial(
        herald_stream.trial[herald_stream.detector == 1],
        herald_stream.timestamp[herald_stream.detector == 1],
    )
    common, i1, i2 = np.intersect1d(h1_trials, h2_trials, return_indices=True)
    tau = h1_times[i1] - h2_times[i2]

    # Outcome of the first readout click per trial (detector encodes outcome).
    order = np.lexsort((readout_stream.timestamp, readout_stream.trial))
    tr_sorted = readout_stream.trial[order]
    ro_trials, first_idx = np.unique(tr_sorted, return_index=True)
    ro_outcome = readout_stream.detector[order][first_idx]

    size = int(max(common.max() if common.size else 0, ro_trials.max() if ro_trials.size else 0)) + 1
    lookup = np.full(size + periods + 1, -1, dtype=np.int8)
    lookup[ro_trials] = ro_outcome

    counts = np.zeros((2, periods), dtype=np.int64)
    tau_by_outcome = (np.zeros(0), np.zeros(0))
    for k in range(periods):
        oc = lookup[common + k]  # -1 where no readout click exists
        counts[0, k] = int(np.sum(oc == 0))
        counts[1, k] = int(np.sum(oc == 1))
        if k == 0:
            tau_by_outcome = (tau[oc == 0], tau[oc == 1])
    return ThreefoldResult(
        counts=counts,
        tau_first=tau_by_outcome[0],
        tau_second=tau_by_outcome[1],
        herald_trials=common,
        n_heralds=int(common.size),
    )


def histogram_taus(
    taus: np.ndarray, lower: float, upper: float, bin_width: float
) -> CoincidenceHistogram:
    nbins = max(1, int(round((upper - lower) / bin_width)))
    edges = lower + (upper - lower) * np.arange(nbins + 1) / nbins
    counts, _ = np.histogram(taus, bins=edges)
    return CoincidenceHistogram(edges, counts)


def fit_oscillation_period(
    centers: np.ndarray,
    counts: np.ndarray,
    period_bounds: tuple[float, float],
    envelope: np.ndarray | None = None,
) -> float:
    """Estimate the oscillation period of a binned modulated histogram.

    The known envelope is divided out, the mean removed, and the spectral
    amplitude |sum y * exp(i*omega*t)| maximized over a two-stage frequency
    grid inside 2*pi/period_bounds.
    """
    centers = np.asarray(centers, dtype=np.float64)
    y = np.asarray(counts, dtype=np.float64).copy()
    if envelope is not None:
        env = np.asarray(envelope, dtype=np.float64)
        mask = env > env.max() * 1e-6
        y = np.where(mask, y / np.where(mask, env, 1.0), 0.0)
        centers = centers[mask]
        y = y[mask]
    if y.size < 4:
        raise ValueError("not enough bins to fit an oscillation")
    y = y - y.mean()
    p_lo, p_hi = period_bounds
    if not 0.0 < p_lo < p_hi:
        raise ValueError("period bounds must satisfy 0 < lo < hi")

    def best(omegas: np.ndarray) -> float:
        score = np.abs(np.exp(1j * np.outer(omegas, centers)) @ y)
        return float(omegas[int(np.argmax(score))])

    w_lo, w_hi = 2.0 * math.pi / p_hi, 2.0 * math.pi / p_lo
    w1 = best(np.linspace(w_lo, w_hi, 800))
    span = (w_hi - w_lo) / 800.0
    w2 = best(np.linspace(w1 - 2 * span, w1 + 2 * span, 800))
    return 2.0 * math.pi / w2


def write_histogram_csv(path, hist: CoincidenceHistogram, sidecar: dict | None = None) -> None:
    """Write a histogram CSV plus a JSON sidecar with run metadata."""
    path = Path(path)
    lines = ["bin_start_ps,bin_end_ps,count"]
    for lo, hi, c in zip(hist.bin_edges[:-1], hist.bin_edges[1:], hist.counts):
        count = int(c) if float(c).is_integer() else float(c)
        lines.append(f"{float(lo)!r},{float(hi)!r},{count}")
    path.write_text("\n".join(lines) + "\n")
    meta = {
        "schema_id": HISTOGRAM_SCHEMA_ID,
        "period": hist.period,
        "window": None
        if hist.window is None
        else {
            "lower_ps": hist.window.lower,
            "upper_ps": hist.window.upper,
            "period_ps": hist.window.period,
            "periods": hist.window.periods,
        },
    }
    if sidecar:
        meta.update(sidecar)
    path.with_suffix(".json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")


def write_tagstream(path, stream: TagStream) -> None:
    """One record per line: detector,timestamp_ps,trial,channel (integer ps)."""
    path = Path(path)
    lines = []
    for d, t, n, c in zip(stream.detector, stream.timestamp, stream.trial, stream.channel):
        lines.append(f"{DETECTOR_NAMES[d]},{int(round(t))},{int(n)},{CHANNEL_NAMES[c]}")
    path.write_text("\n".join(lines) + ("\n" if lines else ""))


def read_tagstream(path) -> TagStream:
    det, ts, tr, ch = [], [], [], []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        d, t, n, c = line.split(",")
        det.append(DETECTOR_NAMES.index(d))
        ts.append(float(t))
        tr.append(int(n))
        ch.append(CHANNEL_NAMES.index(c))
    return TagStream(np.array(det), np.array(ts), np.array(tr), np.array(ch))
