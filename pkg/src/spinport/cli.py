"""Command-line entry point: one subcommand per reproduced measurement.

Experiments: qubit (two-color beats), hom (two-photon interference),
entangle (rotated-basis spin-photon correlations), teleport (the full
heralded protocol), g2 (source autocorrelation).  Every run writes
histogram CSVs plus a summary.json carrying the fully resolved
configuration, so a run can be reproduced from its own output.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .config import ConfigError, config_hash, load_config, to_experiment
from .protocol import (
    entanglement_correlation_run,
    run_g2,
    run_hom,
    run_qubit_beat,
    run_teleportation,
    threshold_significance,
)
from .tagstream import write_histogram_csv, write_tagstream

EXPERIMENTS = ("qubit", "hom", "entangle", "teleport", "g2")

SUMMARY_SCHEMA_ID = "spinport-summary-v1"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinport",
        description="Simulate photon-to-spin teleportation between two quantum dots.",
    )
    parser.add_argument("--experiment", required=True, choices=EXPERIMENTS)
    parser.add_argument("--config", type=Path, default=None, help="TOML config file")
    parser.add_argument("--out", type=Path, required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=1, help="master seed")
    parser.add_argument("--trials", type=int, default=None, help="override trial count")
    parser.add_argument("--mode", choices=("analytic", "mc"), default="mc")
    return parser


class _Outputs:
    """Tracks written files so a failed run leaves no partial output."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.created_dir = not out_dir.exists()
        out_dir.mkdir(parents=True, exist_ok=True)
        self.paths: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.out_dir / name
        self.paths.append(p)
        return p

    def histogram(self, name: str, hist, sidecar: dict) -> None:
        p = self.path(name)
        self.paths.append(p.with_suffix(".json"))
        write_histogram_csv(p, hist, sidecar)

    def discard(self) -> None:
        for p in self.paths:
            p.unlink(missing_ok=True)
        if self.created_dir:
            try:
                self.out_dir.rmdir()
            except OSError:
                pass


def _round_floats(obj, ndigits=12):
    if isinstance(obj, float):
        return round(obj, ndigits)
    if isinstance(obj, dict):
        return {k: _round_floats(v, ndigits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v, ndigits) for v in obj]
    return obj


def _finite(x: float) -> float | None:
    return float(x) if np.isfinite(x) else None


def run_experiment(args: argparse.Namespace) -> int:
    """Execute one experiment and write its outputs; returns the exit status."""
    cfg = load_config(args.config)
    exp, noise = to_experiment(cfg, seed=args.seed, trials=args.trials)
    out = _Outputs(args.out)
    sidecar = {"seed": args.seed, "config_hash": config_hash(cfg)}
    results: dict[str, object]
    try:
        if args.experiment == "teleport":
            res = run_teleportation(exp, noise, mode=args.mode)
            per_input = {}
            for label, r in res.per_input.items():
                out.histogram(
                    f"threefold_tau_{label}_correct.csv", r.tau_hist_correct, sidecar
                )
                out.histogram(f"threefold_tau_{label}_wrong.csv", r.tau_hist_wrong, sidecar)
                if r.herald_stream is not None:
                    write_tagstream(out.path(f"tags_{label}.txt"), r.herald_stream)
                per_input[label] = {
                    "basis": r.basis,
                    "fidelity": _finite(r.fidelity),
                    "fidelity_err": _finite(r.fidelity_err),
                    "classical_ratio": _finite(r.ratio),
                    "n_heralds": r.n_heralds,
                    "counts_by_outcome_and_period": r.counts.tolist(),
                }
            significance = None
            if res.f_overall_err and np.isfinite(res.f_overall_err) and res.f_overall_err > 0:
                significance = threshold_significance(res.f_overall, res.f_overall_err)
            results = {
                "per_input": per_input,
                "f_overall": _finite(res.f_overall),
                "f_overall_err": _finite(res.f_overall_err),
                "significance_vs_classical": _finite(significance) if significance is not None else None,
            }
        elif args.experiment == "hom":
            delay = float(cfg["interference"]["delay_ps"])
            res = run_hom(exp, noise, mode=args.mode, delay=delay)
            if res.twofold_parallel is not None:
                for k, h in sorted(res.twofold_parallel.histograms.items()):
                    out.histogram(f"twofold_parallel_period{k:+d}.csv", h, sidecar)
                for k, h in sorted(res.twofold_orthogonal.histograms.items()):
                    out.histogram(f"twofold_orthogonal_period{k:+d}.csv", h, sidecar)
            results = {
                "visibility": _finite(res.visibility),
                "visibility_err": _finite(res.visibility_err),
                "center_parallel": res.center_parallel,
                "center_orthogonal": res.center_orthogonal,
                "center_side_ratio_parallel": _finite(res.ratio_parallel),
                "center_side_ratio_orthogonal": _finite(res.ratio_orthogonal),
                "delay_ps": delay,
            }
        elif args.experiment == "entangle":
            res = entanglement_correlation_run(exp, noise, mode=args.mode)
            out.histogram("correlation_aligned.csv", res.hist_aligned, sidecar)
            out.histogram("correlation_anti.csv", res.hist_anti, sidecar)
            results = {
                "contrast": _finite(res.contrast),
                "color_correlation": _finite(res.c_z),
                "fidelity_bound": _finite(res.fidelity_bound),
                "expected_jitter_smear": res.expected_smear,
                "n_pairs": res.n_pairs,
            }
        elif args.experiment == "qubit":
            res = run_qubit_beat(exp, noise, mode=args.mode)
            out.histogram("beat_intensity.csv", res.histogram, sidecar)
            results = {
                "fitted_beat_period_ps": _finite(res.fitted_period),
                "expected_beat_period_ps": res.expected_period,
                "n_photons": res.n_photons,
            }
        else:  # g2
            if args.mode == "analytic":
                raise ConfigError("the g2 experiment runs in Monte Carlo mode only")
            res = run_g2(exp, noise)
            for k, h in sorted(res.twofold.histograms.items()):
                out.histogram(f"g2_period{k:+d}.csv", h, sidecar)
            results = {
                "g2_zero": _finite(res.g2_zero),
                "center_count": res.center_count,
                "side_mean": _finite(res.side_mean),
            }

        summary = {
            "schema_id": SUMMARY_SCHEMA_ID,
            "version": __version__,
            "experiment": args.experiment,
            "mode": args.mode,
            "seed": args.seed,
            "trials": exp.trials,
            "kernel_backend": kernels.BACKEND,
            "config": cfg,
            "config_hash": config_hash(cfg),
            "results": _round_floats(results),
        }
        out.path("summary.json").write_text(
            json.dumps(summary, sort_keys=True, indent=2) + "\n"
        )
    except Exception:
        out.discard()
        raise
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return run_experiment(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
