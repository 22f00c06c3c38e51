"""Experiment execution: policy sweeps over paired seeds, CSV emission.

Output layout under the experiment's directory:

  runs/<policy>--seed<seed>.csv   per-period records (per-period granularity)
  summary.csv                     one row per (policy, seed)
  aggregate.csv                   across-seed mean and SD per policy
  debt_timeseries.png             mean total positive delivery debt curves
  nonrt_throughput.png            non-real-time throughput bars

Runs at the same seed consume identical arrival and channel streams across
policies, so cross-policy differences at a seed are paired comparisons.
Every file is deterministic: same spec, byte-identical CSVs.

Run CSV columns: period, client, r1, r2, r3, delivered, arrived,
channel_state, nonrt_delivered. Debts are end-of-period values as floats;
channel_state is the client's own state label; nonrt_delivered repeats the
period's idle-slot count on each row.
Summary columns: policy, seed, total_positive_debt_final,
nonrt_throughput_mean.
"""

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import yaml

from .config_io import config_from_dict, load_config
from .engine import run_simulation
from .model import validate
from .policies import POLICIES
from .presets import build_preset

PER_PERIOD = "per-period"
SUMMARY = "summary"


@dataclass(frozen=True)
class ExperimentSpec:
    config: object
    policies: tuple
    seeds: tuple
    out: Path
    granularity: str = PER_PERIOD
    plots: bool = True

    def problems(self):
        out = []
        if not self.policies:
            out.append("at least one policy required")
        if len(set(self.policies)) != len(self.policies):
            out.append("duplicate policy in list")
        if not self.seeds:
            out.append("at least one seed required")
        if self.granularity not in (PER_PERIOD, SUMMARY):
            out.append(f"unknown granularity {self.granularity!r}")
        for name in self.policies:
            if name not in POLICIES:
                out.append(f"unknown policy {name!r}")
            else:
                out.extend(POLICIES[name].compatibility_problems(self.config))
        return out


def load_experiment(path):
    """Experiment YAML: config (inline mapping or a path relative to the
    experiment file), policies, seeds, and optional out / periods /
    granularity / plots."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        try:
            raw = yaml.safe_load(fh)
        except yaml.YAMLError as e:
            raise ValueError(f"{path}: parse error: {e}") from e
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: expected a mapping at the top level")

    conf = raw.get("config")
    if isinstance(conf, str):
        config = load_config(path.parent / conf)
    elif isinstance(conf, dict) and "preset" in conf:
        config = build_preset(str(conf["preset"]), scale=conf.get("scale", 1))
    elif isinstance(conf, dict):
        config = config_from_dict(conf)
        errors = [d for d in validate(config) if d.severity == "error"]
        if errors:
            listing = "\n  ".join(str(d) for d in errors)
            raise ValueError(f"{path}: invalid config:\n  {listing}")
    else:
        raise ValueError(f"{path}: 'config' must be a mapping or a file path")

    if "periods" in raw:
        config = replace(config, horizon_periods=int(raw["periods"]))
    spec = ExperimentSpec(
        config=config,
        policies=tuple(raw.get("policies", ())),
        seeds=tuple(int(s) for s in raw.get("seeds", ())),
        out=Path(raw.get("out", path.parent / (path.stem + "-out"))),
        granularity=str(raw.get("granularity", PER_PERIOD)),
        plots=bool(raw.get("plots", True)),
    )
    problems = spec.problems()
    if problems:
        raise ValueError(f"{path}: " + "; ".join(problems))
    return spec


def _open_csv(path):
    return open(path, "w", encoding="utf-8", newline="")


def _write_run_csv(path, series):
    with _open_csv(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(
            ["period", "client", "r1", "r2", "r3", "delivered", "arrived",
             "channel_state", "nonrt_delivered"]
        )
        r1 = series.debt_floats("r1")
        r2 = series.debt_floats("r2")
        r3 = series.debt_floats("r3")
        for k in range(len(series)):
            labels = series.channel_labels[k]
            nonrt = int(series.nonrt_delivered[k])
            for i, cid in enumerate(series.client_ids):
                w.writerow(
                    [k, cid, repr(float(r1[k, i])), repr(float(r2[k, i])),
                     repr(float(r3[k, i])), int(series.delivered[k, i]),
                     int(series.arrived[k, i]), labels[i], nonrt]
                )


def _write_summary(path, rows):
    with _open_csv(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["policy", "seed", "total_positive_debt_final", "nonrt_throughput_mean"])
        for policy, seed, debt, nonrt in rows:
            w.writerow([policy, seed, repr(float(debt)), repr(float(nonrt))])


def _write_aggregate(path, policies, rows):
    with _open_csv(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(
            ["policy", "runs", "total_positive_debt_mean", "total_positive_debt_sd",
             "nonrt_throughput_mean", "nonrt_throughput_sd"]
        )
        for policy in policies:
            debts = np.array([r[2] for r in rows if r[0] == policy])
            nonrt = np.array([r[3] for r in rows if r[0] == policy])
            sd = (float(debts.std(ddof=1)), float(nonrt.std(ddof=1))) \
                if len(debts) > 1 else (0.0, 0.0)
            w.writerow(
                [policy, len(debts), repr(float(debts.mean())), repr(sd[0]),
                 repr(float(nonrt.mean())), repr(sd[1])]
            )


def run_experiment(spec):
    """Run every (policy, seed) pair and write the output tree; returns the
    list of written paths."""
    problems = spec.problems()
    if problems:
        raise ValueError("; ".join(problems))
    out = Path(spec.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    summary_rows = []
    debt_curves = {}  # policy -> list of per-seed total positive debt arrays

    if spec.granularity == PER_PERIOD:
        (out / "runs").mkdir(exist_ok=True)
    for policy in spec.policies:
        for seed in spec.seeds:
            series = run_simulation(spec.config, policy, seed=seed)
            if spec.granularity == PER_PERIOD:
                path = out / "runs" / f"{policy}--seed{seed}.csv"
                _write_run_csv(path, series)
                written.append(path)
            total = series.total_positive_debt()
            summary_rows.append(
                (policy, seed, float(total[-1]), float(series.nonrt_delivered.mean()))
            )
            debt_curves.setdefault(policy, []).append(total)

    summary = out / "summary.csv"
    _write_summary(summary, summary_rows)
    written.append(summary)
    aggregate = out / "aggregate.csv"
    _write_aggregate(aggregate, spec.policies, summary_rows)
    written.append(aggregate)

    if spec.plots:
        from .plotting import debt_timeseries_figure, nonrt_throughput_figure

        fig1 = out / "debt_timeseries.png"
        debt_timeseries_figure(debt_curves, spec.policies, fig1)
        fig2 = out / "nonrt_throughput.png"
        nonrt_throughput_figure(summary_rows, spec.policies, fig2)
        written.extend([fig1, fig2])
    return written
