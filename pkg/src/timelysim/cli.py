"""Command-line interface.

    timelysim run <experiment.yaml | preset-name> [--scale S] [--seed N]...
                  [--periods K] [--out DIR] [--no-plots] [--summary-only]
    timelysim verify [--suite NAME] [--seed N]
    timelysim feasibility <config.yaml | preset-name>
    timelysim preset list

TIMELYSIM_OUT sets the default output directory. Exit codes: run/verify 0
on success, 1 on failure; feasibility 0 strictly-feasible, 1 infeasible,
2 inconclusive.
"""

import sys
from dataclasses import replace
from pathlib import Path

import click

from . import __version__
from .analysis import feasibility_test
from .config_io import frac_str, load_config
from .experiment import PER_PERIOD, SUMMARY, ExperimentSpec, load_experiment, run_experiment
from .policies import default_policies
from .presets import PRESET_NOTES, PRESETS, build_preset
from .verify import DEFAULT_SEED, format_results, run_suites

DEFAULT_SEEDS = (1, 2, 3)


@click.group()
@click.version_option(__version__, prog_name="timelysim")
def main():
    """Deadline-constrained wireless scheduling simulator."""


def _resolve_out(out, fallback):
    return Path(out) if out else Path(fallback)


@main.command()
@click.argument("spec")
@click.option("--scale", default="1", show_default=True,
              help="Preset scale factor (int, decimal, or fraction like 6/19).")
@click.option("--seed", "seeds", type=int, multiple=True,
              help="Seed(s); repeat for multiple paired runs.")
@click.option("--periods", type=int, default=None, help="Horizon override.")
@click.option("--out", envvar="TIMELYSIM_OUT", default=None,
              help="Output directory [env: TIMELYSIM_OUT].")
@click.option("--policy", "policies", multiple=True,
              help="Policy name(s); default is the mode's four-policy set.")
@click.option("--summary-only", is_flag=True, help="Skip per-period run CSVs.")
@click.option("--no-plots", is_flag=True, help="Skip PNG figures.")
def run(spec, scale, seeds, periods, out, policies, summary_only, no_plots):
    """Run an experiment file, or sweep a preset by name."""
    granularity = SUMMARY if summary_only else PER_PERIOD
    if spec in PRESETS:
        config = build_preset(spec, scale=scale)
        exp = ExperimentSpec(
            config=config,
            policies=tuple(policies) or default_policies(config),
            seeds=tuple(seeds) or DEFAULT_SEEDS,
            out=_resolve_out(out, f"timelysim-out/{spec}"),
            granularity=granularity,
            plots=not no_plots,
        )
    else:
        if scale != "1":
            raise click.UsageError("--scale only applies when SPEC is a preset name")
        try:
            exp = load_experiment(spec)
        except (OSError, ValueError) as e:
            raise click.ClickException(str(e))
        overrides = {}
        if policies:
            overrides["policies"] = tuple(policies)
        if seeds:
            overrides["seeds"] = tuple(seeds)
        if out:
            overrides["out"] = Path(out)
        if summary_only:
            overrides["granularity"] = SUMMARY
        if no_plots:
            overrides["plots"] = False
        if overrides:
            exp = replace(exp, **overrides)
    if periods is not None:
        exp = replace(exp, config=replace(exp.config, horizon_periods=periods))

    try:
        written = run_experiment(exp)
    except (ValueError, RuntimeError) as e:
        raise click.ClickException(str(e))
    for path in written:
        click.echo(path)


@main.command()
@click.option("--suite", default=None, help="Run a single suite by name.")
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
def verify(suite, seed):
    """Run the oracle verification suites."""
    try:
        results = run_suites(suite=suite, seed=seed)
    except ValueError as e:
        raise click.ClickException(str(e))
    click.echo(format_results(results))
    if any(not r.passed for r in results):
        sys.exit(1)


@main.command()
@click.argument("config")
@click.option("--samples", type=int, default=100_000, show_default=True,
              help="Monte-Carlo periods per subset (VBR arrivals only).")
def feasibility(config, samples):
    """Admission-control test: subset workloads vs available slots."""
    try:
        cfg = build_preset(config) if config in PRESETS else load_config(config)
        report = feasibility_test(cfg, samples=samples)
    except (OSError, ValueError) as e:
        raise click.ClickException(str(e))
    click.echo(f"{'subset':<24} {'workload':>10} {'E[idle]':>10} {'margin':>10}")
    for row in report.rows:
        subset = ",".join(str(n) for n in row.subset) or "(empty)"
        click.echo(
            f"{subset:<24} {frac_str(row.workload):>10} "
            f"{_fmt(row.idle_mean, report.exact):>10} {_fmt(row.margin, report.exact):>10}"
        )
    click.echo(f"verdict: {report.verdict}" + ("" if report.exact else " (Monte-Carlo)"))
    sys.exit({"strictly-feasible": 0, "infeasible": 1}.get(report.verdict, 2))


def _fmt(x, exact):
    return frac_str(x) if exact else f"{float(x):.4f}"


@main.group()
def preset():
    """Built-in scenario presets."""


@preset.command("list")
def preset_list():
    """List preset names with client counts and period lengths."""
    for name in sorted(PRESETS):
        config = build_preset(name)
        click.echo(
            f"{name:<24} N={config.n_clients:<4} T={config.T:<4} {PRESET_NOTES[name]}"
        )


if __name__ == "__main__":
    main()
