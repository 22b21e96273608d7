"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 filter/simulation
divergence, 4 missing artifact (dataset, checkpoint, report).
"""

from __future__ import annotations

import functools
import json
import logging
import sys
from pathlib import Path

import click

from ..exceptions import (
    ConfigError,
    FilterDivergedError,
    MissingArtifactError,
    SimulationDivergedError,
)
from .config import ExperimentConfig
from .reports import merge_reports, plot_report, read_report, write_report
from .scenarios import get_scenario, scenario_names

EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_MISSING = 4


def _exit_codes(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (ConfigError, KeyError, ValueError) as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
        except (FilterDivergedError, SimulationDivergedError) as exc:
            click.echo(f"divergence: {exc}", err=True)
            sys.exit(EXIT_DIVERGENCE)
        except (MissingArtifactError, FileNotFoundError) as exc:
            click.echo(f"missing artifact: {exc}", err=True)
            sys.exit(EXIT_MISSING)
    return wrapper


def _load_config(config_path: str | None, scenario: str | None) -> ExperimentConfig:
    if (config_path is None) == (scenario is None):
        raise ConfigError("provide exactly one of --config or --scenario")
    if config_path is not None:
        return ExperimentConfig.from_yaml(config_path)
    return get_scenario(scenario)


config_option = click.option("--config", "-c", "config_path", type=click.Path(),
                             default=None, help="YAML experiment configuration.")
scenario_option = click.option("--scenario", "-s", default=None,
                               help="Name of a built-in scenario.")
out_option = click.option("--out", "-o", "out_dir", type=click.Path(), required=True,
                          help="Experiment directory (datasets, checkpoints, reports).")


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Log progress to stderr.")
def main(verbose: bool):
    """Reproducible state-estimation experiments."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


@main.command()
def scenarios():
    """List built-in scenario names."""
    for name in scenario_names():
        click.echo(name)


@main.command()
@config_option
@scenario_option
@out_option
@_exit_codes
def generate(config_path, scenario, out_dir):
    """Simulate and write the train/validation/test dataset files."""
    from .runner import generate_experiment

    cfg = _load_config(config_path, scenario)
    manifest = generate_experiment(cfg, out_dir)
    click.echo(f"wrote {manifest}")


@main.command()
@config_option
@scenario_option
@out_option
@click.option("--methods", default=None, help="Comma-separated subset to train.")
@_exit_codes
def train(config_path, scenario, out_dir, methods):
    """Train the learnable methods; writes checkpoints and training curves."""
    from .runner import train_experiment

    cfg = _load_config(config_path, scenario)
    selected = methods.split(",") if methods else None
    results = train_experiment(cfg, out_dir, methods=selected)
    for (point, method), path in results.items():
        click.echo(f"{method} @ 1/r^2={point:g} dB -> {path}")


@main.command("eval")
@config_option
@scenario_option
@out_option
@click.option("--methods", default=None, help="Comma-separated subset to evaluate.")
@click.option("--report", "report_path", type=click.Path(), default=None,
              help="Report CSV path (default <out>/report.csv).")
@_exit_codes
def eval_cmd(config_path, scenario, out_dir, methods, report_path):
    """Evaluate methods on the test split; one report row per (method, noise)."""
    from .runner import eval_experiment

    cfg = _load_config(config_path, scenario)
    selected = methods.split(",") if methods else None
    rows = eval_experiment(cfg, out_dir, methods=selected)
    report_path = report_path or str(Path(out_dir) / "report.csv")
    write_report(rows, report_path)
    click.echo(f"wrote {report_path} ({len(rows)} rows)")


@main.command()
@click.argument("reports", nargs=-1, required=True, type=click.Path())
@click.option("--out", "-o", "merged_path", type=click.Path(), required=True,
              help="Merged long-format CSV.")
@click.option("--plot", "plot_path", type=click.Path(), default=None,
              help="Optional SVG/PDF line chart (MSE dB vs 1/r^2 dB).")
@_exit_codes
def compare(reports, merged_path, plot_path):
    """Merge reports from one scenario into a single plot-ready table."""
    rows = merge_reports([read_report(p) for p in reports])
    write_report(rows, merged_path)
    click.echo(f"wrote {merged_path} ({len(rows)} rows)")
    if plot_path:
        plot_report(rows, plot_path)
        click.echo(f"wrote {plot_path}")


@main.command("nclt-import")
@click.option("--gt", "gt_csv", type=click.Path(), required=True,
              help="Ground-truth CSV (utime,x,y).")
@click.option("--odometry", "odometry_csv", type=click.Path(), required=True,
              help="Odometry CSV (utime,vx,vy).")
@click.option("--rate", "rate_hz", type=float, default=1.0, show_default=True)
@click.option("--segment", "segment_length", type=int, default=200, show_default=True)
@out_option
@_exit_codes
def nclt_import_cmd(gt_csv, odometry_csv, rate_hz, segment_length, out_dir):
    """Resample recorded streams and write train/validation/test datasets."""
    from ..data import save_dataset
    from .nclt import import_recordings

    datasets = import_recordings(gt_csv, odometry_csv, rate_hz=rate_hz,
                                 segment_length=segment_length)
    for split, ds in datasets.items():
        save_dataset(ds, out_dir, name=split)
        click.echo(f"{split}: {len(ds)} sequences of T="
                   f"{[tr.T for tr in ds.trajectories[:3]]}...")


@main.command("nclt-run")
@out_option
@click.option("--synthetic/--no-synthetic", default=False,
              help="Generate synthetic recordings first (documented schema).")
@click.option("--rate", "rate_hz", type=float, default=1.0, show_default=True)
@click.option("--duration", "duration_s", type=float, default=1200.0, show_default=True,
              help="Synthetic recording length in seconds.")
@click.option("--segment", "segment_length", type=int, default=100, show_default=True)
@click.option("--epochs", type=int, default=30, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--report", "report_path", type=click.Path(), default=None)
@_exit_codes
def nclt_run_cmd(out_dir, synthetic, rate_hz, duration_s, segment_length,
                 epochs, seed, report_path):
    """Run the localization comparison (dead reckoning, KF, RNN, learned gain)."""
    from ..data import load_dataset, save_dataset
    from ..trainer import TrainConfig
    from .nclt import import_recordings, localization_experiment, synthesize_recordings

    out_dir = Path(out_dir)
    if synthetic:
        rec = synthesize_recordings(out_dir, duration_s=duration_s, rate_hz=rate_hz,
                                    seed=seed)
        datasets = import_recordings(rec["gt"], rec["odometry"], rate_hz=rate_hz,
                                     segment_length=segment_length)
        for split, ds in datasets.items():
            save_dataset(ds, out_dir, name=split)
    else:
        datasets = {split: load_dataset(out_dir / f"{split}.manifest.json")
                    for split in ("train", "validation", "test")}
    results = localization_experiment(
        datasets, dtau=1.0 / rate_hz,
        train_config=TrainConfig(epochs=epochs, seed=seed))
    for method, res in results.items():
        click.echo(f"{method:15s} position MSE {res['mse_db']:8.3f} dB")
    if report_path:
        payload = {m: {"mse_db": r["mse_db"], "sigma_db": r["sigma_db"]}
                   for m, r in results.items()}
        Path(report_path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        click.echo(f"wrote {report_path}")


if __name__ == "__main__":
    main()
