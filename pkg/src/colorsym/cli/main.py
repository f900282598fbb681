"""Command-line entry point: ``colorsym CONFIG [--out DIR] ...``.

Exit status is 0 iff every enabled check passed, 1 if some check failed,
and 2 for configuration or output errors.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from . import config as C
from .experiments import RunOptions, run_all
from .output import write_outputs

EXIT_FAIL = 1
EXIT_USAGE = 2


def _list_kinds(ctx, _param, value):
    if not value or ctx.resilient_parsing:
        return
    for kind, text in C.KIND_DESCRIPTIONS.items():
        click.echo(f"{kind:24s} {text}")
    ctx.exit(0)


@click.command(context_settings={"help_option_names": ["-h", "--help"]})
@click.argument("config_path", type=click.Path(dir_okay=False, path_type=Path), required=False)
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path), envvar="COLORSYM_OUT",
              default="colorsym-results", show_default=True,
              help="Output directory (default from $COLORSYM_OUT).")
@click.option("--seed", type=click.IntRange(min=0), default=None, help="Override the config's master seed.")
@click.option("--replicas", type=click.IntRange(min=10), default=None,
              help="Override the replica count of every Monte Carlo experiment.")
@click.option("--exact/--float", "exact", default=True, show_default=True,
              help="Rational or floating-point arithmetic for the exact checks.")
@click.option("--list-experiments", is_flag=True, expose_value=False, is_eager=True, callback=_list_kinds,
              help="List experiment kinds and exit.")
@click.option("-q", "--quiet", is_flag=True, help="Only print failures.")
def main(config_path, out_dir, seed, replicas, exact, quiet):
    """Run the experiments listed in CONFIG_PATH (YAML)."""
    if config_path is None:
        raise click.UsageError("missing CONFIG_PATH")
    try:
        cfg = C.load_config(config_path)
    except FileNotFoundError:
        click.echo(f"error: config file not found: {config_path}", err=True)
        sys.exit(EXIT_USAGE)
    except C.ConfigError as err:
        click.echo(f"invalid config {config_path}:\n{err}", err=True)
        sys.exit(EXIT_USAGE)
    master = cfg.seed if seed is None else seed
    try:
        results = run_all(cfg, RunOptions(exact=exact, replicas=replicas), master)
    except C.ConfigError as err:
        click.echo(f"invalid config {config_path}:\n{err}", err=True)
        sys.exit(EXIT_USAGE)
    try:
        write_outputs(out_dir, results, master, "exact" if exact else "float")
    except OSError as err:
        click.echo(f"error: cannot write results to {out_dir}: {err}", err=True)
        sys.exit(EXIT_USAGE)
    for r in results:
        failed = [rec for rec in r.records if not rec.passed]
        if failed or not quiet:
            click.echo(f"{'PASS' if r.passed else 'FAIL'} {r.id} ({r.kind}): "
                       f"{len(r.records) - len(failed)}/{len(r.records)} checks")
        for rec in failed:
            click.echo(f"    failed: {rec.quantity} expected {rec.theoretical} got {rec.empirical}")
    sys.exit(0 if all(r.passed for r in results) else EXIT_FAIL)


if __name__ == "__main__":
    main()
