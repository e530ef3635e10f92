"""Command-line entry points: simulate, ablation, serve."""

from __future__ import annotations

import sys

import click

from .simulation import (
    METHOD_NAMES,
    export_results,
    get_task,
    run_experiment,
)


@click.group()
def main():
    """Preference learning with confidence-aware queries."""


@main.command()
@click.option("--task", type=click.Choice(["thermal", "tabletop", "driving"]), required=True)
@click.option("--method", type=click.Choice(list(METHOD_NAMES)), default="full")
@click.option("--trials", type=int, default=6, show_default=True)
@click.option("--iters", type=int, default=None, help="defaults to 100 for driving, 50 otherwise")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv")
def simulate(task, method, trials, iters, seed, out, fmt):
    """Run one method on one task and export the accuracy traces."""
    task_obj = get_task(task)
    if iters is None:
        iters = 100 if task == "driving" else 50
    try:
        summary = run_experiment(task_obj, [method], trials, iters, seed)
        export_results(summary, out, fmt)
    except Exception as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    final = summary["methods"][0]
    click.echo(
        f"{task}/{method}: final accuracy {final['final_mean']:.4f} "
        f"± {final['final_std']:.4f} over {trials} trials"
    )


@main.command()
@click.option("--task", type=click.Choice(["thermal", "tabletop", "driving"]), default="tabletop")
@click.option("--trials", type=int, default=6, show_default=True)
@click.option("--iters", type=int, default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv")
def ablation(task, trials, iters, seed, out, fmt):
    """Run all four engine variants on one task."""
    task_obj = get_task(task)
    if iters is None:
        iters = 100 if task == "driving" else 50
    try:
        summary = run_experiment(task_obj, list(METHOD_NAMES), trials, iters, seed)
        export_results(summary, out, fmt)
    except Exception as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    for m in summary["methods"]:
        click.echo(f"{task}/{m['method']}: {m['final_mean']:.4f} ± {m['final_std']:.4f}")


@main.command()
@click.option("--port", type=int, default=8000, envvar="UUPL_PORT", show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option(
    "--data-dir",
    type=click.Path(),
    default="./uupl-sessions",
    envvar="UUPL_DATA_DIR",
    show_default=True,
)
@click.option("--cors-origin", default=None)
def serve(port, host, data_dir, cors_origin):
    """Start the elicitation HTTP service."""
    import uvicorn

    from .api import create_app
    from .service import SessionStore

    app = create_app(SessionStore(data_dir), cors_origin=cors_origin)
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
