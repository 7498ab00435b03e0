"""Main CLI entry point for gvox."""

import logging

import typer
from rich.console import Console

from gvox import __version__
from gvox.commands.analyze import analyze
from gvox.commands.parametric import app as parametric_app
from gvox.commands.train import train
from gvox.commands.waveform import app as waveform_app

console = Console()

app = typer.Typer(
    name="gvox",
    help="Generative speech coding: parametric and lossless waveform coders.",
    add_completion=False,
)


# Register commands
app.command()(train)
app.command()(analyze)
app.add_typer(parametric_app, name="parametric")
app.add_typer(waveform_app, name="waveform")


@app.callback(invoke_without_command=True)
def main_callback(
    ctx: typer.Context,
    version: bool = typer.Option(
        None,
        "--version",
        "-V",
        help="Show version and exit.",
        is_eager=True,
    ),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Log pipeline progress"),
) -> None:
    """
    gvox - speech coding with a conditional waveform model.

    Encode with 'gvox parametric encode' or 'gvox waveform encode', train a
    model with 'gvox train' and measure rates with 'gvox analyze'.
    """
    if version:
        console.print(f"gvox version {__version__}")
        raise typer.Exit()

    if ctx.invoked_subcommand is None:
        console.print(ctx.get_help())
        raise typer.Exit()

    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )


if __name__ == "__main__":
    app()
