"""Rich display utilities for terminal output."""

from __future__ import annotations

from contextlib import contextmanager

import typer
from rich import box
from rich.console import Console
from rich.table import Table
from rich.text import Text

from gvox.core.parametric_encoder import EncoderStats
from gvox.errors import GvoxError
from gvox.models.rates import MAX_SYMBOL_BITS, InfoTrace, RateReport
from gvox.models.signal import FRAME_BITS
from gvox.utils.sparkline import ascii_bar, sparkline, sparkline_with_label, trend_indicator

console = Console()


def rate_text(bits: float | None, decimals: int = 3) -> Text:
    """Bits per sample, dimmed when absent."""
    if bits is None:
        return Text("-", style="dim")
    style = "green" if bits < 4.0 else "yellow" if bits < 7.0 else "red"
    return Text(f"{bits:.{decimals}f}", style=style)


def display_rate_report(report: RateReport, title: str = "Rate report") -> None:
    table = Table(title=title, box=box.SIMPLE_HEAVY, show_header=True)
    table.add_column("Measure", style="cyan")
    table.add_column("bits/sample", justify="right")
    table.add_column("bits/s", justify="right")
    table.add_column("", no_wrap=True)

    rows = [
        ("Mean entropy H", report.h_bar),
        ("Ideal code length R", report.r),
        ("Generated-rate estimate", report.generation_estimate),
        ("Payload", report.payload_bits_per_sample),
    ]
    for label, bits in rows:
        per_second = f"{report.per_second(bits):,.0f}" if bits is not None else "-"
        bar = ascii_bar(bits, 0.0, MAX_SYMBOL_BITS) if bits is not None else ""
        table.add_row(label, rate_text(bits), per_second, bar)
    console.print(table)

    details = (
        f"[dim]{report.samples_counted} samples counted, "
        f"{report.silence_excluded} silent excluded, "
        f"{report.quantizer_levels} levels at {report.sample_rate_hz} Hz"
    )
    if report.snr_db is not None:
        details += f", SNR {report.snr_db:.2f} dB"
    console.print(details + "[/]")


def display_trace_summary(trace: InfoTrace, width: int = 60) -> None:
    """One-line sparklines of the per-sample entropy and code length."""
    if len(trace) == 0:
        console.print("[dim]Empty trace[/]")
        return
    console.print(sparkline_with_label(trace.h.tolist(), "h", width))
    console.print(sparkline_with_label(trace.r.tolist(), "r", width))


def display_encoder_stats(stats: EncoderStats, frames_path: str | None = None) -> None:
    where = f" for {frames_path}" if frames_path else ""
    bits = stats.frames * FRAME_BITS
    console.print(f"[green]Encoded {stats.frames} frames{where}[/] ({bits} bits)")
    if stats.total_clamped:
        console.print(
            f"[yellow]Clamped: {stats.lsf_clamped} LSF, {stats.pitch_clamped} pitch, "
            f"{stats.power_clamped} power value(s)[/]"
        )
    if stats.order_adjusted:
        console.print(f"[dim]{stats.order_adjusted} LSF index moves to keep ordering[/]")


def display_training(losses: list[float], elapsed_s: float | None = None) -> None:
    if not losses:
        console.print("[dim]No training steps run[/]")
        return
    table = Table(box=box.SIMPLE, show_header=False)
    table.add_column("", style="cyan")
    table.add_column("")
    table.add_row("Steps", str(len(losses)))
    table.add_row("First loss", f"{losses[0]:.4f} bits")
    table.add_row("Final loss", f"{losses[-1]:.4f} bits {trend_indicator(losses)}")
    table.add_row("Curve", sparkline(losses, 50))
    if elapsed_s is not None:
        table.add_row("Time", f"{elapsed_s:.1f} s")
    console.print(table)


@contextmanager
def exit_on_error():
    """Print a gvox error with its file and leave with the error's exit code."""
    try:
        yield
    except GvoxError as e:
        console.print(f"[red]Error: {e.located()}[/]")
        raise typer.Exit(e.exit_code) from e
