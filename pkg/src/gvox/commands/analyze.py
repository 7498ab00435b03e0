"""Analyze command - per-sample information trace and rates of a recording."""

from pathlib import Path
from typing import Optional

import typer
from rich.console import Console

from gvox.core.parametric_encoder import conditioning_from_packed, encode_signal
from gvox.core.rate_analysis import export_trace, flag_poor_fit, info_trace
from gvox.core.signal_io import read_wav
from gvox.core.wavenet import WaveNetModel
from gvox.core.weights import read_weights
from gvox.models.rates import RateReport
from gvox.utils.config import load_config
from gvox.utils.display import display_rate_report, display_trace_summary, exit_on_error

console = Console()


def analyze(
    source: Path = typer.Argument(..., help="Input 16-bit mono WAV (8 or 16 kHz)"),
    weights: Path = typer.Argument(..., help="Trained model weights"),
    trace: Optional[Path] = typer.Option(
        None, "--trace", "-t", help="Write the per-sample trace as CSV"
    ),
    silence_db: Optional[float] = typer.Option(
        None, "--silence-db", help="Silence threshold in dBFS (overrides config)"
    ),
    config_file: Optional[Path] = typer.Option(
        None, "--config", "-c", help="Configuration file"
    ),
    text: bool = typer.Option(False, "--text", help="Print the report as key = value lines"),
) -> None:
    """
    Measure the model's entropy and code length on every sample.

    The trace has one row per sample: index, h_bits, r_bits, silent_flag.
    Silent samples are flagged and left out of the averages.

    Examples:
        gvox analyze speech.wav model.weights
        gvox analyze speech.wav model.weights --trace speech.csv --silence-db -45
    """
    with exit_on_error():
        config = load_config(config_file)
        threshold = config.silence_db if silence_db is None else silence_db
        signal = read_wav(source)
        model = WaveNetModel(read_weights(weights))
        track = conditioning_from_packed(encode_signal(signal), signal.sample_rate_hz)
        with console.status(f"[bold green]Scoring {len(signal)} samples...[/]"):
            result = info_trace(signal, track, model, threshold, config.silence_frame_ms)
        if trace is not None:
            export_trace(result, trace)

    report = RateReport.from_trace(result, signal.sample_rate_hz)
    if text:
        console.print(report.to_text(), markup=False, highlight=False)
    else:
        display_rate_report(report, title=f"Rates for {source.name}")
        display_trace_summary(result)

    window = max(1, int(round(config.fit_window_ms * signal.sample_rate_hz / 1000)))
    poor = flag_poor_fit(result, window, config.fit_threshold_bits)
    if poor.any():
        share = float(poor.mean()) * 100
        console.print(
            f"[yellow]{share:.1f}% of samples exceed the expected information by "
            f"{config.fit_threshold_bits:g} bits over {config.fit_window_ms:g} ms[/]"
        )
    if trace is not None:
        console.print(f"[green]Wrote {len(result)} trace rows to {trace}[/]")
