"""Parametric commands - 2.5 kb/s encode and generative or sinusoidal decode."""

import logging
import multiprocessing
from pathlib import Path
from typing import Optional

import typer
from rich import box
from rich.console import Console
from rich.table import Table

from gvox.core.bitstream import pack_stream
from gvox.core.parametric_decoder import render_sinusoidal, synthesize
from gvox.core.parametric_encoder import EncoderStats, encode_signal
from gvox.core.signal_io import read_wav, write_wav
from gvox.core.wavenet import WaveNetModel
from gvox.core.weights import read_weights
from gvox.errors import GvoxError, StorageError, UsageError
from gvox.utils.config import load_config
from gvox.utils.display import display_encoder_stats, exit_on_error

logger = logging.getLogger(__name__)

console = Console()

PARAMETRIC_SUFFIX = ".gvp"

app = typer.Typer(help="Parametric coding: transmit conditioning only, synthesize on decode")


def encode_file(source: Path, dest: Path) -> EncoderStats:
    """Encode one WAV into a parametric bitstream file."""
    stats = EncoderStats()
    frames = encode_signal(read_wav(source), stats)
    data = pack_stream(frames)
    try:
        dest.write_bytes(data)
    except OSError as e:
        raise StorageError(f"cannot write bitstream: {e}", path=str(dest)) from e
    logger.info(f"Wrote {len(data)} bytes to {dest}")
    return stats


def _encode_job(job: tuple[Path, Path]) -> tuple[str, EncoderStats | None, str | None, int]:
    source, dest = job
    try:
        return str(source), encode_file(source, dest), None, 0
    except GvoxError as e:
        return str(source), None, e.located(), e.exit_code


@app.command("encode")
def parametric_encode(
    source: Path = typer.Argument(..., help="Input 16-bit mono WAV (8 or 16 kHz)"),
    dest: Path = typer.Argument(..., help="Output parametric bitstream (.gvp)"),
) -> None:
    """
    Encode speech into 50-bit frames of LSFs, pitch, power and voicing.

    Examples:
        gvox parametric encode speech.wav speech.gvp
    """
    with exit_on_error():
        stats = encode_file(source, dest)
    display_encoder_stats(stats, str(dest))


@app.command("encode-batch")
def parametric_encode_batch(
    sources: list[Path] = typer.Argument(..., help="Input WAV files"),
    out_dir: Path = typer.Option(..., "--out-dir", "-o", help="Directory for .gvp files"),
    jobs: int = typer.Option(1, "--jobs", "-j", min=1, help="Files encoded in parallel"),
) -> None:
    """
    Encode many files, one bitstream per input named after it.

    Examples:
        gvox parametric encode-batch corpus/*.wav --out-dir coded/ --jobs 4
    """
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        console.print(f"[red]Error: cannot create {out_dir}: {e}[/]")
        raise typer.Exit(StorageError.exit_code)

    work = [(s, out_dir / (s.stem + PARAMETRIC_SUFFIX)) for s in sources]
    with console.status(f"[bold green]Encoding {len(work)} file(s)...[/]"):
        if jobs > 1 and len(work) > 1:
            with multiprocessing.Pool(processes=jobs) as pool:
                results = pool.map(_encode_job, work)
        else:
            results = [_encode_job(job) for job in work]

    table = Table(box=box.SIMPLE)
    table.add_column("File", style="cyan")
    table.add_column("Frames", justify="right")
    table.add_column("Clamped", justify="right")
    table.add_column("Status")
    worst = 0
    for name, stats, error, code in results:
        if stats is None:
            table.add_row(name, "-", "-", f"[red]{error}[/]")
            worst = max(worst, code)
        else:
            table.add_row(name, str(stats.frames), str(stats.total_clamped), "[green]ok[/]")
    console.print(table)
    if worst:
        raise typer.Exit(worst)


@app.command("decode")
def parametric_decode(
    source: Path = typer.Argument(..., help="Parametric bitstream (.gvp)"),
    dest: Path = typer.Argument(..., help="Output WAV"),
    weights: Optional[Path] = typer.Option(
        None, "--weights", "-w", help="Trained model weights for generative synthesis"
    ),
    seed: int = typer.Option(0, "--seed", "-s", help="Sampling seed"),
    temperature: Optional[float] = typer.Option(
        None, "--temperature", "-t", min=0.0, help="Sampling temperature (0 = argmax)"
    ),
    fallback: bool = typer.Option(
        False, "--fallback-sinusoidal", help="Render with the harmonic-plus-noise synthesizer"
    ),
    config_file: Optional[Path] = typer.Option(
        None, "--config", "-c", help="Configuration file (temperature, silence threshold)"
    ),
) -> None:
    """
    Decode a parametric bitstream to speech.

    With --weights the waveform is sampled from the model at 16 kHz; with
    --fallback-sinusoidal no model is needed and the output is 8 kHz.

    Examples:
        gvox parametric decode speech.gvp out.wav --weights model.weights --seed 1
        gvox parametric decode speech.gvp out.wav --fallback-sinusoidal
    """
    with exit_on_error():
        try:
            data = source.read_bytes()
        except OSError as e:
            raise StorageError(f"cannot read bitstream: {e}", path=str(source)) from e

        if fallback:
            signal = render_sinusoidal(data, seed=seed, path=str(source))
            write_wav(signal, dest)
            console.print(f"[green]Rendered {signal.duration_s:.2f} s to {dest}[/]")
            return
        if weights is None:
            raise UsageError("--weights is required unless --fallback-sinusoidal is given")

        config = load_config(config_file)
        temp = config.temperature if temperature is None else temperature
        model = WaveNetModel(read_weights(weights))
        with console.status("[bold green]Synthesizing...[/]"):
            result = synthesize(
                data,
                model,
                seed=seed,
                temperature=temp,
                silence_db=config.silence_db,
                path=str(source),
            )
        write_wav(result.signal, dest)

    console.print(f"[green]Synthesized {result.signal.duration_s:.2f} s to {dest}[/]")
    console.print(f"[dim]Generation rate {result.generation_rate():.3f} bits/sample[/]")
