"""Waveform commands - lossless mu-law coding under the model's predictions."""

from pathlib import Path
from typing import Optional

import typer
from rich.console import Console

from gvox.core.parametric_encoder import encode_signal
from gvox.core.signal_io import read_wav, write_wav
from gvox.core.waveform_coder import MuLawQuantizer, decode_waveform, encode_waveform
from gvox.core.wavenet import WaveNetModel
from gvox.core.weights import read_weights
from gvox.errors import StorageError, UsageError
from gvox.models.rates import ALPHABET_SIZE
from gvox.utils.config import load_config
from gvox.utils.display import display_rate_report, exit_on_error

console = Console()

app = typer.Typer(help="Waveform coding: entropy-code mu-law samples with the model")


@app.command("encode")
def waveform_encode(
    source: Path = typer.Argument(..., help="Input 16-bit mono WAV (8 or 16 kHz)"),
    weights: Path = typer.Argument(..., help="Trained model weights"),
    dest: Path = typer.Argument(..., help="Output waveform bitstream (.gvw)"),
    levels: int = typer.Option(
        ALPHABET_SIZE, "--levels", "-l", help="Quantizer levels, a power of two up to 256"
    ),
    silence_db: Optional[float] = typer.Option(
        None, "--silence-db", help="Silence threshold in dBFS for the report"
    ),
    config_file: Optional[Path] = typer.Option(
        None, "--config", "-c", help="Configuration file"
    ),
    text: bool = typer.Option(False, "--text", help="Print the report as key = value lines"),
) -> None:
    """
    Encode speech losslessly at the mu-law level and report the achieved rate.

    Examples:
        gvox waveform encode speech.wav model.weights speech.gvw
        gvox waveform encode speech.wav model.weights speech.gvw --levels 64
    """
    with exit_on_error():
        try:
            MuLawQuantizer(levels)
        except ValueError as e:
            raise UsageError(str(e)) from e
        config = load_config(config_file)
        signal = read_wav(source)
        model = WaveNetModel(read_weights(weights))
        frames = encode_signal(signal)
        with console.status(f"[bold green]Coding {len(signal)} samples...[/]"):
            encoding = encode_waveform(
                signal,
                frames,
                model,
                levels=levels,
                silence_db=config.silence_db if silence_db is None else silence_db,
                silence_frame_ms=config.silence_frame_ms,
            )
        data = encoding.bitstream.to_bytes()
        try:
            dest.write_bytes(data)
        except OSError as e:
            raise StorageError(f"cannot write bitstream: {e}", path=str(dest)) from e

    console.print(f"[green]Wrote {len(data)} bytes to {dest}[/]")
    if text:
        console.print(encoding.report.to_text(), markup=False, highlight=False)
    else:
        display_rate_report(encoding.report, title=f"Rates for {source.name}")


@app.command("decode")
def waveform_decode(
    source: Path = typer.Argument(..., help="Waveform bitstream (.gvw)"),
    weights: Path = typer.Argument(..., help="The weights the stream was encoded with"),
    dest: Path = typer.Argument(..., help="Output WAV"),
) -> None:
    """
    Decode a waveform bitstream; the output equals the mu-law transcode of the input.

    Examples:
        gvox waveform decode speech.gvw model.weights out.wav
    """
    with exit_on_error():
        try:
            data = source.read_bytes()
        except OSError as e:
            raise StorageError(f"cannot read bitstream: {e}", path=str(source)) from e
        model = WaveNetModel(read_weights(weights))
        with console.status("[bold green]Decoding...[/]"):
            decoding = decode_waveform(data, model, path=str(source))
        write_wav(decoding.signal, dest)
    console.print(f"[green]Decoded {len(decoding.signal)} samples to {dest}[/]")
