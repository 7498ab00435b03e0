"""Train command - fit the conditional model to a directory of speech."""

import time
from pathlib import Path
from typing import Optional

import typer
from rich.console import Console

from gvox.core.parametric_encoder import conditioning_from_packed, encode_signal
from gvox.core.signal_io import read_wav
from gvox.core.training import train as train_model
from gvox.core.weights import read_weights, write_weights
from gvox.errors import EmptyCorpusError, StorageError
from gvox.models.signal import ConditioningTrack, PcmSignal
from gvox.utils.config import load_config, with_overrides
from gvox.utils.display import display_training, exit_on_error

console = Console()


def load_corpus(corpus_dir: Path) -> list[tuple[PcmSignal, ConditioningTrack]]:
    """Every WAV in the directory, in name order, with decoder-side conditioning."""
    if not corpus_dir.is_dir():
        raise StorageError(f"not a directory: {corpus_dir}", path=str(corpus_dir))
    paths = sorted(corpus_dir.glob("*.wav"))
    if not paths:
        raise EmptyCorpusError("no .wav files found", path=str(corpus_dir))
    corpus = []
    for path in paths:
        signal = read_wav(path)
        frames = encode_signal(signal)
        corpus.append((signal, conditioning_from_packed(frames, signal.sample_rate_hz)))
    return corpus


def train(
    corpus_dir: Path = typer.Argument(..., help="Directory of 16-bit mono WAV files"),
    config_file: Optional[Path] = typer.Argument(
        None, help="Configuration file (defaults apply when omitted)"
    ),
    output: Path = typer.Option(
        Path("model.weights"), "--output", "-o", help="Where to write the trained weights"
    ),
    seed: Optional[int] = typer.Option(None, "--seed", "-s", help="Override the config seed"),
    steps: Optional[int] = typer.Option(None, "--steps", help="Override the step count"),
    resume: Optional[Path] = typer.Option(
        None, "--resume", "-r", help="Continue from existing weights"
    ),
    loss_log: Optional[Path] = typer.Option(
        None, "--loss-log", help="Write per-step losses as CSV"
    ),
) -> None:
    """
    Train the waveform model by next-sample cross-entropy.

    Runs are deterministic given the seed. Resuming is refused when the
    weights' architecture differs from the configuration.

    Examples:
        gvox train corpus/ train.cfg -o model.weights --seed 3
        gvox train corpus/ train.cfg --resume model.weights --loss-log loss.csv
    """
    with exit_on_error():
        config = with_overrides(load_config(config_file), seed=seed, steps=steps)
        initial = read_weights(resume) if resume is not None else None
        with console.status("[bold green]Loading corpus...[/]"):
            corpus = load_corpus(corpus_dir)
        seconds = sum(signal.duration_s for signal, _ in corpus)
        console.print(f"[dim]{len(corpus)} file(s), {seconds:.1f} s of audio[/]")

        started = time.perf_counter()
        with console.status(f"[bold green]Training for {config.steps} steps...[/]"):
            run = train_model(corpus, config, initial=initial)
        elapsed = time.perf_counter() - started

        write_weights(run.weights, output)
        if loss_log is not None:
            try:
                run.loss_frame().to_csv(loss_log, index=False, float_format="%.9f")
            except OSError as e:
                raise StorageError(f"cannot write loss log: {e}", path=str(loss_log)) from e

    display_training(run.losses, elapsed)
    console.print(f"[green]Saved {run.weights.num_parameters} parameters to {output}[/]")
