"""Unicode sparklines and bars for loss curves and rate traces."""

from __future__ import annotations

from collections.abc import Callable, Sequence

import numpy as np

# eighth-height blocks, lowest first
SPARK_CHARS = "▁▂▃▄▅▆▇█"

# shades for the filled and empty parts of a bar
BAR_CHARS = "░▒▓█"


def bucket_means(values: Sequence[float], width: int) -> list[float]:
    """Compress a long series to ``width`` points by averaging equal buckets."""
    data = np.asarray(values, dtype=np.float64)
    if data.size <= width:
        return data.tolist()
    edges = np.linspace(0, data.size, width + 1).astype(int)
    return [float(data[a:b].mean()) for a, b in zip(edges[:-1], edges[1:])]


def sparkline(values: Sequence[float], width: int = 40) -> str:
    """
    One character per point, scaled between the series minimum and maximum.

    Long series are averaged down to ``width`` characters rather than
    truncated, so a whole training run fits on one line.

    Example:
        >>> sparkline([1, 2, 3, 5, 8, 5, 3, 2, 1])
        '▁▂▃▅█▅▃▂▁'
    """
    if len(values) == 0:
        return ""

    points = bucket_means(values, width)
    min_val = min(points)
    max_val = max(points)

    # flat series sit mid-height
    if max_val == min_val:
        return SPARK_CHARS[4] * len(points)

    result = []
    for val in points:
        normalized = (val - min_val) / (max_val - min_val)
        index = min(7, max(0, int(normalized * 7)))
        result.append(SPARK_CHARS[index])
    return "".join(result)


def sparkline_with_label(
    values: Sequence[float],
    label: str,
    width: int = 40,
    show_latest: bool = True,
    format_fn: Callable[[float], str] | None = None,
) -> str:
    """Sparkline with a label and optionally the most recent value.

    Returns a string like ``"loss: 2.613  ▇▅▃▂▂▁▁"``.
    """
    if len(values) == 0:
        return f"{label}: N/A"

    spark = sparkline(values, width)
    if show_latest:
        latest = float(values[-1])
        formatted = format_fn(latest) if format_fn else f"{latest:.3f}"
        return f"{label}: {formatted}  {spark}"
    return f"{label}: {spark}"


def trend_indicator(values: Sequence[float], tolerance: float = 0.01) -> str:
    """
    Direction of the last two bucket means of a series.

    "↑" or "↓" when the later half moves by more than ``tolerance``, "→" otherwise,
    "?" for fewer than two points.
    """
    if len(values) < 2:
        return "?"
    halves = bucket_means(values, 2)
    change = halves[-1] - halves[0]
    if change > tolerance:
        return "↑"
    if change < -tolerance:
        return "↓"
    return "→"


def ascii_bar(value: float, min_val: float, max_val: float, width: int = 16) -> str:
    """
    Fill proportional to where ``value`` sits in [min_val, max_val], clamped.

    Example:
        >>> ascii_bar(4, 0, 8, width=8)
        '████░░░░'
    """
    if max_val == min_val:
        return BAR_CHARS[2] * width
    normalized = max(0.0, min(1.0, (value - min_val) / (max_val - min_val)))
    filled = int(normalized * width)
    return BAR_CHARS[3] * filled + BAR_CHARS[0] * (width - filled)
