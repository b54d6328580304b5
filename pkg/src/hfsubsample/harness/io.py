"""CSV ingestion of clean intraday prices and export of price paths."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..core import TickSeries
from ..errors import NonMonotoneTime, NonPositivePrice, ParseError

__all__ = ["read_price_csv", "ingest_csv", "export_csv"]


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def read_price_csv(path, time_col=0, price_col=1):
    """Read ``(timestamps, prices)`` from a CSV file.

    A file with a single column is read as prices on an index grid. A header row
    is detected when its fields are not numeric. Timestamps must be
    non-decreasing; repeated timestamps keep the last price.

    Raises
    ------
    ParseError, NonPositivePrice, NonMonotoneTime
        With the offending 1-based line number.
    """
    times, prices = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            row = [c.strip() for c in row]
            if not row or all(c == "" for c in row):
                continue
            if lineno == 1 and not all(_is_number(c) for c in row):
                continue
            single = len(row) == 1
            try:
                t = float(len(prices)) if single else float(row[time_col])
                p = float(row[0] if single else row[price_col])
            except (ValueError, IndexError) as exc:
                raise ParseError(f"cannot parse {row!r}", lineno) from exc
            if not np.isfinite(p) or not np.isfinite(t):
                raise ParseError("non-finite value", lineno)
            if p <= 0:
                raise NonPositivePrice(f"price {p} is not positive", lineno)
            if times and t < times[-1]:
                raise NonMonotoneTime(f"timestamp {t} precedes {times[-1]}", lineno)
            if times and t == times[-1]:
                prices[-1] = p
                continue
            times.append(t)
            prices.append(p)
    return np.asarray(times), np.asarray(prices)


def ingest_csv(path, time_col=0, price_col=1) -> TickSeries:
    """Log-prices from a ``timestamp,price`` (or single price column) CSV on an index grid."""
    _, prices = read_price_csv(path, time_col, price_col)
    if prices.size < 2:
        raise ParseError("need at least two distinct observations", None)
    return TickSeries(np.log(prices))


def export_csv(path, prices, timestamps=None) -> Path:
    """Write ``timestamp,price`` rows with round-trip float formatting."""
    prices = np.asarray(prices, dtype=float)
    if timestamps is None:
        timestamps = np.arange(prices.size)
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["timestamp", "price"])
        for t, p in zip(timestamps, prices):
            w.writerow([repr(float(t)) if not float(t).is_integer() else int(t), repr(float(p))])
    return path
