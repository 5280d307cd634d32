"""File formats: price series, trajectories, tables, bands, manifests.

All numeric CSV output uses Python's shortest-roundtrip float formatting
so that files are byte-reproducible and parse back to the same values;
rounding for human consumption happens only in figures and summaries.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import SeriesParseError
from .slaved import BootstrapBands, DecouplingTrajectory, PriceSeries, SuccessTable


def load_series(path: str | Path) -> PriceSeries:
    """Read a price series from CSV (``period,price``) or its JSON twin."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        return _load_series_json(path)
    return _load_series_csv(path)


def _load_series_csv(path: Path) -> PriceSeries:
    prices: list[float] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip().lower() for c in header[:2]] != ["period", "price"]:
            raise SeriesParseError("expected header 'period,price'", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 2:
                raise SeriesParseError("expected two columns", line=lineno)
            try:
                period = int(row[0])
                price = float(row[1])
            except ValueError as exc:
                raise SeriesParseError(str(exc), line=lineno) from exc
            if period != len(prices):
                raise SeriesParseError(
                    f"periods must be consecutive from 0, got {period}", line=lineno
                )
            if price <= 0:
                raise SeriesParseError(f"price must be positive, got {price}", line=lineno)
            prices.append(price)
    if not prices:
        raise SeriesParseError("file contains no price rows")
    return PriceSeries.from_prices(prices)


def _load_series_json(path: Path) -> PriceSeries:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SeriesParseError(f"invalid JSON: {exc}", line=exc.lineno) from exc
    if isinstance(data, dict) and "prices" in data:
        rows = list(enumerate(data["prices"]))
    elif isinstance(data, list):
        rows = [(item.get("period"), item.get("price")) for item in data]
    else:
        raise SeriesParseError("expected a list of {period, price} or {'prices': [...]}")
    prices = []
    for expected, (period, price) in enumerate(rows):
        if period != expected:
            raise SeriesParseError(f"periods must be consecutive from 0, got {period}")
        if not isinstance(price, (int, float)) or price <= 0:
            raise SeriesParseError(f"price must be positive, got {price!r}")
        prices.append(float(price))
    if not prices:
        raise SeriesParseError("series contains no prices")
    return PriceSeries.from_prices(prices)


def write_series_csv(series: PriceSeries, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["period", "price"])
        for k, p in enumerate(series.prices):
            writer.writerow([k, repr(float(p))])


def write_trajectory_csv(traj: DecouplingTrajectory, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["period", "d_plus", "d_minus", "delta_d"])
        for t, dp, dm, dd in zip(traj.periods, traj.d_plus, traj.d_minus, traj.delta_d):
            writer.writerow([int(t), repr(float(dp)), repr(float(dm)), repr(float(dd))])


def write_success_csv(table: SuccessTable, path: str | Path) -> None:
    """One row per threshold; the rate field is empty when nothing fired."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "success_rate", "n_events"])
        for row in table.rows:
            rate = "" if row.success_rate is None else repr(float(row.success_rate))
            writer.writerow([repr(float(row.threshold)), rate, row.n_events])


def write_predictions_csv(
    predictions: Sequence[tuple[int, int]], series: PriceSeries, path: str | Path
) -> None:
    """Predictions with their realized outcome where the series has one."""
    n = len(series)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["period", "predicted_bit", "realized_bit", "correct"])
        for t, bit in predictions:
            if 1 <= t <= n:
                realized = int(series.bits[t - 1])
                writer.writerow([t, bit, realized, int(realized == bit)])
            else:
                writer.writerow([t, bit, "", ""])


def write_bands_csv(bands: BootstrapBands, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "realization",
                "period",
                "d_plus",
                "d_plus_low10",
                "d_plus_high90",
                "d_minus",
                "d_minus_low10",
                "d_minus_high90",
            ]
        )
        for o in range(bands.outer):
            for i, t in enumerate(bands.periods):
                writer.writerow(
                    [
                        o,
                        int(t),
                        repr(float(bands.d_plus[o, i])),
                        repr(float(bands.d_plus_low10[o, i])),
                        repr(float(bands.d_plus_high90[o, i])),
                        repr(float(bands.d_minus[o, i])),
                        repr(float(bands.d_minus_low10[o, i])),
                        repr(float(bands.d_minus_high90[o, i])),
                    ]
                )


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(
    path: str | Path,
    command: Sequence[str],
    config: dict,
    seed: int,
    inputs: dict[str, str | Path],
    outputs: dict[str, str | Path],
) -> None:
    """Record what produced which artifacts, with content checksums.

    The manifest is itself deterministic: re-running the recorded command
    must reproduce every checksum byte for byte.
    """
    manifest = {
        "command": list(command),
        "config": config,
        "seed": seed,
        "inputs": {name: {"path": str(p), "sha256": sha256_file(p)} for name, p in inputs.items()},
        "outputs": {name: {"path": str(p), "sha256": sha256_file(p)} for name, p in outputs.items()},
    }
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
