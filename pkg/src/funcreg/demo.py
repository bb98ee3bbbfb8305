"""Demo fixture setup: synthetic station files in the weather input format.

Usage:
    python -m funcreg.demo --out weather_demo
    funcreg weather-loo --temp weather_demo/temperature.csv \
        --precip weather_demo/precipitation.csv --out loo_out
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np
import pandas as pd

from funcreg.io import write_report
from funcreg.weather import DAY_COLUMNS, DAYS

DEMO_STATIONS = 35
DRY_DAY_PROBABILITY = 0.03


def _station_rng(seed: int, station: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(station,)))


def generate_weather(
    stations: int = DEMO_STATIONS, seed: int = 0
) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Temperature and precipitation tables, one row per station.

    Stations differ in a latent continentality u in [0, 1]: colder, more
    seasonal and drier as u grows. Daily log precipitation rises with the
    seasonal temperature, so the temperature curve carries the signal.
    """
    days = np.arange(1, DAYS + 1)
    season = -np.cos(2.0 * np.pi * (days - 15) / DAYS)
    temp_rows, precip_rows = [], []
    for index in range(stations):
        rng = _station_rng(seed, index)
        u = rng.uniform()
        seasonal = (10.0 - 15.0 * u) + (6.0 + 12.0 * u) * season
        temp = seasonal + rng.normal(0.0, 2.0, DAYS)
        log_precip = -0.3 + 0.05 * seasonal + 1.2 * (0.5 - u) + rng.normal(0.0, 0.25, DAYS)
        precip = np.exp(log_precip)
        precip[rng.uniform(size=DAYS) < DRY_DAY_PROBABILITY] = 0.0
        station_id = f"ST{index + 1:02d}"
        temp_rows.append([station_id, *np.round(temp, 1)])
        precip_rows.append([station_id, *np.round(precip, 1)])
    columns = ["station", *DAY_COLUMNS]
    return pd.DataFrame(temp_rows, columns=columns), pd.DataFrame(precip_rows, columns=columns)


def write_weather(
    out_dir: str | Path, stations: int = DEMO_STATIONS, seed: int = 0
) -> tuple[Path, Path]:
    """Write ``temperature.csv`` and ``precipitation.csv`` under ``out_dir``."""
    out_dir = Path(out_dir)
    temp, precip = generate_weather(stations, seed)
    return (
        write_report(out_dir / "temperature.csv", temp, deterministic=True),
        write_report(out_dir / "precipitation.csv", precip, deterministic=True),
    )


def main() -> None:
    parser = argparse.ArgumentParser(description="Write synthetic station weather files")
    parser.add_argument("--out", required=True, help="Output directory")
    parser.add_argument("--stations", type=int, default=DEMO_STATIONS, help="Station count")
    parser.add_argument("--seed", type=int, default=0, help="Generator seed")
    args = parser.parse_args()

    temp_path, precip_path = write_weather(args.out, args.stations, args.seed)
    print(f"Wrote {temp_path}")
    print(f"Wrote {precip_path}")


if __name__ == "__main__":
    main()
