"""Gas-vs-voters sweeps and the mining-latency model.

Latency samples only decorate reports. No protocol decision reads them.
"""

from __future__ import annotations

import csv
import io
import random
import statistics
from dataclasses import dataclass
from typing import Callable, Sequence

from .congress import congress_deploy_gas
from .datashare import datashare_deploy_gas
from .errors import InvalidRange

GAS_MODELS: dict[str, Callable[[int], int]] = {
    "datashare": datashare_deploy_gas,
    "congress": congress_deploy_gas,
}
CSV_COLUMNS = ("voters", "gas", "rep", "latency_s", "mean_s", "var_s2", "stddev_s")


@dataclass(frozen=True)
class LatencyModel:
    """Closed uniform ranges, in seconds, from deployment to mining."""

    datashare: tuple[float, float] = (20.0, 50.0)
    congress: tuple[float, float] = (25.0, 40.0)

    def bounds(self, kind: str) -> tuple[float, float]:
        if kind not in GAS_MODELS:
            raise ValueError(f"unknown contract kind {kind!r}")
        return getattr(self, kind)

    def sample(self, kind: str, rng: random.Random) -> float:
        lo, hi = self.bounds(kind)
        # rounding to milliseconds keeps report text short and stays in range
        return min(max(round(rng.uniform(lo, hi), 3), lo), hi)

    def samples(self, kind: str, n: int, seed: int) -> list[float]:
        rng = random.Random(f"latency:{kind}:{seed}")
        return [self.sample(kind, rng) for _ in range(n)]


@dataclass(frozen=True)
class SeriesStats:
    mean: float
    variance: float
    stddev: float
    minimum: float
    maximum: float

    @property
    def err_below(self) -> float:
        return self.mean - self.minimum

    @property
    def err_above(self) -> float:
        return self.maximum - self.mean


def summarize(samples: Sequence[float]) -> SeriesStats:
    """Population statistics; error bars span the sample min and max."""
    if not samples:
        raise ValueError("no samples")
    return SeriesStats(
        statistics.fmean(samples),
        statistics.pvariance(samples),
        statistics.pstdev(samples),
        min(samples),
        max(samples),
    )


@dataclass(frozen=True)
class SweepRow:
    voters: int
    gas: int
    latencies: tuple[float, ...]
    stats: SeriesStats


def parse_voters(text: str) -> tuple[int, int]:
    """Parse ``A..B`` (or a single ``A``) into an inclusive pair."""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            return int(lo), int(hi)
        return int(text), int(text)
    except ValueError:
        raise InvalidRange(f"expected A..B, got {text!r}") from None


def gas_sweep(
    kind: str,
    voters: tuple[int, int],
    reps: int,
    seed: int = 0,
    model: LatencyModel | None = None,
    max_voters: int = 10,
) -> list[SweepRow]:
    if kind not in GAS_MODELS:
        raise InvalidRange(f"unknown kind {kind!r}; expected one of {sorted(GAS_MODELS)}")
    lo, hi = voters
    if lo < 1 or hi < lo or hi > max_voters:
        raise InvalidRange(f"voter range {lo}..{hi} outside 1..{max_voters}")
    if reps < 1:
        raise InvalidRange("reps must be at least 1")
    model = model or LatencyModel()
    gas_of = GAS_MODELS[kind]
    rng = random.Random(f"sweep:{kind}:{seed}")
    rows = []
    for n in range(lo, hi + 1):
        lat = tuple(model.sample(kind, rng) for _ in range(reps))
        rows.append(SweepRow(n, gas_of(n), lat, summarize(lat)))
    return rows


def sweep_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        for rep, latency in enumerate(row.latencies, start=1):
            writer.writerow(
                [row.voters, row.gas, rep, f"{latency:.3f}", f"{row.stats.mean:.6f}",
                 f"{row.stats.variance:.6f}", f"{row.stats.stddev:.6f}"]
            )
    return buf.getvalue()
