"""Pure data shaping for the figure kinds: loading, validation, binning.

Nothing here touches matplotlib, so every transformation the figures rely
on is testable as plain values.  Inputs are the delimited/JSON files the
simulator CLI writes; this package never recomputes a bound or rerolls a
simulation.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path


class InputError(ValueError):
    """Missing column, empty file, or a malformed input document."""


def read_csv_columns(path: str, required: tuple[str, ...]) -> dict[str, list[float]]:
    """Load the required numeric columns, failing loudly on gaps."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise InputError(f"{path}: missing column(s) {', '.join(missing)}")
        out: dict[str, list[float]] = {c: [] for c in required}
        for row in reader:
            for c in required:
                out[c].append(float(row[c]))
    if not any(out.values()) or not out[required[0]]:
        raise InputError(f"{path}: no data rows")
    return out


@dataclass(frozen=True)
class HistogramData:
    edges: tuple[float, ...]  # bin lower edges; one overflow bin at the end
    counts: tuple[int, ...]
    bin_width: float
    total: int

    def mass_below(self, threshold: float) -> float:
        """Fraction of samples in bins strictly below ``threshold``.

        ``threshold`` must be a bin edge so the answer is exact.
        """
        if not any(abs(threshold - e) < 1e-12 for e in self.edges):
            raise InputError(f"threshold {threshold} is not a bin edge")
        below = sum(
            c for e, c in zip(self.edges, self.counts) if e < threshold - 1e-12
        )
        return below / self.total if self.total else 0.0


def bin_deviations(
    values: list[float], bin_width: float = 0.005, span: float = 0.10
) -> HistogramData:
    """Fixed-width bins over [0, span] plus one overflow bin.

    Matches the study's own binning: a value lands in bin
    min(floor(v / width), nbins), so a value exactly at ``span`` overflows.
    """
    if bin_width <= 0:
        raise InputError("bin width must be positive")
    if not values:
        raise InputError("no deviation values to bin")
    nbins = int(round(span / bin_width))
    counts = [0] * (nbins + 1)
    for v in values:
        counts[min(int(v / bin_width), nbins)] += 1
    edges = tuple(i * bin_width for i in range(nbins + 1))
    return HistogramData(
        edges=edges, counts=tuple(counts), bin_width=bin_width, total=len(values)
    )


@dataclass(frozen=True)
class RegionData:
    case: str
    cap: float
    r1: tuple[float, ...]
    outer_r2: tuple[float, ...]
    inner_r2: tuple[float, ...]

    @property
    def coincident(self) -> bool:
        return all(
            abs(a - b) <= 1e-12 for a, b in zip(self.outer_r2, self.inner_r2)
        )


def read_region(path: str) -> RegionData:
    """Accept the region subcommand's JSON (preferred) or CSV form."""
    text = Path(path).read_text()
    if not text.strip():
        raise InputError(f"{path}: empty input")
    if path.endswith(".json") or text.lstrip().startswith("{"):
        try:
            doc = json.loads(text)
            samples = doc["samples"]
            if not samples:
                raise KeyError("samples")
            return RegionData(
                case=doc["case"],
                cap=float(doc["B"]),
                r1=tuple(float(s["R1"]) for s in samples),
                outer_r2=tuple(float(s["outer_R2"]) for s in samples),
                inner_r2=tuple(float(s["inner_R2"]) for s in samples),
            )
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise InputError(f"{path}: not a region document ({exc})") from exc
    cols = read_csv_columns(path, ("R1", "outer_R2", "inner_R2"))
    with open(path, newline="") as fh:
        first = next(csv.DictReader(fh))
    return RegionData(
        case=str(first.get("case", "?")),
        cap=max(cols["R1"]),
        r1=tuple(cols["R1"]),
        outer_r2=tuple(cols["outer_R2"]),
        inner_r2=tuple(cols["inner_R2"]),
    )


@dataclass(frozen=True)
class ConvergenceData:
    n: tuple[float, ...]
    mean: tuple[float, ...]
    stderr: tuple[float, ...]
    asymptote: float


def read_convergence(path: str) -> ConvergenceData:
    cols = read_csv_columns(path, ("n", "mean_T_over_n", "stderr", "t_hat"))
    return ConvergenceData(
        n=tuple(cols["n"]),
        mean=tuple(cols["mean_T_over_n"]),
        stderr=tuple(cols["stderr"]),
        asymptote=cols["t_hat"][0],
    )


def read_deviations(path: str) -> list[float]:
    return read_csv_columns(path, ("D",))["D"]
