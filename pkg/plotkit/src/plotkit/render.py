"""Figure rendering on top of the pure data layer.

Rendering is a function of the input files and the spec alone: fixed
canvas size, fixed dpi, default fonts, no timestamps in the output, so a
rerun reproduces the file byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .data import (
    ConvergenceData,
    HistogramData,
    InputError,
    RegionData,
    bin_deviations,
    read_convergence,
    read_deviations,
    read_region,
)

KINDS = ("histogram", "region", "convergence")

FIGSIZE = (6.4, 4.0)
DPI = 120
# suppress the version-dependent Software chunk so output bytes are stable
PNG_METADATA = {"Software": None}


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: tuple[str, ...]
    output: str
    bin_width: float = 0.005
    xlabel: Optional[str] = None
    ylabel: Optional[str] = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise InputError(f"unknown figure kind {self.kind!r}")
        if not self.inputs:
            raise InputError("no input files")
        if self.bin_width <= 0:
            raise InputError("bin width must be positive")


@dataclass(frozen=True)
class RenderResult:
    """What was drawn, for checking figures without reading pixels back."""

    output: str
    histogram: Optional[HistogramData] = None
    region: Optional[RegionData] = None
    convergence: Optional[ConvergenceData] = None


def _save(fig, spec: FigureSpec) -> None:
    fig.savefig(spec.output, dpi=DPI, metadata=PNG_METADATA)
    plt.close(fig)


def _render_histogram(spec: FigureSpec) -> RenderResult:
    values = read_deviations(spec.inputs[0])
    hist = bin_deviations(values, bin_width=spec.bin_width)
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.bar(
        hist.edges,
        hist.counts,
        width=hist.bin_width,
        align="edge",
        edgecolor="black",
        linewidth=0.4,
    )
    ax.axvline(0.05, linestyle="--", linewidth=1.0, color="tab:red")
    share = hist.mass_below(0.05)
    ax.set_xlabel(spec.xlabel or "relative rate gap D")
    ax.set_ylabel(spec.ylabel or "grid cells")
    ax.set_title(f"{hist.total} cells; {share:.1%} below 0.05")
    _save(fig, spec)
    return RenderResult(output=spec.output, histogram=hist)


def _render_region(spec: FigureSpec) -> RenderResult:
    region = read_region(spec.inputs[0])
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.plot(region.r1, region.outer_r2, label="outer bound", linewidth=1.6)
    ax.plot(
        region.r1,
        region.inner_r2,
        label="achievable",
        linewidth=1.6,
        linestyle="--",
    )
    ax.set_xlabel(spec.xlabel or "primary rate R1")
    ax.set_ylabel(spec.ylabel or "secondary rate R2")
    ax.set_title(f"{region.case}; boundaries {'coincide' if region.coincident else 'differ'}")
    ax.legend()
    ax.set_xlim(0, region.cap * 1.02 if region.cap > 0 else 1)
    ax.set_ylim(bottom=0)
    _save(fig, spec)
    return RenderResult(output=spec.output, region=region)


def _render_convergence(spec: FigureSpec) -> RenderResult:
    conv = read_convergence(spec.inputs[0])
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.errorbar(conv.n, conv.mean, yerr=conv.stderr, fmt="o-", capsize=3)
    ax.axhline(conv.asymptote, linestyle="--", color="tab:red",
               label=f"limit {conv.asymptote:.4f}")
    ax.set_xscale("log")
    ax.set_xlabel(spec.xlabel or "horizon n")
    ax.set_ylabel(spec.ylabel or "T / n")
    ax.legend()
    _save(fig, spec)
    return RenderResult(output=spec.output, convergence=conv)


def render(spec: FigureSpec) -> RenderResult:
    if spec.kind == "histogram":
        return _render_histogram(spec)
    if spec.kind == "region":
        return _render_region(spec)
    return _render_convergence(spec)
