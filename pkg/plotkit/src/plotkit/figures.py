"""Figure builders: rate-region frontiers and WSR-vs-SNR curves.

Both builders are pure functions of the CSV contents: rows are grouped and
ordered by columns the schema already carries (weight ratio for the region
sweep, SNR for the power sweep) and the rates themselves are plotted as-is,
never rescaled.  All validation happens before any figure object exists, so
a bad input never leaves a half-written image behind.
"""

import math
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .reader import SchemaError, read_rows

RATE_REGION = "rate-region"
WSR_CURVES = "wsr-curves"

_STUDY_OF_KIND = {RATE_REGION: "rate-region", WSR_CURVES: "wsr-vs-snr"}


@dataclass(frozen=True)
class FigureSpec:
    """One figure request: where the data lives, what to draw, where to put it.

    kind is "rate-region" or "wsr-curves" and must match the study values
    present in the CSV.  schemes / csit_values, when given, keep only the
    listed series.
    """

    csv_path: str
    kind: str
    out_path: str
    title: str | None = None
    schemes: tuple | None = None
    csit_values: tuple | None = None


@dataclass(frozen=True)
class Series:
    """One plotted line: label plus the point coordinates actually drawn."""

    label: str
    x: tuple
    y: tuple


@dataclass(frozen=True)
class FigureSummary:
    """What a builder drew, for callers and tests to inspect."""

    out_path: str
    kind: str
    series: tuple
    xlabel: str
    ylabel: str


def _select(spec, kind):
    """Read the CSV and keep rows matching the figure kind and filters."""
    if spec.kind != kind:
        raise SchemaError("spec kind %r does not match builder for %r"
                          % (spec.kind, kind))
    rows = read_rows(spec.csv_path)
    study = _STUDY_OF_KIND[kind]
    kept = [r for r in rows if r.study == study]
    if not kept:
        seen = sorted({r.study for r in rows})
        raise SchemaError("%s: no study=%s rows (file has: %s)"
                          % (spec.csv_path, study, ", ".join(seen)))
    if spec.schemes is not None:
        kept = [r for r in kept if r.scheme in spec.schemes]
    if spec.csit_values is not None:
        kept = [r for r in kept if r.csit in spec.csit_values]
    if not kept:
        raise SchemaError("%s: no rows left after scheme/csit filters"
                          % spec.csv_path)
    return kept


def _render(spec, kind, series, xlabel, ylabel, marker):
    fig, ax = plt.subplots(figsize=(5.2, 4.0))
    try:
        for s in series:
            ax.plot(s.x, s.y, marker=marker, markersize=4, label=s.label)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.grid(True, alpha=0.4)
        ax.legend()
        if spec.title:
            ax.set_title(spec.title)
        fig.tight_layout()
        fig.savefig(spec.out_path, dpi=150)
    finally:
        plt.close(fig)
    return FigureSummary(out_path=spec.out_path, kind=kind,
                         series=tuple(series), xlabel=xlabel, ylabel=ylabel)


def _weight_ratio(row):
    if row.weight_near > 0.0:
        return row.weight_edge / row.weight_near
    return math.inf


def plot_rate_region(spec):
    """Near-rate vs edge-rate frontier, one curve per scheme.

    Points within a curve follow the weight sweep (edge/near weight ratio
    ascending), tracing the frontier from the near-favoring corner to the
    edge-favoring one.
    """
    kept = _select(spec, RATE_REGION)
    series = []
    for scheme in sorted({r.scheme for r in kept}):
        pts = sorted((r for r in kept if r.scheme == scheme), key=_weight_ratio)
        series.append(Series(label=scheme,
                             x=tuple(r.mean_rate_near for r in pts),
                             y=tuple(r.mean_rate_edge for r in pts)))
    return _render(spec, RATE_REGION, series,
                   "near-user rate (bits/s/Hz)", "edge-user rate (bits/s/Hz)",
                   marker="o")


def plot_wsr_curves(spec):
    """Weighted sum-rate vs SNR, one line per (scheme, csit) pair."""
    kept = _select(spec, WSR_CURVES)
    series = []
    for scheme, csit in sorted({(r.scheme, r.csit) for r in kept}):
        pts = sorted((r for r in kept if r.scheme == scheme and r.csit == csit),
                     key=lambda r: r.snr_db)
        series.append(Series(label="%s (%s)" % (scheme, csit),
                             x=tuple(r.snr_db for r in pts),
                             y=tuple(r.mean_wsr for r in pts)))
    return _render(spec, WSR_CURVES, series,
                   "SNR (dB)", "weighted sum-rate (bits/s/Hz)",
                   marker="s")
