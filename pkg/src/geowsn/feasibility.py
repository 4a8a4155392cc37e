"""Harvest feasibility analysis over recorded temperature traces.

Takes a long soil/air temperature record per transect, pushes every
sample through the thermal stack and the matched-load power curve, and
reduces to daily and whole-window means.  The averaging order matters:
power is quadratic in the gradient, so the mean of per-sample powers
is at least the power of the mean gradient, with a large gap wherever
the gradient fluctuates around zero.  Reports therefore always carry
that caveat, and the whole-window means are means over samples, never
means of daily means.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date
from pathlib import Path

import numpy as np

from .energy import TegParams, ThermalStack, delta_t_teg, teg_power

TRACE_HEADER = ("timestamp_unix", "transect", "t_soil_c", "t_air_c")
REPORT_HEADER = ("date", "transect", "mean_dt_c", "mean_dt_teg_k",
                 "mean_power_mw")

_EPOCH_ORDINAL = date(1970, 1, 1).toordinal()
SECONDS_PER_DAY = 86400

AVERAGING_NOTE = (
    "power is computed per sample and then averaged; whole-window rows are"
    " means over samples, not means of daily means"
)
CONVEXITY_CAVEAT = (
    "mean(P(dT)) >= P(mean(dT)) because power is convex in the gradient,"
    " with equality only for a constant gradient; published means computed"
    " from mean temperatures are not reproducible for transects whose"
    " gradient fluctuates near zero"
)


class TraceFormatError(ValueError):
    """A malformed temperature trace; the message names the line."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class TransectSeries:
    """All samples of one transect, as parallel arrays."""

    transect: str
    timestamps: np.ndarray
    t_soil_c: np.ndarray
    t_air_c: np.ndarray

    def __len__(self) -> int:
        return len(self.timestamps)


def load_temperature_trace(path: str | Path) -> dict[str, TransectSeries]:
    """Read a temperature trace CSV into per-transect series.

    Expects the exact header ``timestamp_unix,transect,t_soil_c,t_air_c``;
    timestamps must be non-decreasing within each transect.
    """
    rows: dict[str, list[tuple[int, float, float]]] = {}
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != TRACE_HEADER:
            raise TraceFormatError(
                f"expected header {','.join(TRACE_HEADER)}", line=1
            )
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise TraceFormatError(f"expected 4 fields, got {len(row)}", line)
            try:
                timestamp = int(row[0])
                t_soil = float(row[2])
                t_air = float(row[3])
            except ValueError as exc:
                raise TraceFormatError(str(exc), line) from None
            transect = row[1].strip()
            if not transect:
                raise TraceFormatError("empty transect label", line)
            samples = rows.setdefault(transect, [])
            if samples and timestamp < samples[-1][0]:
                raise TraceFormatError(
                    f"timestamp goes backwards within transect {transect}", line
                )
            samples.append((timestamp, t_soil, t_air))
    if not rows:
        raise TraceFormatError("no samples")
    return {
        transect: TransectSeries(
            transect,
            np.array([s[0] for s in samples], dtype=np.int64),
            np.array([s[1] for s in samples], dtype=float),
            np.array([s[2] for s in samples], dtype=float),
        )
        for transect, samples in rows.items()
    }


@dataclass(frozen=True)
class PeriodMeans:
    """Means over one reporting period (a UTC day or the whole window)."""

    date: str
    transect: str
    mean_dt_c: float
    mean_dt_teg_k: float
    mean_power_w: float


@dataclass(frozen=True)
class TransectAnalysis:
    transect: str
    timestamps: np.ndarray
    dt_env_c: np.ndarray
    dt_teg_k: np.ndarray
    power_w: np.ndarray
    daily: tuple[PeriodMeans, ...]
    yearly: PeriodMeans


@dataclass(frozen=True)
class FeasibilityReport:
    transects: tuple[TransectAnalysis, ...]
    notes: tuple[str, ...]
    #: transect -> (harvested mean W, needed W, feasible), when a node
    #: power was given
    verdicts: dict[str, tuple[float, float, bool]] | None


def _day_label(day_index: int) -> str:
    return date.fromordinal(_EPOCH_ORDINAL + int(day_index)).isoformat()


def analyze_trace(
    series_by_transect: dict[str, TransectSeries],
    stack: ThermalStack,
    teg: TegParams,
    *,
    clamp_positive: bool = False,
    node_power_w: float | None = None,
    converter_efficiency: float = 1.0,
) -> FeasibilityReport:
    """Per-sample harvest power, reduced to daily and window means.

    ``clamp_positive`` zeroes power wherever the soil-air gradient is
    negative (a harvester behind an ideal rectifier would still see the
    squared gradient; a converter with a minimum startup gradient would
    not, which is what this models).
    """
    if not series_by_transect:
        raise TraceFormatError("no samples")
    analyses = []
    verdicts: dict[str, tuple[float, float, bool]] = {}
    for transect, series in series_by_transect.items():
        if len(series) == 0:
            raise TraceFormatError(f"no samples for transect {transect}")
        dt_env = series.t_soil_c - series.t_air_c
        dt_teg = delta_t_teg(series.t_soil_c, series.t_air_c, stack)
        power = teg_power(dt_teg, teg)
        if clamp_positive:
            power = np.where(dt_env < 0.0, 0.0, power)
        day_index = series.timestamps // SECONDS_PER_DAY
        daily = []
        for day in np.unique(day_index):
            mask = day_index == day
            daily.append(PeriodMeans(
                _day_label(day),
                transect,
                float(dt_env[mask].mean()),
                float(dt_teg[mask].mean()),
                float(power[mask].mean()),
            ))
        yearly = PeriodMeans(
            "yearly",
            transect,
            float(dt_env.mean()),
            float(dt_teg.mean()),
            float(power.mean()),
        )
        analyses.append(TransectAnalysis(
            transect, series.timestamps, dt_env, dt_teg, power,
            tuple(daily), yearly,
        ))
        if node_power_w is not None:
            harvested = converter_efficiency * yearly.mean_power_w
            verdicts[transect] = (
                yearly.mean_power_w, node_power_w, harvested >= node_power_w
            )
    return FeasibilityReport(
        tuple(analyses),
        (AVERAGING_NOTE, CONVEXITY_CAVEAT),
        verdicts if node_power_w is not None else None,
    )


def write_report_csv(report: FeasibilityReport, target) -> None:
    """Write the daily/window means as CSV with leading note lines.

    ``target`` is a path or an open text handle.  Power is reported in
    mW; the yearly summary rows carry ``yearly`` in the date column.
    """
    if hasattr(target, "write"):
        _write_report(report, target)
    else:
        with open(target, "w", newline="") as handle:
            _write_report(report, handle)


def _write_report(report: FeasibilityReport, handle) -> None:
    for note in report.notes:
        handle.write(f"# {note}\n")
    writer = csv.writer(handle)
    writer.writerow(REPORT_HEADER)
    for analysis in report.transects:
        for row in analysis.daily:
            writer.writerow(_format_row(row))
    for analysis in report.transects:
        writer.writerow(_format_row(analysis.yearly))
    if report.verdicts is not None:
        for transect, (harvested, needed, feasible) in report.verdicts.items():
            verdict = "feasible" if feasible else "not feasible"
            handle.write(
                f"# transect {transect}: harvest {verdict}"
                f" (mean {harvested * 1e3:.4g} mW vs"
                f" node draw {needed * 1e3:.4g} mW)\n"
            )


def _format_row(row: PeriodMeans) -> tuple:
    return (
        row.date,
        row.transect,
        f"{row.mean_dt_c:.6g}",
        f"{row.mean_dt_teg_k:.6g}",
        f"{row.mean_power_w * 1e3:.6g}",
    )
