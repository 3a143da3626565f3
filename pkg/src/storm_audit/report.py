"""QualityReport assembly and its JSON / CSV / SVG renderings."""

from __future__ import annotations

import csv
import io
import json
import os
import re
import shutil
import tempfile
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from pathlib import Path
from typing import Any

from . import money, svg
from .anomalies import AnomalyKind, AnomalyRecord, sort_anomalies
from .audit import (
    QUANTILE_KEYS,
    DamageDistribution,
    DamageKind,
    EpisodeDamageSummary,
    LogHistogram,
    MissingStats,
    YearNameStats,
    cumulative_distinct_names,
    first_seen_years,
)

SCHEMA_VERSION = "1"
QUANTILE_METHOD = "nearest-rank"


class PopulationMismatch(ValueError):
    pass


class IoFailure(OSError):
    pass


@dataclass(frozen=True)
class SnapshotFile:
    filename: str
    data_year: int
    created_stamp: str


@dataclass(frozen=True)
class ReportParameters:
    top_n: int = 10
    outlier_threshold: Decimal = Decimal(10) ** 11
    bins: int = 50
    histogram_scale: Decimal = Decimal(1000)
    histogram_upper: Decimal = Decimal(2500)
    missing_as_zero: bool = False
    years: tuple[int, int] | None = None
    quantile_method: str = QUANTILE_METHOD

    def to_dict(self) -> dict[str, Any]:
        return {
            "top_n": self.top_n,
            "outlier_threshold": money.format_usd(self.outlier_threshold),
            "bins": self.bins,
            "histogram_scale": money.format_usd(self.histogram_scale),
            "histogram_upper": money.format_usd(self.histogram_upper),
            "missing_as_zero": self.missing_as_zero,
            "years": list(self.years) if self.years else None,
            "quantile_method": self.quantile_method,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> ReportParameters:
        return cls(
            top_n=d["top_n"],
            outlier_threshold=money.parse_usd(d["outlier_threshold"]),
            bins=d["bins"],
            histogram_scale=money.parse_usd(d["histogram_scale"]),
            histogram_upper=money.parse_usd(d["histogram_upper"]),
            missing_as_zero=d["missing_as_zero"],
            years=tuple(d["years"]) if d["years"] else None,
            quantile_method=d["quantile_method"],
        )


@dataclass(frozen=True)
class QualityReport:
    schema_version: str
    snapshot: list[SnapshotFile]
    population: int
    missing: MissingStats
    year_names: list[YearNameStats]
    frequencies: list[tuple[str, int]]
    distributions: list[DamageDistribution]
    top_episodes: list[EpisodeDamageSummary]
    anomalies: list[AnomalyRecord]
    catalog_label: str
    parameters: ReportParameters = field(default_factory=ReportParameters)
    dropped_records: int = 0
    events_without_episode: int = 0

    @property
    def cumulative_names(self) -> list[tuple[int, int]]:
        return cumulative_distinct_names(self.year_names)

    @property
    def first_seen(self) -> dict[str, int]:
        return first_seen_years(self.year_names)

    def anomaly_counts(self) -> dict[str, int]:
        counts = {k.value: 0 for k in AnomalyKind}
        for a in self.anomalies:
            counts[a.kind.value] += 1
        return counts

    def outliers(self) -> list[AnomalyRecord]:
        return [a for a in self.anomalies if a.kind is AnomalyKind.OUTLIER_EPISODE]


def build_report(
    *,
    snapshot: list[SnapshotFile],
    missing: MissingStats,
    year_names: list[YearNameStats],
    frequencies: list[tuple[str, int]],
    frequency_population: int,
    distributions: list[DamageDistribution],
    top_episodes: list[EpisodeDamageSummary],
    anomalies: list[AnomalyRecord],
    catalog_label: str,
    parameters: ReportParameters = ReportParameters(),
    dropped_records: int = 0,
    events_without_episode: int = 0,
) -> QualityReport:
    """Assemble a report, checking every part was computed over one population."""
    population = missing.population
    populations = {
        "missing": population,
        "year_names": sum(y.total_event_count for y in year_names),
        "frequencies": frequency_population,
    }
    for d in distributions:
        populations[f"distribution {d.kind.value}/{d.event_type or '*'}"] = d.population
    bad = {k: v for k, v in populations.items() if v != population}
    if bad:
        raise PopulationMismatch(f"population {population} disagrees with {bad}")

    return QualityReport(
        schema_version=SCHEMA_VERSION,
        snapshot=sorted(snapshot, key=lambda s: (s.data_year, s.created_stamp, s.filename)),
        population=population,
        missing=missing,
        year_names=sorted(year_names, key=lambda y: y.year),
        frequencies=list(frequencies),
        distributions=list(distributions),
        top_episodes=list(top_episodes),
        anomalies=sort_anomalies(anomalies),
        catalog_label=catalog_label,
        parameters=parameters,
        dropped_records=dropped_records,
        events_without_episode=events_without_episode,
    )


# -- JSON --------------------------------------------------------------------


def _fraction_str(f: Fraction) -> str:
    return f"{f.numerator}/{f.denominator}"


def percent_str(f: Fraction, places: int = 2) -> str:
    """Exact fraction as a percentage rounded half-even to ``places`` decimals."""
    pct = Decimal(f.numerator * 100) / Decimal(f.denominator) if f.denominator else Decimal(0)
    return str(pct.quantize(Decimal(1).scaleb(-places)))


def _edge_str(x: float) -> str:
    return f"{x:.6f}"


def distribution_to_dict(d: DamageDistribution) -> dict[str, Any]:
    h = d.histogram
    return {
        "kind": d.kind.value,
        "event_type": d.event_type,
        "population": d.population,
        "present_count": d.present_count,
        "zero_count": d.zero_count,
        "quantiles": {k: money.format_usd(v) for k, v in d.quantiles.items()},
        "histogram": {
            "transform": "log10(1 + value/scale)",
            "scale": money.format_usd(h.scale),
            "upper": money.format_usd(h.upper),
            "bins": h.bins,
            "overflow": h.overflow,
            "counts": list(h.counts),
            "edges": [_edge_str(e) for e in h.edges()],
        },
    }


def distribution_from_dict(d: dict[str, Any]) -> DamageDistribution:
    h = d["histogram"]
    return DamageDistribution(
        kind=DamageKind(d["kind"]),
        event_type=d["event_type"],
        population=d["population"],
        present_count=d["present_count"],
        zero_count=d["zero_count"],
        quantiles={k: money.parse_usd(v) for k, v in d["quantiles"].items()},
        histogram=LogHistogram(
            scale=money.parse_usd(h["scale"]),
            upper=money.parse_usd(h["upper"]),
            counts=tuple(h["counts"]),
            overflow=h["overflow"],
        ),
    )


def report_to_dict(report: QualityReport) -> dict[str, Any]:
    missing = report.missing
    return {
        "schema_version": report.schema_version,
        "catalog_label": report.catalog_label,
        "parameters": report.parameters.to_dict(),
        "snapshot": [
            {"filename": s.filename, "data_year": s.data_year, "created_stamp": s.created_stamp} for s in report.snapshot
        ],
        "population": report.population,
        "dropped_records": report.dropped_records,
        "events_without_episode": report.events_without_episode,
        "missing": {
            "population": missing.population,
            "variables": {
                v: {"missing_count": c, "fraction": _fraction_str(missing.fraction(v)), "percent": percent_str(missing.fraction(v))}
                for v, c in missing.missing_counts.items()
            },
        },
        "year_names": [
            {
                "year": y.year,
                "distinct_names": sorted(y.distinct_names),
                "distinct_nonstandard": sorted(y.distinct_nonstandard),
                "total_event_count": y.total_event_count,
                "nonstandard_event_count": y.nonstandard_event_count,
                "nonstandard_fraction": _fraction_str(y.nonstandard_fraction),
            }
            for y in report.year_names
        ],
        "cumulative_names": [{"year": y, "count": c} for y, c in report.cumulative_names],
        "first_seen": report.first_seen,
        "frequencies": [{"event_type": t, "count": c} for t, c in report.frequencies],
        "distributions": [distribution_to_dict(d) for d in report.distributions],
        "top_episodes": [
            {
                "episode_id": e.episode_id,
                "year": e.year,
                "month": e.month,
                "total_damage": money.format_usd(e.total_damage),
                "event_count": e.event_count,
            }
            for e in report.top_episodes
        ],
        "anomaly_counts": report.anomaly_counts(),
        "anomalies": [a.to_dict() for a in report.anomalies],
    }


def report_from_dict(d: dict[str, Any]) -> QualityReport:
    return QualityReport(
        schema_version=d["schema_version"],
        snapshot=[SnapshotFile(s["filename"], s["data_year"], s["created_stamp"]) for s in d["snapshot"]],
        population=d["population"],
        missing=MissingStats(
            d["missing"]["population"],
            {v: m["missing_count"] for v, m in d["missing"]["variables"].items()},
        ),
        year_names=[
            YearNameStats(
                year=y["year"],
                distinct_names=frozenset(y["distinct_names"]),
                distinct_nonstandard=frozenset(y["distinct_nonstandard"]),
                total_event_count=y["total_event_count"],
                nonstandard_event_count=y["nonstandard_event_count"],
            )
            for y in d["year_names"]
        ],
        frequencies=[(f["event_type"], f["count"]) for f in d["frequencies"]],
        distributions=[distribution_from_dict(x) for x in d["distributions"]],
        top_episodes=[
            EpisodeDamageSummary(
                episode_id=e["episode_id"],
                year=e["year"],
                month=e["month"],
                total_damage=money.parse_usd(e["total_damage"]),
                event_count=e["event_count"],
            )
            for e in d["top_episodes"]
        ],
        anomalies=[AnomalyRecord.from_dict(a) for a in d["anomalies"]],
        catalog_label=d["catalog_label"],
        parameters=ReportParameters.from_dict(d["parameters"]),
        dropped_records=d["dropped_records"],
        events_without_episode=d["events_without_episode"],
    )


def emit_json(report: QualityReport) -> bytes:
    text = json.dumps(report_to_dict(report), sort_keys=True, ensure_ascii=False, indent=2, separators=(",", ": "))
    return (text + "\n").encode("utf-8")


def parse_json(data: bytes) -> QualityReport:
    return report_from_dict(json.loads(data.decode("utf-8")))


# -- CSV ---------------------------------------------------------------------

TOP_EPISODE_COLUMNS = ("EpisodeID", "Year", "Month", "TotDamage")


def _csv_text(header: tuple[str, ...], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def csv_tables(report: QualityReport) -> dict[str, str]:
    missing = report.missing
    cumulative = dict(report.cumulative_names)
    tables = {
        "missing.csv": _csv_text(
            ("Variable", "MissingCount", "Population", "Fraction", "Percent"),
            (
                (v, c, missing.population, _fraction_str(missing.fraction(v)), percent_str(missing.fraction(v)))
                for v, c in missing.missing_counts.items()
            ),
        ),
        "year_names.csv": _csv_text(
            ("Year", "DistinctNames", "DistinctNonStandard", "TotalEvents", "NonStandardEvents",
             "NonStandardFraction", "CumulativeDistinctNames", "NonStandardNames"),
            (
                (y.year, len(y.distinct_names), len(y.distinct_nonstandard), y.total_event_count,
                 y.nonstandard_event_count, _fraction_str(y.nonstandard_fraction), cumulative[y.year],
                 ";".join(sorted(y.distinct_nonstandard)))
                for y in report.year_names
            ),
        ),
        "frequencies.csv": _csv_text(
            ("Rank", "EventType", "Count"),
            ((i + 1, t, c) for i, (t, c) in enumerate(report.frequencies)),
        ),
        "top_episodes.csv": _csv_text(
            TOP_EPISODE_COLUMNS,
            ((e.episode_id, e.year, e.month, money.format_usd(e.total_damage)) for e in report.top_episodes),
        ),
        "anomalies.csv": _csv_text(
            ("Kind", "SourceFile", "RowNumber", "EpisodeID", "Detail"),
            (
                (a.kind.value, a.source_file, "" if a.row_number is None else a.row_number, a.episode_id or "", a.detail)
                for a in report.anomalies
            ),
        ),
        "distributions.csv": _csv_text(
            ("Kind", "EventType", "Statistic", "Lower", "Upper", "Value"),
            _distribution_rows(report.distributions),
        ),
    }
    return tables


def _distribution_rows(distributions: list[DamageDistribution]):
    for d in distributions:
        etype = d.event_type or ""
        yield (d.kind.value, etype, "present_count", "", "", d.present_count)
        yield (d.kind.value, etype, "zero_count", "", "", d.zero_count)
        for k in QUANTILE_KEYS:
            if k in d.quantiles:
                yield (d.kind.value, etype, "quantile", k, k, money.format_usd(d.quantiles[k]))
        for lo, hi, c in d.histogram.rows():
            yield (d.kind.value, etype, "bin", _edge_str(lo), _edge_str(hi), c)
        yield (d.kind.value, etype, "overflow", _edge_str(d.histogram.edges()[-1]), "", d.histogram.overflow)


def write_files_atomically(out_dir: Path, files: dict[str, str]) -> list[Path]:
    """Write all files or none: stage in a sibling temp dir, then rename."""
    out_dir = Path(out_dir)
    try:
        staging = Path(tempfile.mkdtemp(prefix=".staging-", dir=out_dir))
    except OSError as exc:
        raise IoFailure(f"cannot write to {out_dir}: {exc}") from exc
    written: list[Path] = []
    try:
        for name, text in files.items():
            (staging / name).write_bytes(text.encode("utf-8"))
        for name in files:
            target = out_dir / name
            os.replace(staging / name, target)
            written.append(target)
    except OSError as exc:
        for p in written:
            p.unlink(missing_ok=True)
        raise IoFailure(f"writing {out_dir} failed: {exc}") from exc
    finally:
        shutil.rmtree(staging, ignore_errors=True)
    return written


def emit_csv_tables(report: QualityReport, out_dir: Path | str) -> list[Path]:
    return write_files_atomically(Path(out_dir), csv_tables(report))


# -- SVG ---------------------------------------------------------------------


def _slug(text: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", text.lower()).strip("_")


def _fraction_label(f: Fraction) -> str:
    return f"{float(f):.6f}"


def histogram_svg(d: DamageDistribution) -> str:
    h = d.histogram
    labels = [_edge_str(lo) for lo, _, _ in h.rows()]
    what = d.kind.value.lower() + " damage"
    title = f"Distribution of {what}" + (f" for '{d.event_type.lower()}' events" if d.event_type else "")
    return svg.bar_chart(
        title,
        labels,
        list(h.counts),
        x_label=f"log10(1 + damage / {money.format_usd(h.scale)} USD)",
        y_label=f"Count (overflow beyond upper limit: {h.overflow})",
    )


def figures(report: QualityReport) -> dict[str, str]:
    years = [str(y.year) for y in report.year_names]
    cumulative = report.cumulative_names
    missing = report.missing
    ordered_missing = sorted(missing.missing_counts, key=lambda v: (-missing.fraction(v), v))
    out = {
        "nonstandard_names.svg": svg.bar_chart(
            "Non-standard event names per year",
            years,
            [len(y.distinct_nonstandard) for y in report.year_names],
            x_label="Year",
            y_label="Yearly totals",
        ),
        "cumulative_names.svg": svg.bar_chart(
            "Cumulative distinct event names",
            [str(y) for y, _ in cumulative],
            [c for _, c in cumulative],
            hlines=(48, 55),
            x_label="Year",
            y_label="Cumulative totals",
        ),
        "nonstandard_fraction.svg": svg.bar_chart(
            "Share of events with non-standard names",
            years,
            [y.nonstandard_fraction for y in report.year_names],
            x_label="Year",
            y_label="Fraction of events",
            value_format=_fraction_label,
        ),
        "missing_values.svg": svg.bar_chart(
            "Share of missing values per variable",
            ordered_missing,
            [missing.fraction(v) for v in ordered_missing],
            y_max=1,
            x_label="Variable",
            y_label="Missing fraction",
            value_format=_fraction_label,
        ),
    }
    for d in report.distributions:
        name = "hist_" + _slug(d.kind.value) + (("_" + _slug(d.event_type)) if d.event_type else "") + ".svg"
        out[name] = histogram_svg(d)
    return out


def emit_figures(report: QualityReport, out_dir: Path | str) -> list[Path]:
    return write_files_atomically(Path(out_dir), figures(report))
