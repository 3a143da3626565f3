"""File-level audit pass and the parallel fold over files."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path
from typing import Iterable

from .anomalies import AnomalyKind, AnomalyRecord
from .audit import AuditAccumulator, DamageKind, flag_outliers, top_episodes
from .normalize import BadYear, CanonicalCatalog, DamageFlag, normalize_record
from .report import QualityReport, ReportParameters, SnapshotFile, build_report
from .stormcsv import open_event_stream

log = logging.getLogger(__name__)

_FLAG_ANOMALIES = (
    (DamageFlag.UNKNOWN_MAGNITUDE, AnomalyKind.UNKNOWN_MAGNITUDE),
    (DamageFlag.DIGIT_MAGNITUDE_SUSPECT, AnomalyKind.DIGIT_MAGNITUDE),
    (DamageFlag.BARE_MAGNITUDE, AnomalyKind.BARE_MAGNITUDE),
    (DamageFlag.UNPARSEABLE_MANTISSA, AnomalyKind.UNPARSEABLE_DAMAGE),
)


@dataclass(frozen=True)
class AuditInput:
    path: Path
    source_name: str
    data_year: int | None = None
    created_stamp: str = ""


def audit_file(item: AuditInput, catalog: CanonicalCatalog, missing_as_zero: bool = False) -> AuditAccumulator:
    acc = AuditAccumulator()
    stream = open_event_stream(item.path, item.source_name)
    anomalies = acc.anomalies
    for raw in stream:
        try:
            event = normalize_record(raw, catalog, missing_as_zero)
        except BadYear as exc:
            acc.dropped_records += 1
            anomalies.append(AnomalyRecord(AnomalyKind.BAD_YEAR, raw.source_file, raw.row_number, f"{exc}; record dropped", raw.episode_id or None))
            continue
        if item.data_year is not None and event.year != item.data_year:
            anomalies.append(
                AnomalyRecord(
                    AnomalyKind.BAD_YEAR,
                    raw.source_file,
                    raw.row_number,
                    f"YEAR {event.year} differs from file year {item.data_year}; record kept",
                    event.episode_id,
                )
            )
        if event.flags:
            for column, flags, text in (
                ("DAMAGE_PROPERTY", event.property_flags, raw.damage_property_raw),
                ("DAMAGE_CROPS", event.crop_flags, raw.damage_crops_raw),
            ):
                for flag, kind in _FLAG_ANOMALIES:
                    if flag in flags:
                        anomalies.append(AnomalyRecord(kind, raw.source_file, raw.row_number, f"{column}={text!r}", event.episode_id))
        acc.add(event)
    anomalies.extend(stream.anomalies)
    return acc


def _audit_file_star(args) -> AuditAccumulator:
    return audit_file(*args)


def run_audit(
    inputs: Iterable[AuditInput],
    catalog: CanonicalCatalog,
    workers: int = 1,
    missing_as_zero: bool = False,
) -> AuditAccumulator:
    """Audit every file and merge the partial results in input order."""
    items = list(inputs)
    total = AuditAccumulator()
    jobs = [(item, catalog, missing_as_zero) for item in items]
    if workers <= 1 or len(items) <= 1:
        partials = map(_audit_file_star, jobs)
        for part in partials:
            total.merge(part)
        return total
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        for part in pool.map(_audit_file_star, jobs):
            total.merge(part)
    return total


def assemble_report(
    acc: AuditAccumulator,
    catalog: CanonicalCatalog,
    snapshot: list[SnapshotFile],
    parameters: ReportParameters = ReportParameters(),
    extra_anomalies: Iterable[AnomalyRecord] = (),
) -> QualityReport:
    """Finalize an accumulator into a QualityReport with the standard sections."""
    p = parameters
    frequencies = acc.frequencies(p.top_n)
    distributions = [acc.distribution(kind, None, p.bins, p.histogram_scale, p.histogram_upper) for kind in DamageKind]
    if frequencies:
        distributions.append(acc.distribution(DamageKind.TOTAL, frequencies[0][0], p.bins, p.histogram_scale, p.histogram_upper))
    episodes = acc.episode_totals()
    anomalies = list(acc.anomalies) + list(extra_anomalies) + flag_outliers(episodes, p.outlier_threshold)
    return build_report(
        snapshot=snapshot,
        missing=acc.missing_stats(),
        year_names=acc.year_name_stats(catalog),
        frequencies=frequencies,
        frequency_population=acc.population,
        distributions=distributions,
        top_episodes=top_episodes(episodes, p.top_n),
        anomalies=anomalies,
        catalog_label=catalog.source_label,
        parameters=p,
        dropped_records=acc.dropped_records,
        events_without_episode=acc.events_without_episode,
    )
