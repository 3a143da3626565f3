"""Audit statistics over normalized events.

Every statistic is backed by :class:`AuditAccumulator`, whose partial
states merge associatively and commutatively, so per-file results computed
in separate workers combine into exactly the single-pass answer. The
module-level functions are thin single-pass wrappers.
"""

from __future__ import annotations

import enum
import math
from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from typing import Iterable

from . import money
from .anomalies import AnomalyKind, AnomalyRecord
from .normalize import CanonicalCatalog, NormalizedEvent

MISSING_VARIABLES = ("EpisodeID", "PropertyDamage", "CropDamage", "EventType")

QUANTILE_KEYS = ("0", "0.25", "0.5", "0.75", "0.9", "0.99", "1")

DEFAULT_BINS = 50
DEFAULT_SCALE = Decimal(1000)
DEFAULT_HISTOGRAM_UPPER = Decimal(2500)
DEFAULT_OUTLIER_THRESHOLD = Decimal(10) ** 11


class DamageKind(str, enum.Enum):
    PROPERTY = "Property"
    CROP = "Crop"
    TOTAL = "Total"


def damage_of(event: NormalizedEvent, kind: DamageKind) -> Decimal | None:
    if kind is DamageKind.PROPERTY:
        return event.property_damage
    if kind is DamageKind.CROP:
        return event.crop_damage
    return event.total_damage


@dataclass(frozen=True)
class YearNameStats:
    year: int
    distinct_names: frozenset[str]
    distinct_nonstandard: frozenset[str]
    total_event_count: int
    nonstandard_event_count: int

    @property
    def nonstandard_fraction(self) -> Fraction:
        if self.total_event_count == 0:
            return Fraction(0)
        return Fraction(self.nonstandard_event_count, self.total_event_count)


@dataclass(frozen=True)
class MissingStats:
    population: int
    missing_counts: dict[str, int]

    def fraction(self, variable: str) -> Fraction:
        if self.population == 0:
            return Fraction(0)
        return Fraction(self.missing_counts[variable], self.population)

    @property
    def fractions(self) -> dict[str, Fraction]:
        return {v: self.fraction(v) for v in self.missing_counts}


@dataclass(frozen=True)
class LogHistogram:
    """Equal-width bins over ``log10(1 + value/scale)`` on ``[0, log10(upper)]``.

    The last bin is closed on the right; values beyond ``upper`` are counted in
    ``overflow`` rather than in any bin.
    """

    scale: Decimal
    upper: Decimal
    counts: tuple[int, ...]
    overflow: int = 0

    @property
    def bins(self) -> int:
        return len(self.counts)

    def edges(self) -> list[float]:
        top = math.log10(self.upper)
        return [top * i / self.bins for i in range(self.bins + 1)]

    def rows(self) -> list[tuple[float, float, int]]:
        e = self.edges()
        return [(e[i], e[i + 1], c) for i, c in enumerate(self.counts)]


@dataclass(frozen=True)
class DamageDistribution:
    kind: DamageKind
    event_type: str | None
    population: int
    present_count: int
    zero_count: int
    quantiles: dict[str, Decimal]
    histogram: LogHistogram


@dataclass(frozen=True)
class EpisodeDamageSummary:
    episode_id: str
    year: int
    month: str
    total_damage: Decimal
    event_count: int


def nearest_rank_quantiles(values: Counter) -> dict[str, Decimal]:
    """Nearest-rank quantiles of a multiset given as value -> multiplicity."""
    n = sum(values.values())
    if n == 0:
        return {}
    ordered = sorted(values.items())
    out = {}
    for key in QUANTILE_KEYS:
        rank = max(1, math.ceil(Fraction(key) * n))
        seen = 0
        for value, mult in ordered:
            seen += mult
            if seen >= rank:
                out[key] = value
                break
    return out


def log_histogram(values: Counter, bins: int, scale: Decimal, upper: Decimal = DEFAULT_HISTOGRAM_UPPER) -> LogHistogram:
    """Bin ``log10(1 + v/scale)`` exactly.

    ``t = 1 + v/scale`` lies in bin ``i`` iff ``upper**(i/bins) <= t``, which is
    tested as ``t**bins >= upper**i`` in rational arithmetic.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    if scale <= 0:
        raise ValueError("scale must be > 0")
    s = Fraction(scale)
    u = Fraction(upper)
    thresholds = [u**i for i in range(bins + 1)]
    counts = [0] * bins
    overflow = 0
    for value, mult in values.items():
        t_pow = ((s + Fraction(value)) / s) ** bins
        if t_pow > thresholds[-1]:
            overflow += mult
            continue
        i = bisect_right(thresholds, t_pow) - 1
        counts[min(i, bins - 1)] += mult
    return LogHistogram(scale=scale, upper=upper, counts=tuple(counts), overflow=overflow)


@dataclass
class AuditAccumulator:
    population: int = 0
    missing: Counter = field(default_factory=Counter)
    year_type_counts: dict[int, Counter] = field(default_factory=dict)
    type_counts: Counter = field(default_factory=Counter)
    # (DamageKind value, event_type) -> Counter of present amounts
    values: dict[tuple[str, str], Counter] = field(default_factory=dict)
    # (episode_id, year, month) -> [exact sum, summed event count]
    episodes: dict[tuple[str, int, str], list] = field(default_factory=dict)
    events_without_episode: int = 0
    dropped_records: int = 0
    anomalies: list[AnomalyRecord] = field(default_factory=list)

    def add(self, event: NormalizedEvent) -> None:
        self.population += 1
        if event.episode_id is None:
            self.missing["EpisodeID"] += 1
            self.events_without_episode += 1
        if event.property_damage is None:
            self.missing["PropertyDamage"] += 1
        if event.crop_damage is None:
            self.missing["CropDamage"] += 1
        if not event.event_type:
            self.missing["EventType"] += 1

        self.year_type_counts.setdefault(event.year, Counter())[event.event_type] += 1
        if event.event_type:
            self.type_counts[event.event_type] += 1

        for kind in DamageKind:
            v = damage_of(event, kind)
            if v is not None:
                self.values.setdefault((kind.value, event.event_type), Counter())[v] += 1

        if event.episode_id is not None and event.total_damage is not None:
            key = (event.episode_id, event.year, event.month)
            slot = self.episodes.get(key)
            if slot is None:
                self.episodes[key] = [event.total_damage, 1]
            else:
                slot[0] = money.add(slot[0], event.total_damage)
                slot[1] += 1

    def add_all(self, events: Iterable[NormalizedEvent]) -> AuditAccumulator:
        for e in events:
            self.add(e)
        return self

    def merge(self, other: AuditAccumulator) -> AuditAccumulator:
        self.population += other.population
        self.missing.update(other.missing)
        for year, counts in other.year_type_counts.items():
            self.year_type_counts.setdefault(year, Counter()).update(counts)
        self.type_counts.update(other.type_counts)
        for key, counts in other.values.items():
            self.values.setdefault(key, Counter()).update(counts)
        for key, (total, n) in other.episodes.items():
            slot = self.episodes.get(key)
            if slot is None:
                self.episodes[key] = [total, n]
            else:
                slot[0] = money.add(slot[0], total)
                slot[1] += n
        self.events_without_episode += other.events_without_episode
        self.dropped_records += other.dropped_records
        self.anomalies.extend(other.anomalies)
        return self

    # -- finalizers ---------------------------------------------------------

    def missing_stats(self) -> MissingStats:
        return MissingStats(self.population, {v: self.missing.get(v, 0) for v in MISSING_VARIABLES})

    def year_name_stats(self, catalog: CanonicalCatalog) -> list[YearNameStats]:
        out = []
        for year in sorted(self.year_type_counts):
            counts = self.year_type_counts[year]
            names = frozenset(n for n in counts if n)
            nonstandard = frozenset(n for n in names if n not in catalog)
            out.append(
                YearNameStats(
                    year=year,
                    distinct_names=names,
                    distinct_nonstandard=nonstandard,
                    total_event_count=sum(counts.values()),
                    nonstandard_event_count=sum(counts[n] for n in nonstandard),
                )
            )
        return out

    def frequencies(self, k: int) -> list[tuple[str, int]]:
        if k < 1:
            raise ValueError("k must be >= 1")
        ranked = sorted(self.type_counts.items(), key=lambda item: (-item[1], item[0]))
        return ranked[:k]

    def damage_values(self, kind: DamageKind, event_type: str | None = None) -> Counter:
        merged: Counter = Counter()
        for (k, etype), counts in self.values.items():
            if k == kind.value and (event_type is None or etype == event_type):
                merged.update(counts)
        return merged

    def distribution(
        self,
        kind: DamageKind,
        event_type: str | None = None,
        bins: int = DEFAULT_BINS,
        scale: Decimal = DEFAULT_SCALE,
        upper: Decimal = DEFAULT_HISTOGRAM_UPPER,
    ) -> DamageDistribution:
        values = self.damage_values(kind, event_type)
        return DamageDistribution(
            kind=kind,
            event_type=event_type,
            population=self.population,
            present_count=sum(values.values()),
            zero_count=sum(m for v, m in values.items() if v == 0),
            quantiles=nearest_rank_quantiles(values),
            histogram=log_histogram(values, bins, scale, upper),
        )

    def episode_totals(self) -> list[EpisodeDamageSummary]:
        return [
            EpisodeDamageSummary(episode_id=eid, year=year, month=month, total_damage=money.canonical(total), event_count=n)
            for (eid, year, month), (total, n) in sorted(self.episodes.items(), key=lambda kv: kv[0])
        ]


# -- single-pass operations --------------------------------------------------


def missing_value_stats(events: Iterable[NormalizedEvent]) -> MissingStats:
    return AuditAccumulator().add_all(events).missing_stats()


def year_name_stats(events: Iterable[NormalizedEvent], catalog: CanonicalCatalog) -> list[YearNameStats]:
    return AuditAccumulator().add_all(events).year_name_stats(catalog)


def cumulative_distinct_names(stats: list[YearNameStats]) -> list[tuple[int, int]]:
    seen: set[str] = set()
    out = []
    for s in stats:
        seen |= s.distinct_names
        out.append((s.year, len(seen)))
    return out


def first_seen_years(stats: list[YearNameStats], nonstandard_only: bool = True) -> dict[str, int]:
    """Year in which each (non-standard) name first occurs."""
    first: dict[str, int] = {}
    for s in sorted(stats, key=lambda s: s.year):
        names = s.distinct_nonstandard if nonstandard_only else s.distinct_names
        for n in names:
            first.setdefault(n, s.year)
    return dict(sorted(first.items()))


def event_type_frequencies(events: Iterable[NormalizedEvent], k: int) -> list[tuple[str, int]]:
    return AuditAccumulator().add_all(events).frequencies(k)


def damage_distribution(
    events: Iterable[NormalizedEvent],
    kind: DamageKind,
    filter_event_type: str | None = None,
    bins: int = DEFAULT_BINS,
    scale: Decimal = DEFAULT_SCALE,
    upper: Decimal = DEFAULT_HISTOGRAM_UPPER,
) -> DamageDistribution:
    return AuditAccumulator().add_all(events).distribution(kind, filter_event_type, bins, scale, upper)


def episode_totals(events: Iterable[NormalizedEvent]) -> list[EpisodeDamageSummary]:
    return AuditAccumulator().add_all(events).episode_totals()


def top_episodes(summaries: Iterable[EpisodeDamageSummary], n: int) -> list[EpisodeDamageSummary]:
    if n < 1:
        raise ValueError("n must be >= 1")
    return _ranked(summaries)[:n]


def _ranked(summaries: Iterable[EpisodeDamageSummary]) -> list[EpisodeDamageSummary]:
    return sorted(summaries, key=lambda s: (-s.total_damage, s.episode_id, s.year, s.month))


def flag_outliers(summaries: Iterable[EpisodeDamageSummary], threshold: Decimal = DEFAULT_OUTLIER_THRESHOLD) -> list[AnomalyRecord]:
    if threshold <= 0:
        raise ValueError("threshold must be > 0")
    return [
        AnomalyRecord(
            kind=AnomalyKind.OUTLIER_EPISODE,
            source_file="",
            row_number=None,
            detail=f"episode total {money.format_usd(s.total_damage)} USD ({s.month} {s.year}) >= {money.format_usd(threshold)}",
            episode_id=s.episode_id,
        )
        for s in _ranked(summaries)
        if s.total_damage >= threshold
    ]
