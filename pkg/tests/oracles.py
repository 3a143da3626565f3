"""Naive reference implementations used to cross-check the real code paths.

Nothing here imports the functions under test. Amounts are Fractions, logs
are computed in high precision, and every statistic is recomputed from the
raw event list.
"""

from __future__ import annotations

import functools
import math
from decimal import Decimal, localcontext
from fractions import Fraction

DIGITS = "0123456789"

# Written out literally rather than derived from a rule.
MULTIPLIER = {
    "0": 1, "1": 10, "2": 100, "3": 1000, "4": 10000, "5": 100000, "6": 1000000,
    "7": 10000000, "8": 100000000, "9": 1000000000,
    "H": 100, "h": 100, "K": 1000, "k": 1000, "M": 1000000, "m": 1000000,
    "B": 1000000000, "b": 1000000000,
}


def oracle_damage(raw: str) -> tuple[Fraction | None, set[str]]:
    s = raw.strip()
    if s == "":
        return None, {"MISSING"}
    body, last = s[:-1], s[-1]
    if last not in MULTIPLIER:
        return None, {"UNKNOWN_MAGNITUDE"}
    if body == "":
        if last in DIGITS:
            return Fraction(0), {"BARE_MAGNITUDE"}
        return None, {"BARE_MAGNITUDE", "UNPARSEABLE_MANTISSA"}
    if body.count(".") > 1 or any(c not in DIGITS + "." for c in body) or body.replace(".", "") == "":
        return None, {"UNPARSEABLE_MANTISSA"}
    whole, _, frac = body.partition(".")
    value = Fraction(int(whole or "0")) + Fraction(int(frac or "0"), 10 ** len(frac))
    flags = {"DIGIT_MAGNITUDE_SUSPECT"} if last in DIGITS else set()
    return value * MULTIPLIER[last], flags


# -- audit -------------------------------------------------------------------


def naive_missing(events):
    n = len(events)
    counts = {
        "EpisodeID": len([e for e in events if e.episode_id is None]),
        "PropertyDamage": len([e for e in events if e.property_damage is None]),
        "CropDamage": len([e for e in events if e.crop_damage is None]),
        "EventType": len([e for e in events if e.event_type == ""]),
    }
    return n, counts


def naive_year_stats(events, catalog_names: list[str]):
    out = []
    for year in sorted({e.year for e in events}):
        rows = [e for e in events if e.year == year]
        names = {e.event_type for e in rows if e.event_type != ""}
        nonstd = {n for n in names if n not in catalog_names}
        nonstd_count = len([e for e in rows if e.event_type in nonstd])
        frac = Fraction(nonstd_count, len(rows)) if rows else Fraction(0)
        out.append((year, names, nonstd, len(rows), nonstd_count, frac))
    return out


def naive_cumulative(events):
    years = sorted({e.year for e in events})
    return [(y, len({e.event_type for e in events if e.year <= y and e.event_type != ""})) for y in years]


def naive_frequencies(events, k):
    types = sorted({e.event_type for e in events if e.event_type != ""})
    counted = [(t, [e.event_type for e in events].count(t)) for t in types]
    result = []
    while counted and len(result) < k:
        best = counted[0]
        for item in counted[1:]:
            if item[1] > best[1] or (item[1] == best[1] and item[0] < best[0]):
                best = item
        result.append(best)
        counted.remove(best)
    return result


def _nearest_rank(sorted_values, p: Fraction):
    n = len(sorted_values)
    rank = math.ceil(p * n)
    return sorted_values[max(rank, 1) - 1]


@functools.lru_cache(maxsize=None)
def _log_bin(value: Fraction, bins: int, scale: Fraction, upper: Fraction):
    """Bin index from 80-digit logs; None means beyond the upper limit."""
    with localcontext() as ctx:
        ctx.prec = 80
        t = Decimal(value.numerator) / Decimal(value.denominator) / (Decimal(scale.numerator) / Decimal(scale.denominator)) + 1
        x = t.log10()
        top = (Decimal(upper.numerator) / Decimal(upper.denominator)).log10()
        eps = Decimal("1e-60")
        if x > top + eps:
            return None
        for i in range(bins, 0, -1):
            edge = top * i / bins
            if x >= edge - eps:
                return min(i, bins - 1)
        return 0


def naive_distribution(events, kind: str, event_type, bins: int, scale, upper):
    attr = {"Property": "property_damage", "Crop": "crop_damage", "Total": "total_damage"}[kind]
    values = [
        Fraction(getattr(e, attr))
        for e in events
        if getattr(e, attr) is not None and (event_type is None or e.event_type == event_type)
    ]
    values.sort()
    quantiles = {}
    if values:
        for key in ("0", "0.25", "0.5", "0.75", "0.9", "0.99", "1"):
            quantiles[key] = _nearest_rank(values, Fraction(key))
    counts = [0] * bins
    overflow = 0
    for v in values:
        b = _log_bin(v, bins, Fraction(scale), Fraction(upper))
        if b is None:
            overflow += 1
        else:
            counts[b] += 1
    return {
        "present_count": len(values),
        "zero_count": len([v for v in values if v == 0]),
        "quantiles": quantiles,
        "counts": counts,
        "overflow": overflow,
    }


def naive_episode_totals(events):
    groups: dict[tuple, list[Fraction]] = {}
    for e in events:
        if e.episode_id is None or e.total_damage is None:
            continue
        groups.setdefault((e.episode_id, e.year, e.month), []).append(Fraction(e.total_damage))
    return [(k[0], k[1], k[2], sum(v, Fraction(0)), len(v)) for k, v in sorted(groups.items())]


def naive_top(totals, n):
    remaining = list(totals)
    out = []
    while remaining and len(out) < n:
        best = remaining[0]
        for t in remaining[1:]:
            if t[3] > best[3] or (t[3] == best[3] and (t[0], t[1], t[2]) < (best[0], best[1], best[2])):
                best = t
        out.append(best)
        remaining.remove(best)
    return out
