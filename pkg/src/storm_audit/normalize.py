"""Damage decoding, event-type canonicalization and record normalization."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path
from typing import TYPE_CHECKING, Iterable

from . import money

if TYPE_CHECKING:
    from .stormcsv import RawEventRecord


class DamageFlag(str, enum.Enum):
    MISSING = "MISSING"
    BARE_MAGNITUDE = "BARE_MAGNITUDE"
    DIGIT_MAGNITUDE_SUSPECT = "DIGIT_MAGNITUDE_SUSPECT"
    UNKNOWN_MAGNITUDE = "UNKNOWN_MAGNITUDE"
    UNPARSEABLE_MANTISSA = "UNPARSEABLE_MANTISSA"


# Trailing character -> power of ten. Digits follow d -> 10**d, '9' included.
MAGNITUDE_EXPONENTS: dict[str, int] = {str(d): d for d in range(10)}
MAGNITUDE_EXPONENTS.update({"H": 2, "h": 2, "K": 3, "k": 3, "M": 6, "m": 6, "B": 9, "b": 9})

MAX_MANTISSA_DIGITS = 200
_MANTISSA_RE = re.compile(r"[0-9]+(?:\.[0-9]*)?|\.[0-9]+")


@dataclass(frozen=True)
class DamageParseResult:
    value_usd: Decimal | None
    flags: frozenset[DamageFlag] = frozenset()


_MISSING = DamageParseResult(None, frozenset({DamageFlag.MISSING}))


def parse_damage(raw: str) -> DamageParseResult:
    """Decode a damage field such as ``"1.55B"`` into exact dollars.

    The last character is the magnitude code and everything before it the
    mantissa. Surrounding whitespace is ignored, so a blank field is missing.
    A lone digit (no mantissa) decodes to 0 and is flagged BARE_MAGNITUDE; a
    lone letter code has nothing to scale and yields no value.
    """
    text = raw.strip()
    if not text:
        return _MISSING

    mantissa, code = text[:-1], text[-1]
    exponent = MAGNITUDE_EXPONENTS.get(code)
    if exponent is None:
        return DamageParseResult(None, frozenset({DamageFlag.UNKNOWN_MAGNITUDE}))

    if not mantissa:
        if code.isdigit():
            return DamageParseResult(money.ZERO, frozenset({DamageFlag.BARE_MAGNITUDE}))
        return DamageParseResult(None, frozenset({DamageFlag.BARE_MAGNITUDE, DamageFlag.UNPARSEABLE_MANTISSA}))

    if len(mantissa) > MAX_MANTISSA_DIGITS + 1 or not _MANTISSA_RE.fullmatch(mantissa):
        return DamageParseResult(None, frozenset({DamageFlag.UNPARSEABLE_MANTISSA}))

    value = money.canonical(money.EXACT.scaleb(Decimal(mantissa), exponent))
    flags = frozenset({DamageFlag.DIGIT_MAGNITUDE_SUSPECT}) if code.isdigit() else frozenset()
    return DamageParseResult(value, flags)


_ASCII_UPPER = str.maketrans("abcdefghijklmnopqrstuvwxyz", "ABCDEFGHIJKLMNOPQRSTUVWXYZ")


def canonicalize_event_type(raw: str) -> str:
    return " ".join(raw.split()).translate(_ASCII_UPPER)


# Standard event names, in directive order.
DIRECTIVE_55 = (
    "Astronomical Low Tide", "Avalanche", "Blizzard", "Coastal Flood", "Cold/Wind Chill",
    "Debris Flow", "Dense Fog", "Dense Smoke", "Drought", "Dust Devil", "Dust Storm",
    "Excessive Heat", "Extreme Cold/Wind Chill", "Flash Flood", "Flood", "Frost/Freeze",
    "Funnel Cloud", "Freezing Fog", "Hail", "Heat", "Heavy Rain", "Heavy Snow", "High Surf",
    "High Wind", "Hurricane (Typhoon)", "Ice Storm", "Lake-Effect Snow", "Lakeshore Flood",
    "Lightning", "Marine Dense Fog", "Marine Hail", "Marine Heavy Freezing Spray",
    "Marine High Wind", "Marine Hurricane/Typhoon", "Marine Lightning", "Marine Strong Wind",
    "Marine Thunderstorm Wind", "Marine Tropical Depression", "Marine Tropical Storm",
    "Rip Current", "Seiche", "Sleet", "Sneaker Wave", "Storm Surge/Tide", "Strong Wind",
    "Thunderstorm Wind", "Tornado", "Tropical Depression", "Tropical Storm", "Tsunami",
    "Volcanic Ash", "Waterspout", "Wildfire", "Winter Storm", "Winter Weather",
)

# Names added when the directive grew from 48 to 55 entries.
DIRECTIVE_ADDITIONS = (
    "Marine Dense Fog", "Marine Heavy Freezing Spray", "Marine Hurricane/Typhoon",
    "Marine Lightning", "Marine Tropical Depression", "Marine Tropical Storm", "Sneaker Wave",
)


@dataclass(frozen=True)
class CanonicalCatalog:
    names: tuple[str, ...]
    source_label: str
    _members: frozenset[str] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        canon = tuple(canonicalize_event_type(n) for n in self.names)
        if any(not n for n in canon):
            raise ValueError("catalog contains an empty event name")
        if len(set(canon)) != len(canon):
            raise ValueError(f"catalog {self.source_label!r} contains duplicate names")
        object.__setattr__(self, "names", canon)
        object.__setattr__(self, "_members", frozenset(canon))

    def __contains__(self, name: object) -> bool:
        return name in self._members

    def __len__(self) -> int:
        return len(self.names)

    @classmethod
    def from_names(cls, names: Iterable[str], source_label: str) -> CanonicalCatalog:
        seen: dict[str, None] = {}
        for n in names:
            seen.setdefault(canonicalize_event_type(n), None)
        return cls(tuple(seen), source_label)

    @classmethod
    def from_file(cls, path: Path | str) -> CanonicalCatalog:
        """One name per line; ``#`` starts a comment; blank lines are skipped."""
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        names = [line.split("#", 1)[0] for line in lines]
        return cls.from_names((n for n in names if n.strip()), str(path))


BUILTIN_CATALOGS = {
    "directive-55": DIRECTIVE_55,
    "legacy-48": tuple(n for n in DIRECTIVE_55 if n not in DIRECTIVE_ADDITIONS),
}
DEFAULT_CATALOG_LABEL = "directive-55"


def load_catalog(label_or_path: str = DEFAULT_CATALOG_LABEL) -> CanonicalCatalog:
    if label_or_path in BUILTIN_CATALOGS:
        return CanonicalCatalog(BUILTIN_CATALOGS[label_or_path], label_or_path)
    return CanonicalCatalog.from_file(label_or_path)


class EventClass(str, enum.Enum):
    STANDARD = "Standard"
    NON_STANDARD = "NonStandard"


def classify_event_type(name: str, catalog: CanonicalCatalog) -> EventClass:
    return EventClass.STANDARD if name in catalog else EventClass.NON_STANDARD


class BadYear(ValueError):
    pass


@dataclass(frozen=True)
class NormalizedEvent:
    episode_id: str | None
    year: int
    month: str
    event_type: str
    is_standard: bool
    property_damage: Decimal | None
    crop_damage: Decimal | None
    total_damage: Decimal | None
    flags: frozenset[DamageFlag] = frozenset()
    property_flags: frozenset[DamageFlag] = frozenset()
    crop_flags: frozenset[DamageFlag] = frozenset()


def total_damage(prop: Decimal | None, crop: Decimal | None, missing_as_zero: bool = False) -> Decimal | None:
    if missing_as_zero:
        return money.add(prop or money.ZERO, crop or money.ZERO)
    if prop is None or crop is None:
        return None
    return money.add(prop, crop)


def parse_year(text: str) -> int:
    s = text.strip()
    if not s.isascii() or not s.isdigit():
        raise BadYear(f"unparseable YEAR {text!r}")
    return int(s)


def normalize_record(raw: RawEventRecord, catalog: CanonicalCatalog, missing_as_zero: bool = False) -> NormalizedEvent:
    """Type one raw row. Raises :class:`BadYear` if YEAR is not an integer."""
    year = parse_year(raw.year)
    prop = parse_damage(raw.damage_property_raw)
    crop = parse_damage(raw.damage_crops_raw)
    event_type = canonicalize_event_type(raw.event_type)
    episode = raw.episode_id.strip() or None
    return NormalizedEvent(
        episode_id=episode,
        year=year,
        month=raw.month.strip(),
        event_type=event_type,
        is_standard=event_type in catalog,
        property_damage=prop.value_usd,
        crop_damage=crop.value_usd,
        total_damage=total_damage(prop.value_usd, crop.value_usd, missing_as_zero),
        flags=prop.flags | crop.flags,
        property_flags=prop.flags,
        crop_flags=crop.flags,
    )
