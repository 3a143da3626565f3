"""Streaming reader for (optionally compressed) Storm Events detail CSVs."""

from __future__ import annotations

import bz2
import csv
import gzip
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Iterator

from .anomalies import AnomalyKind, AnomalyRecord

# Column list of the v1.0 detail export, in file order.
SCHEMA_COLUMNS = (
    "BEGIN_YEARMONTH", "BEGIN_DAY", "BEGIN_TIME", "END_YEARMONTH", "END_DAY", "END_TIME",
    "EPISODE_ID", "EVENT_ID", "STATE", "STATE_FIPS", "YEAR", "MONTH_NAME", "EVENT_TYPE",
    "CZ_TYPE", "CZ_FIPS", "CZ_NAME", "WFO", "BEGIN_DATE_TIME", "CZ_TIMEZONE", "END_DATE_TIME",
    "INJURIES_DIRECT", "INJURIES_INDIRECT", "DEATHS_DIRECT", "DEATHS_INDIRECT",
    "DAMAGE_PROPERTY", "DAMAGE_CROPS", "SOURCE", "MAGNITUDE", "MAGNITUDE_TYPE", "FLOOD_CAUSE",
    "CATEGORY", "TOR_F_SCALE", "TOR_LENGTH", "TOR_WIDTH", "TOR_OTHER_WFO",
    "TOR_OTHER_CZ_STATE", "TOR_OTHER_CZ_FIPS", "TOR_OTHER_CZ_NAME", "BEGIN_RANGE",
    "BEGIN_AZIMUTH", "BEGIN_LOCATION", "END_RANGE", "END_AZIMUTH", "END_LOCATION",
    "BEGIN_LAT", "BEGIN_LON", "END_LAT", "END_LON", "EPISODE_NARRATIVE", "EVENT_NARRATIVE",
    "DATA_SOURCE",
)

# Projected column -> RawEventRecord attribute.
REQUIRED_COLUMNS = {
    "EPISODE_ID": "episode_id",
    "YEAR": "year",
    "MONTH_NAME": "month",
    "EVENT_TYPE": "event_type",
    "DAMAGE_PROPERTY": "damage_property_raw",
    "DAMAGE_CROPS": "damage_crops_raw",
    "EPISODE_NARRATIVE": "narrative",
}

GZIP_MAGIC = b"\x1f\x8b"
BZIP2_MAGIC = b"BZh"

# Narratives can run long; the csv module default (128 KiB) is too tight.
FIELD_SIZE_LIMIT = 64 * 1024 * 1024


class UnreadableFile(OSError):
    pass


class HeaderMissingRequired(ValueError):
    def __init__(self, path: str, missing: list[str]):
        super().__init__(f"{path}: header lacks required column(s) {', '.join(missing)}")
        self.missing = missing


@dataclass(frozen=True)
class RawEventRecord:
    episode_id: str
    year: str
    month: str
    event_type: str
    damage_property_raw: str
    damage_crops_raw: str
    narrative: str
    source_file: str = ""
    row_number: int = 0


@dataclass(frozen=True)
class HeaderReport:
    found_columns: list[str]
    missing_required: list[str]
    extra_columns: list[str]
    column_count: int
    duplicate_columns: list[str] = field(default_factory=list)


def validate_header(header_fields: list[str]) -> HeaderReport:
    found = list(header_fields)
    present = set(found)
    known = set(SCHEMA_COLUMNS)
    seen: set[str] = set()
    dupes = []
    for name in found:
        if name in seen and name not in dupes:
            dupes.append(name)
        seen.add(name)
    return HeaderReport(
        found_columns=found,
        missing_required=[c for c in REQUIRED_COLUMNS if c not in present],
        extra_columns=[c for c in found if c not in known],
        column_count=len(found),
        duplicate_columns=dupes,
    )


def detect_compression(head: bytes) -> str:
    if head.startswith(GZIP_MAGIC):
        return "gzip"
    if head.startswith(BZIP2_MAGIC):
        return "bzip2"
    return "plain"


def open_binary(path: Path | str) -> BinaryIO:
    """Open ``path`` for reading, transparently decompressing gzip/bzip2."""
    try:
        raw = open(path, "rb")
    except OSError as exc:
        raise UnreadableFile(f"{path}: {exc}") from exc
    head = raw.peek(4)[:4] if hasattr(raw, "peek") else b""
    kind = detect_compression(head)
    if kind == "gzip":
        return gzip.GzipFile(fileobj=raw, mode="rb")  # type: ignore[return-value]
    if kind == "bzip2":
        return bz2.BZ2File(raw, mode="rb")  # type: ignore[return-value]
    return raw


def decode_counting(line: bytes) -> tuple[str, int]:
    """UTF-8 decode with U+FFFD replacement; also return how many replacements."""
    try:
        return line.decode("utf-8"), 0
    except UnicodeDecodeError:
        pass
    parts = []
    count = 0
    pos = 0
    while True:
        try:
            parts.append(line[pos:].decode("utf-8"))
            break
        except UnicodeDecodeError as exc:
            parts.append(line[pos : pos + exc.start].decode("utf-8"))
            parts.append("\ufffd")
            count += 1
            pos += exc.end
    return "".join(parts), count


class EventStream:
    """Iterator of :class:`RawEventRecord` over one detail file.

    The header is read and checked on construction. Anomalies found while
    iterating (malformed rows, encoding replacements, header oddities)
    accumulate in :attr:`anomalies`.
    """

    def __init__(self, path: Path | str, source_name: str | None = None):
        self.path = Path(path)
        self.source_name = source_name or self.path.name
        self.anomalies: list[AnomalyRecord] = []
        self.data_rows = 0
        self.records = 0
        self.skipped = 0
        self.replacements = 0
        self._pending_replacements = 0
        self._binary = open_binary(self.path)
        try:
            self._reader = csv.reader(self._lines())
            self.header = self._read_header()
        except BaseException:
            self._binary.close()
            raise

    def _lines(self) -> Iterator[str]:
        # Line numbers inside quoted multi-line fields are not tracked; the
        # row number recorded on anomalies is the data-row ordinal.
        try:
            for line in self._binary:
                text, n = decode_counting(line)
                if n:
                    self.replacements += n
                    self._pending_replacements += n
                yield text
        except (OSError, EOFError) as exc:
            raise UnreadableFile(f"{self.path}: {exc}") from exc

    def _read_header(self) -> HeaderReport:
        try:
            header = next(self._reader)
        except StopIteration:
            raise HeaderMissingRequired(self.source_name, list(REQUIRED_COLUMNS)) from None
        if header and header[0].startswith("\ufeff"):
            header[0] = header[0][1:]
        report = validate_header(header)
        if report.missing_required:
            raise HeaderMissingRequired(self.source_name, report.missing_required)
        if self._pending_replacements:
            self._note(AnomalyKind.ENCODING_REPLACEMENT, 0, f"{self._pending_replacements} invalid UTF-8 sequence(s) replaced in header")
            self._pending_replacements = 0
        if report.extra_columns:
            self._note(AnomalyKind.HEADER_ISSUE, 0, "unknown column(s): " + ", ".join(report.extra_columns))
        if report.duplicate_columns:
            self._note(AnomalyKind.HEADER_ISSUE, 0, "duplicate column(s): " + ", ".join(report.duplicate_columns))
        self._width = len(header)
        self._index = {attr: header.index(col) for col, attr in REQUIRED_COLUMNS.items()}
        return report

    def _note(self, kind: AnomalyKind, row: int | None, detail: str) -> None:
        self.anomalies.append(AnomalyRecord(kind=kind, source_file=self.source_name, row_number=row, detail=detail))

    def __iter__(self) -> Iterator[RawEventRecord]:
        idx = self._index
        width = self._width
        try:
            for row in self._reader:
                if not row:
                    continue
                self.data_rows += 1
                row_no = self.data_rows
                if self._pending_replacements:
                    self._note(AnomalyKind.ENCODING_REPLACEMENT, row_no, f"{self._pending_replacements} invalid UTF-8 sequence(s) replaced")
                    self._pending_replacements = 0
                if len(row) != width:
                    self.skipped += 1
                    self._note(AnomalyKind.MALFORMED_ROW, row_no, f"expected {width} fields, found {len(row)}")
                    continue
                self.records += 1
                yield RawEventRecord(
                    episode_id=row[idx["episode_id"]],
                    year=row[idx["year"]],
                    month=row[idx["month"]],
                    event_type=row[idx["event_type"]],
                    damage_property_raw=row[idx["damage_property_raw"]],
                    damage_crops_raw=row[idx["damage_crops_raw"]],
                    narrative=row[idx["narrative"]],
                    source_file=self.source_name,
                    row_number=row_no,
                )
        except csv.Error as exc:
            raise UnreadableFile(f"{self.path}: {exc}") from exc
        finally:
            self.close()

    def close(self) -> None:
        self._binary.close()

    def __enter__(self) -> EventStream:
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def open_event_stream(path: Path | str, source_name: str | None = None) -> EventStream:
    csv.field_size_limit(FIELD_SIZE_LIMIT)
    return EventStream(path, source_name)


def write_event_csv(path: Path | str, records, columns=tuple(REQUIRED_COLUMNS), compression: str = "plain") -> None:
    """Write records (mappings keyed by column name) as an RFC-4180 CSV.

    Used by fixtures and tests; unspecified columns are left empty.
    """
    opener = {"plain": open, "gzip": gzip.open, "bzip2": bz2.open}[compression]
    with opener(path, "wb") as raw:
        text = io.TextIOWrapper(raw, encoding="utf-8", newline="")
        writer = csv.writer(text, lineterminator="\n")
        writer.writerow(columns)
        for rec in records:
            writer.writerow([rec.get(c, "") for c in columns])
        text.flush()
        text.detach()
