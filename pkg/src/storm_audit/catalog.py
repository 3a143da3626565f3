"""Discover, download and cache Storm Events detail files."""

from __future__ import annotations

import logging
import os
import re
import tempfile
import urllib.error
import urllib.request
from dataclasses import dataclass
from html.parser import HTMLParser
from pathlib import Path
from typing import Callable, Iterable, Iterator
from urllib.parse import unquote, urljoin, urlsplit

from .anomalies import AnomalyKind, AnomalyRecord

log = logging.getLogger(__name__)

DEFAULT_BASE_URL = "http://www1.ncdc.noaa.gov/pub/data/swdi/stormevents/csvfiles/"
BASE_URL_ENV = "STORM_AUDIT_BASE_URL"
CACHE_ENV = "STORM_AUDIT_CACHE"

DETAIL_FILE_RE = re.compile(r"StormEvents_details-ftp_v1\.0_d(\d{4})_c(\d{8})\.csv(\.gz|\.bz2)?")
MIN_YEAR = 1950

CHUNK_SIZE = 1 << 16

# A transport maps a URL to an iterator of body chunks and raises
# TransferFailed (or any OSError) on failure.
Transport = Callable[[str], Iterable[bytes]]


class MalformedListing(ValueError):
    pass


class TransferFailed(RuntimeError):
    pass


class CacheUnwritable(OSError):
    pass


@dataclass(frozen=True)
class RemoteFile:
    url: str
    filename: str
    data_year: int
    created_stamp: str


@dataclass(frozen=True)
class CacheEntry:
    remote: RemoteFile
    local_path: Path
    size_bytes: int
    fetched: bool
    from_cache: bool = False


def parse_filename(filename: str) -> tuple[int, str] | None:
    """Return ``(data_year, created_stamp)`` for a detail-file name, else None."""
    m = DETAIL_FILE_RE.fullmatch(filename)
    if m is None:
        return None
    year = int(m.group(1))
    if year < MIN_YEAR:
        return None
    return year, m.group(2)


class _AnchorCollector(HTMLParser):
    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.hrefs: list[str] = []

    def handle_starttag(self, tag, attrs):
        if tag.lower() != "a":
            return
        for name, value in attrs:
            if name.lower() == "href" and value:
                self.hrefs.append(value.strip())


def _basename(href: str) -> str:
    path = urlsplit(href).path
    return unquote(path.rsplit("/", 1)[-1])


def extract_hrefs(listing_body: bytes) -> list[str]:
    """Anchor hrefs of an HTML listing; whitespace tokens for plain-text listings."""
    try:
        text = listing_body.decode("utf-8")
    except UnicodeDecodeError:
        text = listing_body.decode("latin-1")
    collector = _AnchorCollector()
    collector.feed(text)
    collector.close()
    if collector.hrefs or "<" in text:
        return collector.hrefs
    return text.split()


def discover_remote_files(base_url: str, listing_body: bytes) -> list[RemoteFile]:
    hrefs = extract_hrefs(listing_body)
    if not hrefs:
        raise MalformedListing(f"no links could be extracted from the listing at {base_url}")

    by_name: dict[str, RemoteFile] = {}
    for href in hrefs:
        name = _basename(href)
        parsed = parse_filename(name)
        if parsed is None:
            continue
        url = urljoin(base_url, href)
        current = by_name.get(name)
        if current is None or url < current.url:
            by_name[name] = RemoteFile(data_year=parsed[0], created_stamp=parsed[1], filename=name, url=url)
    return sorted(by_name.values(), key=lambda r: (r.data_year, r.created_stamp, r.filename))


def select_latest_snapshots(files: Iterable[RemoteFile]) -> tuple[list[RemoteFile], list[AnomalyRecord]]:
    """Keep the newest created_stamp per data year; report the rest."""
    by_year: dict[int, list[RemoteFile]] = {}
    for f in files:
        by_year.setdefault(f.data_year, []).append(f)

    kept: list[RemoteFile] = []
    anomalies: list[AnomalyRecord] = []
    for year in sorted(by_year):
        candidates = sorted(by_year[year], key=lambda r: (r.created_stamp, r.filename))
        winner = candidates[-1]
        kept.append(winner)
        for loser in candidates[:-1]:
            anomalies.append(
                AnomalyRecord(
                    kind=AnomalyKind.DUPLICATE_SNAPSHOT_YEAR,
                    source_file=loser.filename,
                    row_number=None,
                    detail=f"year {year}: discarded in favour of {winner.filename}",
                )
            )
    return kept, anomalies


def urllib_transport(timeout: float = 60.0) -> Transport:
    """Plain HTTP(S) transport streaming the body in chunks."""

    def fetch(url: str) -> Iterator[bytes]:
        try:
            with urllib.request.urlopen(url, timeout=timeout) as resp:
                while True:
                    chunk = resp.read(CHUNK_SIZE)
                    if not chunk:
                        return
                    yield chunk
        except urllib.error.HTTPError as exc:
            raise TransferFailed(f"HTTP {exc.code} for {url}") from exc
        except (urllib.error.URLError, OSError) as exc:
            raise TransferFailed(f"{url}: {exc}") from exc

    return fetch


def fetch_listing(base_url: str, transport: Transport) -> bytes:
    return b"".join(transport(base_url))


def fetch_file(remote: RemoteFile, cache_dir: Path | str, transport: Transport, retries: int = 0) -> CacheEntry:
    """Download ``remote`` into ``cache_dir`` unless a non-empty copy is already there.

    The body goes to a temporary file in the cache directory and is renamed
    into place only after the transfer completed.
    """
    cache_dir = Path(cache_dir)
    target = cache_dir / remote.filename
    if target.is_file():
        size = target.stat().st_size
        if size > 0:
            return CacheEntry(remote, target, size, fetched=True, from_cache=True)

    if not cache_dir.is_dir() or not os.access(cache_dir, os.W_OK):
        raise CacheUnwritable(f"cache directory {cache_dir} is missing or not writable")

    last_error: Exception | None = None
    for attempt in range(retries + 1):
        try:
            size = _download_atomic(remote, target, transport)
            return CacheEntry(remote, target, size, fetched=True)
        except CacheUnwritable:
            raise
        except Exception as exc:
            last_error = exc
            log.warning("attempt %d for %s failed: %s", attempt + 1, remote.filename, exc)
    raise TransferFailed(f"{remote.filename}: {last_error}") from last_error


def _download_atomic(remote: RemoteFile, target: Path, transport: Transport) -> int:
    try:
        fd, tmp_name = tempfile.mkstemp(prefix=f".{remote.filename}.", suffix=".part", dir=target.parent)
    except OSError as exc:
        raise CacheUnwritable(str(exc)) from exc
    tmp = Path(tmp_name)
    try:
        size = 0
        with os.fdopen(fd, "wb") as out:
            for chunk in transport(remote.url):
                out.write(chunk)
                size += len(chunk)
        if size == 0:
            raise TransferFailed(f"empty body for {remote.url}")
        os.replace(tmp, target)
        return size
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise


def discover_cached_files(cache_dir: Path | str) -> list[RemoteFile]:
    """Detail files already present in ``cache_dir``, sorted like a remote listing."""
    cache_dir = Path(cache_dir)
    found = []
    for path in cache_dir.iterdir():
        parsed = parse_filename(path.name)
        if parsed is None or not path.is_file() or path.stat().st_size == 0:
            continue
        found.append(RemoteFile(url=path.resolve().as_uri(), filename=path.name, data_year=parsed[0], created_stamp=parsed[1]))
    return sorted(found, key=lambda r: (r.data_year, r.created_stamp, r.filename))
