"""``storm-audit`` command line: fetch, audit, top, hist.

Exit codes: 0 success, 1 usage error, 2 environment/input problem,
3 partial fetch, 4 outlier episodes found (audit only).
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Sequence

from . import money
from .anomalies import AnomalyRecord
from .audit import AuditAccumulator, DamageKind, top_episodes
from .catalog import (
    BASE_URL_ENV,
    CACHE_ENV,
    DEFAULT_BASE_URL,
    MIN_YEAR,
    CacheUnwritable,
    MalformedListing,
    RemoteFile,
    Transport,
    TransferFailed,
    discover_cached_files,
    discover_remote_files,
    fetch_file,
    fetch_listing,
    select_latest_snapshots,
    urllib_transport,
)
from .normalize import CanonicalCatalog, canonicalize_event_type, load_catalog
from .pipeline import AuditInput, assemble_report, run_audit
from .report import (
    IoFailure,
    QualityReport,
    ReportParameters,
    SnapshotFile,
    TOP_EPISODE_COLUMNS,
    distribution_to_dict,
    emit_csv_tables,
    emit_figures,
    emit_json,
    histogram_svg,
    percent_str,
    write_files_atomically,
)
from .stormcsv import HeaderMissingRequired, UnreadableFile

log = logging.getLogger("storm_audit")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ENV = 2
EXIT_PARTIAL_FETCH = 3
EXIT_OUTLIERS = 4

DEFAULT_CACHE_DIR = "storm_cache"
ALL_FORMATS = ("json", "csv", "svg")


class EnvironmentProblem(Exception):
    pass


@dataclass
class RunConfig:
    base_url: str = DEFAULT_BASE_URL
    cache_dir: Path = Path(DEFAULT_CACHE_DIR)
    years: tuple[int, int] | None = None
    catalog: str = "directive-55"
    top_n: int = 10
    outlier_threshold: Decimal = Decimal(10) ** 11
    bins: int = 50
    histogram_scale: Decimal = Decimal(1000)
    output_dir: Path = Path("storm_report")
    formats: tuple[str, ...] = ALL_FORMATS
    workers: int = 1
    missing_as_zero: bool = False
    retries: int = 0

    def parameters(self) -> ReportParameters:
        return ReportParameters(
            top_n=self.top_n,
            outlier_threshold=self.outlier_threshold,
            bins=self.bins,
            histogram_scale=self.histogram_scale,
            missing_as_zero=self.missing_as_zero,
            years=self.years,
        )


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_years(text: str) -> tuple[int, int]:
    first, sep, last = text.partition("..")
    try:
        a = int(first)
        b = int(last) if sep else a
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A..B, got {text!r}") from None
    current = datetime.date.today().year
    if not (MIN_YEAR <= a <= b <= current):
        raise argparse.ArgumentTypeError(f"year range must satisfy {MIN_YEAR} <= A <= B <= {current}")
    return a, b


def _positive_int(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {n}")
    return n


def _non_negative_int(text: str) -> int:
    n = int(text)
    if n < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return n


def _positive_usd(text: str) -> Decimal:
    try:
        value = money.parse_usd(text)
    except (InvalidOperation, ValueError):
        raise argparse.ArgumentTypeError(f"not an amount: {text!r}") from None
    if value <= 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return value


def _formats(text: str) -> tuple[str, ...]:
    items = tuple(sorted({f.strip() for f in text.split(",") if f.strip()}))
    bad = [f for f in items if f not in ALL_FORMATS]
    if bad or not items:
        raise argparse.ArgumentTypeError(f"formats must be a subset of {','.join(ALL_FORMATS)}")
    return items


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--base-url", default=os.environ.get(BASE_URL_ENV, DEFAULT_BASE_URL))
    common.add_argument("--cache-dir", type=Path, default=Path(os.environ.get(CACHE_ENV, DEFAULT_CACHE_DIR)))
    common.add_argument("--years", type=parse_years, default=None, metavar="A..B")
    common.add_argument("--catalog", default="directive-55", metavar="LABEL|PATH")
    common.add_argument("--workers", type=_positive_int, default=1)
    common.add_argument("--missing-as-zero", action="store_true")
    common.add_argument("--retries", type=_non_negative_int, default=0)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="storm-audit", description="Reliability audit of NOAA Storm Events detail files.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("fetch", parents=[common], help="download detail files into the cache")

    audit = sub.add_parser("audit", parents=[common], help="run the full audit on cached files")
    audit.add_argument("--top-n", type=_positive_int, default=10)
    audit.add_argument("--outlier-threshold", type=_positive_usd, default=Decimal(10) ** 11)
    audit.add_argument("--bins", type=_positive_int, default=50)
    audit.add_argument("--scale", type=_positive_usd, default=Decimal(1000))
    audit.add_argument("--out", type=Path, default=Path("storm_report"))
    audit.add_argument("--format", type=_formats, default=ALL_FORMATS, dest="formats")

    top = sub.add_parser("top", parents=[common], help="print the costliest episodes")
    top.add_argument("-n", "--top-n", type=_positive_int, default=10)
    top.add_argument("--format", choices=("text", "csv"), default="text", dest="table_format")

    hist = sub.add_parser("hist", parents=[common], help="damage distribution for one event type")
    hist.add_argument("event_type")
    hist.add_argument("--kind", choices=[k.value for k in DamageKind], default=DamageKind.TOTAL.value)
    hist.add_argument("--bins", type=_positive_int, default=50)
    hist.add_argument("--scale", type=_positive_usd, default=Decimal(1000))
    hist.add_argument("--svg", type=Path, default=None, help="also write the histogram as SVG")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(
        base_url=args.base_url,
        cache_dir=args.cache_dir,
        years=args.years,
        catalog=args.catalog,
        workers=args.workers,
        missing_as_zero=args.missing_as_zero,
        retries=args.retries,
    )
    for name, attr in (("top_n", "top_n"), ("outlier_threshold", "outlier_threshold"), ("bins", "bins"),
                       ("scale", "histogram_scale"), ("out", "output_dir"), ("formats", "formats")):
        if hasattr(args, name):
            setattr(cfg, attr, getattr(args, name))
    return cfg


def _in_years(f: RemoteFile, years: tuple[int, int] | None) -> bool:
    return years is None or years[0] <= f.data_year <= years[1]


# -- fetch -------------------------------------------------------------------


def cmd_fetch(config: RunConfig, transport: Transport | None = None, out=None) -> int:
    out = out or sys.stdout
    transport = transport or urllib_transport()
    try:
        listing = fetch_listing(config.base_url, transport)
        remote = discover_remote_files(config.base_url, listing)
    except (TransferFailed, MalformedListing, OSError) as exc:
        print(f"error: cannot list {config.base_url}: {exc}", file=sys.stderr)
        return EXIT_ENV

    wanted, dupes = select_latest_snapshots(f for f in remote if _in_years(f, config.years))
    for d in dupes:
        print(f"skipped {d.source_file} ({d.detail})", file=out)

    try:
        config.cache_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create cache {config.cache_dir}: {exc}", file=sys.stderr)
        return EXIT_ENV

    def one(f: RemoteFile):
        try:
            return f, fetch_file(f, config.cache_dir, transport, retries=config.retries), None
        except (TransferFailed, CacheUnwritable) as exc:
            return f, None, exc

    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        results = list(pool.map(one, wanted))

    failed = []
    for f, entry, err in results:
        if err is not None:
            failed.append(f.filename)
            print(f"failed  {f.filename}: {err}", file=out)
        elif entry.from_cache:
            print(f"cached  {f.filename}", file=out)
        else:
            print(f"fetched {f.filename} ({entry.size_bytes} bytes)", file=out)
    if failed:
        print(f"{len(failed)} file(s) were not downloaded!", file=sys.stderr)
        return EXIT_PARTIAL_FETCH
    return EXIT_OK


# -- offline commands ----------------------------------------------------------


def _load_catalog(config: RunConfig) -> CanonicalCatalog:
    try:
        return load_catalog(config.catalog)
    except (OSError, ValueError) as exc:
        raise EnvironmentProblem(f"cannot load catalog {config.catalog!r}: {exc}") from exc


def select_inputs(config: RunConfig) -> tuple[list[AuditInput], list[SnapshotFile], list[AnomalyRecord]]:
    cache = config.cache_dir
    if not cache.is_dir():
        raise EnvironmentProblem(f"cache directory {cache} does not exist")
    try:
        cached = [f for f in discover_cached_files(cache) if _in_years(f, config.years)]
    except OSError as exc:
        raise EnvironmentProblem(f"cannot read cache {cache}: {exc}") from exc
    kept, dupes = select_latest_snapshots(cached)
    if config.years is not None:
        have = {f.data_year for f in kept}
        absent = [y for y in range(config.years[0], config.years[1] + 1) if y not in have]
        if absent:
            raise EnvironmentProblem(f"cache {cache} lacks year(s) {_compress_years(absent)}")
    inputs = [AuditInput(cache / f.filename, f.filename, f.data_year, f.created_stamp) for f in kept]
    snapshot = [SnapshotFile(f.filename, f.data_year, f.created_stamp) for f in kept]
    return inputs, snapshot, dupes


def _compress_years(years: list[int]) -> str:
    spans = []
    for y in years:
        if spans and spans[-1][1] == y - 1:
            spans[-1][1] = y
        else:
            spans.append([y, y])
    return ", ".join(str(a) if a == b else f"{a}..{b}" for a, b in spans)


def _accumulate(config: RunConfig) -> tuple[AuditAccumulator, CanonicalCatalog, list[SnapshotFile], list[AnomalyRecord]]:
    catalog = _load_catalog(config)
    inputs, snapshot, dupes = select_inputs(config)
    try:
        acc = run_audit(inputs, catalog, workers=config.workers, missing_as_zero=config.missing_as_zero)
    except (UnreadableFile, HeaderMissingRequired) as exc:
        raise EnvironmentProblem(str(exc)) from exc
    return acc, catalog, snapshot, dupes


def run_report(config: RunConfig) -> QualityReport:
    acc, catalog, snapshot, dupes = _accumulate(config)
    return assemble_report(acc, catalog, snapshot, config.parameters(), extra_anomalies=dupes)


def summary_lines(report: QualityReport) -> list[str]:
    lines = [
        f"schema_version: {report.schema_version}",
        f"catalog: {report.catalog_label}",
        f"files: {len(report.snapshot)}",
        f"population: {report.population}",
        f"dropped_records: {report.dropped_records}",
    ]
    for var, count in report.missing.missing_counts.items():
        lines.append(f"missing {var}: {count} ({percent_str(report.missing.fraction(var))}%)")
    cumulative = report.cumulative_names
    lines.append(f"distinct_event_names: {cumulative[-1][1] if cumulative else 0}")
    nonstandard = set().union(*(y.distinct_nonstandard for y in report.year_names)) if report.year_names else set()
    lines.append(f"nonstandard_event_names: {len(nonstandard)}")
    if report.frequencies:
        t, c = report.frequencies[0]
        lines.append(f"most_frequent_event_type: {t} ({c})")
    else:
        lines.append("most_frequent_event_type: -")
    if report.top_episodes:
        e = report.top_episodes[0]
        lines.append(f"top_episode: {e.episode_id} {e.year} {e.month} {money.format_usd(e.total_damage)}")
    else:
        lines.append("top_episode: -")
    lines.append(f"outlier_episodes: {len(report.outliers())}")
    lines.append(f"anomalies: {len(report.anomalies)}")
    return lines


def write_outputs(report: QualityReport, config: RunConfig) -> list[Path]:
    out_dir = config.output_dir
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create {out_dir}: {exc}") from exc
    written: list[Path] = []
    if "json" in config.formats:
        written += write_files_atomically(out_dir, {"report.json": emit_json(report).decode("utf-8")})
    if "csv" in config.formats:
        written += emit_csv_tables(report, out_dir)
    if "svg" in config.formats:
        written += emit_figures(report, out_dir)
    return written


def cmd_audit(config: RunConfig, out=None) -> int:
    out = out or sys.stdout
    try:
        report = run_report(config)
        write_outputs(report, config)
    except (EnvironmentProblem, IoFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENV
    for line in summary_lines(report):
        print(line, file=out)
    return EXIT_OUTLIERS if report.outliers() else EXIT_OK


def cmd_top(config: RunConfig, n: int, table_format: str = "text", out=None) -> int:
    out = out or sys.stdout
    if n < 1:
        print("error: n must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        acc, _, _, _ = _accumulate(config)
    except EnvironmentProblem as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENV
    rows = [(e.episode_id, str(e.year), e.month, money.format_usd(e.total_damage)) for e in top_episodes(acc.episode_totals(), n)]
    if table_format == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(TOP_EPISODE_COLUMNS)
        w.writerows(rows)
        return EXIT_OK
    widths = [max([len(h)] + [len(r[i]) for r in rows]) for i, h in enumerate(TOP_EPISODE_COLUMNS)]
    align = ("<", ">", "<", ">")
    for r in [TOP_EPISODE_COLUMNS, *rows]:
        print("  ".join(f"{v:{a}{w}}" for v, a, w in zip(r, align, widths)).rstrip(), file=out)
    return EXIT_OK


def cmd_hist(config: RunConfig, event_type: str, kind: DamageKind = DamageKind.TOTAL, svg_path: Path | None = None, out=None) -> int:
    out = out or sys.stdout
    try:
        acc, _, _, _ = _accumulate(config)
    except EnvironmentProblem as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENV
    dist = acc.distribution(kind, canonicalize_event_type(event_type), config.bins, config.histogram_scale)
    out.write(json.dumps(distribution_to_dict(dist), sort_keys=True, indent=2, ensure_ascii=False) + "\n")
    if svg_path is not None:
        try:
            svg_path.write_text(histogram_svg(dist), encoding="utf-8")
        except OSError as exc:
            print(f"error: cannot write {svg_path}: {exc}", file=sys.stderr)
            return EXIT_ENV
    return EXIT_OK


def main(argv: Sequence[str] | None = None, transport: Transport | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # --help exits 0, usage errors exit EXIT_USAGE
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    config = config_from_args(args)
    if args.command == "fetch":
        return cmd_fetch(config, transport)
    if args.command == "audit":
        return cmd_audit(config)
    if args.command == "top":
        return cmd_top(config, args.top_n, args.table_format)
    return cmd_hist(config, args.event_type, DamageKind(args.kind), args.svg)


if __name__ == "__main__":
    sys.exit(main())
