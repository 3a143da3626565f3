"""Reliability audit of NOAA Storm Events detail files."""

from .audit import (
    AuditAccumulator,
    DamageKind,
    cumulative_distinct_names,
    damage_distribution,
    episode_totals,
    event_type_frequencies,
    flag_outliers,
    missing_value_stats,
    top_episodes,
    year_name_stats,
)
from .catalog import discover_remote_files, fetch_file, parse_filename
from .normalize import (
    CanonicalCatalog,
    canonicalize_event_type,
    classify_event_type,
    load_catalog,
    normalize_record,
    parse_damage,
)
from .report import build_report, emit_csv_tables, emit_figures, emit_json, parse_json
from .stormcsv import open_event_stream, validate_header

__version__ = "0.1.0"
