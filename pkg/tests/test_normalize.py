from decimal import Decimal
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from storm_audit.normalize import (
    BUILTIN_CATALOGS,
    DIRECTIVE_ADDITIONS,
    BadYear,
    CanonicalCatalog,
    DamageFlag,
    EventClass,
    canonicalize_event_type,
    classify_event_type,
    load_catalog,
    normalize_record,
    parse_damage,
)
from storm_audit.stormcsv import RawEventRecord

from oracles import oracle_damage

F = DamageFlag


@pytest.mark.parametrize(
    "raw, value, flags",
    [
        ("1.55B", Decimal(1_550_000_000), set()),
        ("", None, {F.MISSING}),
        ("2.56", Decimal(2_500_000), {F.DIGIT_MAGNITUDE_SUSPECT}),
        ("5h", Decimal(500), set()),
        ("5H", Decimal(500), set()),
        ("3.2Q", None, {F.UNKNOWN_MAGNITUDE}),
        ("0", Decimal(0), {F.BARE_MAGNITUDE}),
        ("115.00B", Decimal(115_000_000_000), set()),
        ("0.00K", Decimal(0), set()),
        ("70M", Decimal(70_000_000), set()),
        ("2.59", Decimal(2_500_000_000), {F.DIGIT_MAGNITUDE_SUSPECT}),
        ("K", None, {F.BARE_MAGNITUDE, F.UNPARSEABLE_MANTISSA}),
        ("-5K", None, {F.UNPARSEABLE_MANTISSA}),
        ("1.2.3K", None, {F.UNPARSEABLE_MANTISSA}),
        ("1e5K", None, {F.UNPARSEABLE_MANTISSA}),
        (".5K", Decimal(500), set()),
        ("   ", None, {F.MISSING}),
        (" 10K ", Decimal(10_000), set()),
        ("0.125", Decimal(12_000), {F.DIGIT_MAGNITUDE_SUSPECT}),
    ],
)
def test_parse_damage_examples(raw, value, flags):
    result = parse_damage(raw)
    assert result.value_usd == value
    assert set(result.flags) == flags


def test_fractional_cents_are_kept_exactly():
    assert parse_damage("1.555").value_usd == Decimal(155_000)
    assert parse_damage("0.001H").value_usd == Decimal("0.1")
    assert parse_damage("0.001K").value_usd == Decimal(1)
    assert str(parse_damage("1.15B").value_usd) != "1150000000.0000000001"


def test_single_character_inputs_match_enumerating_oracle():
    # every printable single character under the stated rule
    for code in map(chr, range(32, 127)):
        got = parse_damage(code)
        want_value, want_flags = oracle_damage(code)
        assert (got.value_usd, {f.value for f in got.flags}) == (want_value, want_flags), code
    assert parse_damage("0").value_usd == 0
    assert parse_damage("9").flags == {F.BARE_MAGNITUDE}


mantissas = st.builds(
    lambda digits, places: f"{digits / 10**places:.{places}f}",
    st.integers(0, 999),
    st.integers(0, 3),
)


@settings(max_examples=1000)
@given(mantissas, st.sampled_from("KMB"))
def test_three_significant_digit_round_trip(mantissa, code):
    expected = Fraction(mantissa) * {"K": 10**3, "M": 10**6, "B": 10**9}[code]
    assert Fraction(parse_damage(mantissa + code).value_usd) == expected


@settings(max_examples=1000)
@given(mantissas, st.sampled_from("kmbh"))
def test_case_pairs_decode_identically(mantissa, code):
    assert parse_damage(mantissa + code) == parse_damage(mantissa + code.upper())


@settings(max_examples=1000)
@given(st.text(max_size=8))
def test_parse_damage_never_invents_a_value(raw):
    result = parse_damage(raw)
    if result.value_usd is not None:
        assert raw.strip()
        assert raw.strip()[-1] in "0123456789hHkKmMbB"
        assert result.value_usd >= 0
    if F.MISSING in result.flags:
        assert result.value_usd is None and not raw.strip()
    if {F.UNKNOWN_MAGNITUDE, F.UNPARSEABLE_MANTISSA} & result.flags:
        assert result.value_usd is None


@pytest.mark.parametrize(
    "raw, expected",
    [("Thunderstorm Wind", "THUNDERSTORM WIND"), ("  Hail ", "HAIL"), ("THUNDERSTORM  WIND", "THUNDERSTORM WIND"),
     ("Hurricane (Typhoon)", "HURRICANE (TYPHOON)"), ("\tmarine\n hail", "MARINE HAIL"), ("", "")],
)
def test_canonicalize(raw, expected):
    assert canonicalize_event_type(raw) == expected


def test_canonicalize_is_ascii_only():
    assert canonicalize_event_type("straße") == "STRAßE"


def test_whitespace_collapse_keeps_catalog_names_distinct():
    # oracle: canonicalize every catalog name independently and check injectivity
    for label, names in BUILTIN_CATALOGS.items():
        raw_upper = [n.upper() for n in names]
        canon = [canonicalize_event_type(n) for n in names]
        assert canon == raw_upper
        assert len(set(canon)) == len(names)


@settings(max_examples=1000)
@given(st.text(max_size=30))
def test_canonicalize_idempotent(raw):
    once = canonicalize_event_type(raw)
    assert canonicalize_event_type(once) == once


def test_builtin_catalog_sizes(catalog):
    assert len(catalog) == 55
    assert catalog.source_label == "directive-55"
    legacy = load_catalog("legacy-48")
    assert len(legacy) == 48
    assert set(legacy.names) == set(catalog.names) - {n.upper() for n in DIRECTIVE_ADDITIONS}
    assert all(n == n.upper() for n in catalog.names)


@pytest.mark.parametrize(
    "name, cls",
    [("TORNADO", EventClass.STANDARD), ("THUNDERSTORM WIND/HAIL", EventClass.NON_STANDARD),
     ("SNEAKER WAVE", EventClass.STANDARD), ("HURRICANE (TYPHOON)", EventClass.STANDARD),
     ("HURRICANE", EventClass.NON_STANDARD)],
)
def test_classify(name, cls, catalog):
    assert classify_event_type(name, catalog) is cls


def test_classify_legacy_catalog_rejects_additions():
    assert classify_event_type("SNEAKER WAVE", load_catalog("legacy-48")) is EventClass.NON_STANDARD


@settings(max_examples=200)
@given(st.permutations(list(BUILTIN_CATALOGS["directive-55"])), st.sampled_from(["TORNADO", "HAIL/TORNADO", "SEICHE", "X"]))
def test_classify_stable_under_catalog_permutation(names, probe):
    expected = classify_event_type(probe, load_catalog())
    assert classify_event_type(probe, CanonicalCatalog(tuple(names), "perm")) is expected


def test_catalog_file(tmp_path):
    p = tmp_path / "names.txt"
    p.write_text("# custom list\nTornado\n  hail  # inline comment\n\nTORNADO\n", encoding="utf-8")
    cat = load_catalog(str(p))
    assert cat.names == ("TORNADO", "HAIL")
    assert cat.source_label == str(p)


def test_catalog_rejects_duplicates():
    with pytest.raises(ValueError):
        CanonicalCatalog(("Hail", "HAIL"), "dup")


def raw(**kw):
    base = dict(episode_id="7", year="2006", month="January", event_type="Flood",
                damage_property_raw="", damage_crops_raw="", narrative="")
    base.update(kw)
    return RawEventRecord(**base)


def test_normalize_missing_propagation(catalog):
    e = normalize_record(raw(damage_property_raw="70M", damage_crops_raw=""), catalog)
    assert e.property_damage == Decimal(70_000_000)
    assert e.crop_damage is None
    assert e.total_damage is None


def test_normalize_sum(catalog):
    e = normalize_record(raw(damage_property_raw="1K", damage_crops_raw="2K"), catalog)
    assert e.total_damage == Decimal(3000)


def test_normalize_all_missing(catalog):
    e = normalize_record(raw(), catalog)
    assert (e.property_damage, e.crop_damage, e.total_damage) == (None, None, None)
    assert e.flags == {F.MISSING}
    assert e.property_flags == e.crop_flags == {F.MISSING}


def test_normalize_missing_as_zero(catalog):
    e = normalize_record(raw(damage_property_raw="70M"), catalog, missing_as_zero=True)
    assert e.crop_damage is None
    assert e.total_damage == Decimal(70_000_000)


def test_normalize_fields(catalog):
    e = normalize_record(raw(episode_id="", event_type="  hail/tornado "), catalog)
    assert e.episode_id is None
    assert e.event_type == "HAIL/TORNADO"
    assert not e.is_standard
    assert e.year == 2006 and e.month == "January"


@pytest.mark.parametrize("year", ["", "19x5", "2006.0", "-1"])
def test_normalize_bad_year(year, catalog):
    with pytest.raises(BadYear):
        normalize_record(raw(year=year), catalog)


damage_text = st.one_of(st.just(""), st.builds(lambda m, c: m + c, mantissas, st.sampled_from("KMBh5Q")))


@settings(max_examples=1000)
@given(damage_text, damage_text)
def test_total_presence_is_and_of_sides(prop, crop):
    e = normalize_record(raw(damage_property_raw=prop, damage_crops_raw=crop), load_catalog())
    assert (e.total_damage is not None) == (e.property_damage is not None and e.crop_damage is not None)
    if e.total_damage is not None:
        assert e.total_damage == e.property_damage + e.crop_damage
