import numpy as np
import pytest

from pilotadapt.channel import ChannelProfile, PilotSpacing, max_spacing
from pilotadapt.errors import ConfigurationError, InfeasibleRegistryError, NoDataRoomError
from pilotadapt.patterns import (
    PatternRegistry,
    build_pattern,
    conventional_pattern,
    default_registry,
    pattern_to_dict,
    select_pattern_for_group,
)

from conftest import tiny_numerology


def expected_count(spacing, num, mux):
    import math

    return (
        math.ceil(num.symbols_per_rb / spacing.time_spacing_symbols)
        * math.ceil(num.subcarriers_per_rb / spacing.freq_spacing_subcarriers)
        * mux
    )


def test_build_pattern_counts(num):
    pat = build_pattern(PilotSpacing(11, 3), num, 4)
    assert pat.size == 2 * 4 * 4 == 32
    pat = build_pattern(PilotSpacing(14, 12), num, 4)
    assert pat.size == 4
    # the classic 4-layer pattern size arises at spacing (7, 4)
    pat = build_pattern(PilotSpacing(7, 4), num, 4)
    assert pat.size == 2 * 3 * 4 == 24


def test_build_pattern_positions_distinct_and_in_grid(num):
    pat = build_pattern(PilotSpacing(11, 3), num, 4)
    assert len(set(pat.positions)) == pat.size
    for t, n in pat.positions:
        assert 0 <= t < num.symbols_per_rb
        assert 0 <= n < num.subcarriers_per_rb


def test_build_pattern_no_data_room():
    num = tiny_numerology(2, 2)
    with pytest.raises(NoDataRoomError):
        build_pattern(PilotSpacing(1, 1), num, 1)  # 4 anchors x 1 = all REs
    with pytest.raises(ConfigurationError):
        build_pattern(PilotSpacing(3, 1), num, 1)  # spacing beyond the grid


def test_conventional_pattern_table1(num, profiles):
    pat = conventional_pattern(profiles, num, 4)
    assert pat.size == 32
    sp = pat.spacing
    assert (sp.time_spacing_symbols, sp.freq_spacing_subcarriers) == (11, 3)
    assert conventional_pattern(profiles, num, 7).size == 56


def test_conventional_pattern_singleton(num, profiles):
    prof = profiles[1]
    pat = conventional_pattern([prof], num, 4)
    ref = build_pattern(max_spacing(prof, num), num, 4)
    assert pat == ref


def test_default_registry_table1(num, profiles):
    reg = default_registry(profiles, num, 4)
    assert reg.size == 4
    assert [p.size for p in reg.patterns] == [4, 8, 16, 32]
    reg1 = default_registry([profiles[0]], num, 4)
    assert reg1.size == 1


def test_registry_dedups_identical_spacings(num):
    # same clamped spacing for both profiles
    a = ChannelProfile("a", 5.0, 0.41e-6)
    b = ChannelProfile("b", 6.0, 0.40e-6)
    assert max_spacing(a, num) == max_spacing(b, num)
    reg = default_registry([a, b], num, 4)
    assert reg.size == 1


def test_registry_rejects_duplicate_spacing(num):
    p = build_pattern(PilotSpacing(11, 3), num, 4)
    with pytest.raises(ConfigurationError):
        PatternRegistry(patterns=(p, p))


def test_select_pattern_for_group(num, profiles):
    reg = default_registry(profiles, num, 4)
    epa = select_pattern_for_group(reg, profiles[0], num)
    assert (epa.spacing.time_spacing_symbols, epa.spacing.freq_spacing_subcarriers) == (14, 12)
    assert epa.size == 4
    etu300 = select_pattern_for_group(reg, profiles[3], num)
    assert etu300 == conventional_pattern(profiles, num, 4)


def test_select_pattern_forced_choice(num, profiles):
    dense = build_pattern(PilotSpacing(11, 3), num, 4)
    reg = PatternRegistry(patterns=(dense,))
    assert select_pattern_for_group(reg, profiles[0], num) == dense


def test_select_pattern_infeasible(num, profiles):
    sparse = build_pattern(PilotSpacing(14, 12), num, 4)
    reg = PatternRegistry(patterns=(sparse,))
    with pytest.raises(InfeasibleRegistryError):
        select_pattern_for_group(reg, profiles[3], num)


def _random_profiles(rng, count):
    profs = []
    for i in range(count):
        profs.append(
            ChannelProfile(
                f"p{i}",
                float(rng.uniform(2.0, 900.0)),
                float(rng.uniform(0.05e-6, 4.69e-6)),
            )
        )
    return profs


def test_pattern_algebra_randomized(num):
    rng = np.random.default_rng(33)
    for _ in range(100):
        n_s = int(rng.integers(4, 15))
        n_sc = int(rng.integers(4, 13))
        grid = tiny_numerology(n_s, n_sc)
        mux = int(rng.integers(1, 5))
        profs = _random_profiles(rng, int(rng.integers(1, 5)))
        try:
            reg = default_registry(profs, grid, mux)
        except NoDataRoomError:
            continue
        # distinct spacings, bounded size
        assert len({p.spacing for p in reg.patterns}) == reg.size
        assert reg.size <= len(profs)
        for pat in reg.patterns:
            assert pat.size == expected_count(pat.spacing, grid, mux)
            assert 0.0 < pat.overhead_ratio < 1.0
        for prof in profs:
            sel = select_pattern_for_group(reg, prof, grid)
            limit = max_spacing(prof, grid)
            assert sel.spacing.time_spacing_symbols <= limit.time_spacing_symbols
            assert sel.spacing.freq_spacing_subcarriers <= limit.freq_spacing_subcarriers


def test_selection_dominance(num, profiles):
    # element-wise worse statistics never select a sparser pattern
    reg = default_registry(profiles, num, 4)
    rng = np.random.default_rng(7)
    for _ in range(50):
        # stay within the registry's densest spacing so both profiles are feasible
        f = rng.uniform(5.0, 100.0)
        tau = rng.uniform(0.1e-6, 4.0e-6)
        better = ChannelProfile("b", f, tau)
        worse = ChannelProfile("w", f * rng.uniform(1.0, 3.0), tau * rng.uniform(1.0, 1.15))
        sel_b = select_pattern_for_group(reg, better, num)
        sel_w = select_pattern_for_group(reg, worse, num)
        assert sel_w.size >= sel_b.size


def test_pattern_export(num):
    pat = build_pattern(PilotSpacing(14, 6), num, 4)
    d = pattern_to_dict(pat)
    assert d["size"] == 8
    assert d["spacing"] == [14, 6]
    assert len(d["positions"]) == 8
    grid = pat.grid_string()
    assert grid.count("P") == 8
    assert len(grid.splitlines()) == num.subcarriers_per_rb
