"""Array reads: current summation, sensing, tiling, snapshots."""

import numpy as np
import pytest

from tmxbar.device import DeviceConfig, read_current
from tmxbar.logic import DimensionError, compute_clauses
from tmxbar.mapper import SegmentMap, exact_map_boolean, exact_map_levels, shift_weights
from tmxbar.crossbar import (
    MAX_COLS,
    MAX_ROWS,
    MODE_CLASS,
    MODE_CLAUSE,
    CrossbarTile,
    ReadConfig,
    analog_predict,
    blank_tile,
    ceil_partition,
    csa_sense,
    digitize_class_currents,
    drive_clause_read,
    drive_class_read,
    load_tile,
    paired_row_partition,
    plan_tiling,
    save_tile,
    split_boolean_tiles,
    split_class_tiles,
    tiled_clause_compute,
    tiled_class_compute,
)

NOMINAL = DeviceConfig().nominal()
READ = ReadConfig()


def clause_tile_from_actions(actions, seed=0, config=NOMINAL):
    k, n = actions.shape
    tile = blank_tile(k, n, config, seed, MODE_CLAUSE)
    exact_map_boolean(tile.cells, actions)
    return tile


def class_tile_from_weights(shifted, sm, seed=0, config=NOMINAL):
    n, m = shifted.shape
    tile = blank_tile(n, m, config, seed, MODE_CLASS)
    exact_map_levels(tile.cells, shifted, sm)
    return tile


def test_column_current_superposition():
    rng = np.random.default_rng(0)
    actions = rng.random((10, 6)) < 0.4
    tile = clause_tile_from_actions(actions)
    lit = rng.random(10) < 0.5
    total = drive_clause_read(tile, lit, READ)
    parts = np.zeros_like(total)
    for r in np.flatnonzero(~lit):
        single = np.ones(10, dtype=bool)
        single[r] = False  # drive exactly one row
        parts += drive_clause_read(tile, single, READ)
    assert np.allclose(total, parts, rtol=1e-12)
    all_ones = drive_clause_read(tile, np.ones(10, dtype=bool), READ)
    assert np.array_equal(all_ones, np.zeros(6))


def test_csa_threshold_is_strict():
    cfg = ReadConfig(csa_threshold=4.1e-6)
    assert csa_sense(np.array([4.1e-6]), cfg)[0] == False  # noqa: E712
    assert csa_sense(np.array([4.1e-6 - 1e-12]), cfg)[0] == True  # noqa: E712
    assert csa_sense(np.array([5e-6]), cfg)[0] == False  # noqa: E712


def test_csa_offset_needs_generator():
    cfg = ReadConfig(csa_offset_sd=1e-7)
    with pytest.raises(ValueError, match="stream"):
        csa_sense(np.array([1e-6]), cfg)
    gen = np.random.default_rng(0)
    out = csa_sense(np.full(10000, 4.1e-6), cfg, gen)
    # offset noise flips the exact-boundary column about half the time
    assert 0.4 < out.mean() < 0.6


def test_boolean_column_read_reproduces_worst_cases():
    # all 1024 driven excludes sum to 3.2768 uA (sensed 1); one driven
    # include pushes past the 4.1 uA decision point (sensed 0)
    actions = np.zeros((1025, 1), dtype=bool)
    actions[-1, 0] = True
    tile = clause_tile_from_actions(actions)
    only_excludes = np.zeros(1025, dtype=bool)
    only_excludes[-1] = True  # include row floats
    i_lcs = drive_clause_read(tile, only_excludes, READ)[0]
    assert i_lcs == pytest.approx(1024 * 3.2e-9, rel=1e-9)
    assert csa_sense(np.array([i_lcs]), READ)[0]
    with_include = np.zeros(1025, dtype=bool)
    i_hcs = drive_clause_read(tile, with_include, READ)[0]
    assert i_hcs == pytest.approx(5e-6 + 1024 * 3.2e-9, rel=1e-9)
    assert not csa_sense(np.array([i_hcs]), READ)[0]


def test_clause_tile_matches_golden_logic():
    rng = np.random.default_rng(5)
    actions = rng.random((40, 17)) < 0.25
    tile = clause_tile_from_actions(actions)
    literals = rng.random((30, 40)) < 0.5
    sensed = csa_sense(drive_clause_read(tile, literals, READ), READ)
    expected = np.vstack([compute_clauses(actions, lit) for lit in literals])
    assert np.array_equal(sensed, expected)


def test_digitize_class_currents_exact_and_half_down():
    sm = SegmentMap(levels=12, config=NOMINAL)
    lv = np.array([0, 3, 11])
    n_on = 4
    currents = n_on * sm.i_min + lv * sm.delta_i
    out = digitize_class_currents(currents, n_on, sm, v_read=2.0)
    assert np.array_equal(out, lv)
    over = currents + 0.51 * sm.delta_i
    assert np.array_equal(digitize_class_currents(over, n_on, sm, 2.0), lv + 1)
    under = currents + 0.49 * sm.delta_i
    assert np.array_equal(digitize_class_currents(under, n_on, sm, 2.0), lv)
    # halving the read voltage halves currents but not the digitized sum
    out_1v = digitize_class_currents(currents / 2, n_on, sm, v_read=1.0)
    assert np.array_equal(out_1v, lv)


def test_digitize_rounds_exact_halves_down():
    # dyadic anchors make the half-unit boundary exactly representable
    cfg = DeviceConfig(read_anchor_g=(1e-9, 2.5e-6), read_anchor_i=(0.25, 2.25))
    sm = SegmentMap(levels=9, config=cfg)
    assert sm.delta_i == 0.25
    lv = np.arange(9)
    currents = 4 * 0.25 + (lv + 0.5) * 0.25  # exactly level + 1/2
    out = digitize_class_currents(currents, 4, sm, v_read=2.0)
    assert np.array_equal(out, lv)


def test_class_tile_matches_integer_weights():
    rng = np.random.default_rng(9)
    weights = rng.integers(-7, 9, size=(4, 15), dtype=np.int32)
    shifted, shift = shift_weights(weights)
    sm = SegmentMap(levels=int(shifted.max()) + 1, config=NOMINAL)
    tile = class_tile_from_weights(shifted.T, sm)
    clauses = rng.random((25, 15)) < 0.5
    currents = drive_class_read(tile, clauses, READ)
    out = digitize_class_currents(currents, clauses.sum(axis=1), sm, READ.v_read)
    assert np.array_equal(out, clauses.astype(np.int64) @ shifted.T)
    # shift cancels in the argmax
    v = out - clauses.sum(axis=1)[:, None] * shift
    assert np.array_equal(v, clauses.astype(np.int64) @ weights.T.astype(np.int64))
    assert np.array_equal(analog_predict(out), analog_predict(v))


def test_ceil_partition():
    assert ceil_partition(2049, 2048) == [(0, 2048), (2048, 2049)]
    assert ceil_partition(10, 4) == [(0, 4), (4, 8), (8, 10)]
    assert ceil_partition(4, 4) == [(0, 4)]
    with pytest.raises(DimensionError):
        ceil_partition(0, 4)


def test_paired_row_partition_is_safe_for_csa():
    parts = paired_row_partition(1568, 2048)
    assert parts == [(0, 784)]
    parts = paired_row_partition(3200, 2048)
    assert parts == [(0, 1024), (1024, 1600)]
    # exactly one of (x, not x) is driven, so driven rows per part stay
    # at or under cap/2 and the all-LCS column current stays under 4.1 uA
    worst = (2048 // 2) * 3.2e-9
    assert worst < 4.1e-6
    with pytest.raises(DimensionError):
        paired_row_partition(7, 2048)


def test_plan_tiling_covers_everything():
    plan = plan_tiling(1568, 500, 10)
    assert plan.clause_row_parts == ((0, 784),)
    assert plan.clause_col_parts == ((0, 500),)
    assert plan.class_row_parts == ((0, 500),)
    assert plan.class_col_parts == ((0, 10),)
    rows = plan.literal_rows((0, 784))
    assert np.array_equal(rows, np.arange(1568))


def test_tiled_equals_untiled():
    rng = np.random.default_rng(21)
    k, n, m = 60, 33, 5
    actions = rng.random((k, n)) < 0.2
    weights = rng.integers(-6, 7, size=(m, n), dtype=np.int32)
    shifted, _ = shift_weights(weights)
    sm = SegmentMap(levels=int(shifted.max()) + 1, config=NOMINAL)
    literals = rng.random((20, k)) < 0.5

    def build(max_rows, max_cols):
        plan = plan_tiling(k, n, m, max_rows=max_rows, max_cols=max_cols)
        clause_tiles = []
        for part in plan.clause_row_parts:
            rows = plan.literal_rows(part)
            row_tiles = []
            for c0, c1 in plan.clause_col_parts:
                row_tiles.append(
                    clause_tile_from_actions(actions[rows][:, c0:c1])
                )
            clause_tiles.append(row_tiles)
        class_tiles = []
        for r0, r1 in plan.class_row_parts:
            row_tiles = []
            for c0, c1 in plan.class_col_parts:
                row_tiles.append(
                    class_tile_from_weights(shifted.T[r0:r1, c0:c1], sm)
                )
            class_tiles.append(row_tiles)
        clauses = tiled_clause_compute(clause_tiles, plan, literals, READ)
        sums = tiled_class_compute(class_tiles, plan, clauses, sm, READ)
        return clauses, sums

    big = build(MAX_ROWS, MAX_COLS)  # single tile each
    small = build(16, 7)  # many tiles
    assert np.array_equal(big[0], small[0])
    assert np.array_equal(big[1], small[1])
    expected_clauses = np.vstack([compute_clauses(actions, lit) for lit in literals])
    assert np.array_equal(big[0], expected_clauses)
    assert np.array_equal(
        big[1], expected_clauses.astype(np.int64) @ shifted.T
    )


def test_mode_and_shape_errors():
    tile = blank_tile(4, 3, NOMINAL, 0, MODE_CLAUSE)
    with pytest.raises(DimensionError, match="class read"):
        drive_class_read(tile, np.zeros(4, dtype=bool), READ)
    with pytest.raises(DimensionError, match="literal length"):
        drive_clause_read(tile, np.zeros(5, dtype=bool), READ)
    ctile = blank_tile(4, 3, NOMINAL, 0, MODE_CLASS)
    with pytest.raises(DimensionError, match="clause read"):
        drive_clause_read(ctile, np.zeros(4, dtype=bool), READ)
    with pytest.raises(ValueError, match="mode"):
        blank_tile(4, 3, NOMINAL, 0, "resistive-ram")
    with pytest.raises(ValueError):
        blank_tile(MAX_ROWS + 1, 3, NOMINAL, 0, MODE_CLAUSE)


def test_used_region_subsets_physical_tile():
    tile = blank_tile(8, 6, NOMINAL, 0, MODE_CLAUSE, used_rows=5, used_cols=4)
    assert tile.rows == 8 and tile.cols == 6  # physical
    assert tile.used_rows == 5 and tile.used_cols == 4
    assert tile.cell_currents(2.0).shape == (5, 4)
    out = drive_clause_read(tile, np.zeros(5, dtype=bool), READ)
    assert out.shape == (4,)


def test_tile_snapshot_round_trip(tmp_path):
    cfg = DeviceConfig()  # with variability, so factors are nontrivial
    tile = blank_tile(6, 5, cfg, seed=3, mode=MODE_CLASS, used_rows=4, used_cols=5)
    tile.cells.drawn[:] = 7
    path = tmp_path / "tile.npz"
    save_tile(path, tile)
    back = load_tile(path)
    assert back.mode == tile.mode
    assert back.used_rows == 4 and back.used_cols == 5
    assert np.array_equal(back.cells.g, tile.cells.g)
    assert np.array_equal(back.cells.rate, tile.cells.rate)
    assert np.array_equal(back.cells.scale, tile.cells.scale)
    assert np.array_equal(back.cells.keys, tile.cells.keys)
    assert np.array_equal(back.cells.drawn, tile.cells.drawn)
    assert back.cells.config == tile.cells.config


def test_load_tile_rejects_foreign_npz(tmp_path):
    path = tmp_path / "junk.npz"
    np.savez(path, a=np.arange(3))
    with pytest.raises((KeyError, ValueError)):
        load_tile(path)


def test_split_helpers_match_plan():
    rng = np.random.default_rng(2)
    actions = rng.random((12, 9)) < 0.3
    tile = clause_tile_from_actions(actions)
    plan = plan_tiling(12, 9, 2, max_rows=6, max_cols=4)
    parts = split_boolean_tiles(tile, plan)
    assert len(parts) == len(plan.clause_row_parts)
    assert len(parts[0]) == len(plan.clause_col_parts)
    lit = rng.random(12) < 0.5
    merged = tiled_clause_compute(parts, plan, lit, READ)
    direct = csa_sense(drive_clause_read(tile, lit, READ), READ)
    assert np.array_equal(merged[0], direct)

    weights = rng.integers(0, 5, size=(9, 2))
    sm = SegmentMap(levels=6, config=NOMINAL)
    ctile = class_tile_from_weights(weights, sm)
    cparts = split_class_tiles(ctile, plan)
    clauses = rng.random(9) < 0.5
    sums = tiled_class_compute(cparts, plan, clauses, sm, READ)
    expected = clauses.astype(np.int64) @ weights
    assert np.array_equal(sums[0], expected)


def test_read_config_validation_and_round_trip():
    cfg = ReadConfig(v_read=1.5, csa_offset_sd=2e-8)
    assert ReadConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValueError):
        ReadConfig(v_read=0.0)
    with pytest.raises(ValueError):
        ReadConfig(t_read=-1e-9)
    with pytest.raises(ValueError):
        ReadConfig.from_dict({"v_read": 2.0, "bogus": 1})
