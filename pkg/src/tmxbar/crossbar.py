"""Tile-level simulation of the crossbar arrays.

Boolean clause tiles: rows are literal lines, columns are clauses. A row
is driven at the read voltage when its literal is 0 and left floating
when it is 1, so a column's current is the sum over driven rows of the
cell read currents. A current sense amplifier compares the column
current against 4.1 uA: below threshold means no included literal was
violated and the clause outputs 1.

Analog class tiles: rows are clause lines (driven when the clause fired)
and columns are classes. Column currents are digitized into integer
weight-segment units; since every firing row contributes at least the
level-0 current, that common baseline (n_on cells times I_min) is
removed before quantizing. Class scores keep the weight shift n_on *
shift, which is identical for every class, so the argmax and the tie
pattern equal the golden model's.

Large models are partitioned across tiles. Row splits of clause tiles
keep complementary literal pairs together, which bounds the driven rows
of any part to half its rows and keeps the all-LCS leak below the CSA
threshold; partial clauses are combined with digital ANDs, and partial
class sums are digitized per tile and added as integers.

Wires are ideal (no IR drop, no sneak paths) per the device's
self-selection behavior; this is a modeling assumption.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .device import DeviceConfig, DevicePopulation, read_current, sample_population
from .logic import DimensionError, predict
from .mapper import SegmentMap

MAX_ROWS = 2048
MAX_COLS = 512
MODE_CLAUSE = "boolean-clause"
MODE_CLASS = "analog-class"
SNAPSHOT_TAG = "tmxbar-tile-snapshot-v1"


@dataclass(frozen=True)
class ReadConfig:
    v_read: float = 2.0
    t_read: float = 5e-9
    csa_threshold: float = 4.1e-6
    csa_offset_sd: float = 0.0
    csa_energy_aj: int = 0  # per comparator event; 0 = excluded from ledger

    def __post_init__(self) -> None:
        if self.v_read <= 0:
            raise ValueError("read voltage must be positive")
        if self.t_read <= 0:
            raise ValueError("read pulse time must be positive")
        if self.csa_threshold <= 0:
            raise ValueError("CSA threshold must be positive")
        if self.csa_offset_sd < 0:
            raise ValueError("CSA offset sigma must be >= 0")
        if self.csa_energy_aj < 0:
            raise ValueError("CSA event energy must be >= 0")

    def to_dict(self) -> dict:
        return {
            "v_read": self.v_read,
            "t_read": self.t_read,
            "csa_threshold": self.csa_threshold,
            "csa_offset_sd": self.csa_offset_sd,
            "csa_energy_aj": self.csa_energy_aj,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReadConfig":
        unknown = set(d) - set(cls().to_dict())
        if unknown:
            raise ValueError(f"unknown read config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class CrossbarTile:
    """One physical array plus the row/column span actually in use."""

    cells: DevicePopulation
    mode: str
    used_rows: int = -1
    used_cols: int = -1

    def __post_init__(self) -> None:
        rows, cols = self.cells.shape
        if rows > MAX_ROWS or cols > MAX_COLS:
            raise DimensionError(
                f"tile {rows}x{cols} exceeds geometry caps {MAX_ROWS}x{MAX_COLS}"
            )
        if self.mode not in (MODE_CLAUSE, MODE_CLASS):
            raise ValueError(f"unknown tile mode {self.mode!r}")
        if self.used_rows < 0:
            self.used_rows = rows
        if self.used_cols < 0:
            self.used_cols = cols

    @property
    def rows(self) -> int:
        return self.cells.shape[0]

    @property
    def cols(self) -> int:
        return self.cells.shape[1]

    def cell_currents(self, v_read: float) -> np.ndarray:
        """Per-cell read currents of the used region at v_read."""
        g = self.cells.g[: self.used_rows, : self.used_cols]
        return np.asarray(read_current(g, v_read, self.cells.config))


def blank_tile(
    rows: int, cols: int, config: DeviceConfig, seed: int, mode: str,
    used_rows: int = -1, used_cols: int = -1,
) -> CrossbarTile:
    pop = sample_population(rows, cols, config, seed)
    return CrossbarTile(cells=pop, mode=mode, used_rows=used_rows, used_cols=used_cols)


def drive_clause_read(
    tile: CrossbarTile, literals: np.ndarray, cfg: ReadConfig
) -> np.ndarray:
    """Column currents for one or more literal vectors.

    literals: bool (..., used_rows). Rows with literal 0 are driven at
    v_read; rows with literal 1 are floating and contribute nothing.
    """
    if tile.mode != MODE_CLAUSE:
        raise DimensionError(f"clause read on a {tile.mode} tile")
    literals = np.asarray(literals, dtype=bool)
    if literals.shape[-1] != tile.used_rows:
        raise DimensionError(
            f"literal length {literals.shape[-1]}, tile uses {tile.used_rows} rows"
        )
    driven = (~literals).astype(np.float64)
    return driven @ tile.cell_currents(cfg.v_read)


def csa_sense(
    currents: np.ndarray, cfg: ReadConfig,
    gen: np.random.Generator | None = None,
) -> np.ndarray:
    """Comparator per column: 1 iff current (+ input offset) < threshold."""
    currents = np.asarray(currents, dtype=np.float64)
    if cfg.csa_offset_sd > 0:
        if gen is None:
            raise ValueError("csa_offset_sd > 0 needs a random stream")
        currents = currents + gen.normal(0.0, cfg.csa_offset_sd, currents.shape)
    return currents < cfg.csa_threshold


def drive_class_read(
    tile: CrossbarTile, clauses: np.ndarray, cfg: ReadConfig
) -> np.ndarray:
    """Column currents with rows driven where the clause bit is 1."""
    if tile.mode != MODE_CLASS:
        raise DimensionError(f"class read on a {tile.mode} tile")
    clauses = np.asarray(clauses, dtype=bool)
    if clauses.shape[-1] != tile.used_rows:
        raise DimensionError(
            f"clause vector length {clauses.shape[-1]}, tile uses {tile.used_rows} rows"
        )
    return clauses.astype(np.float64) @ tile.cell_currents(cfg.v_read)


def digitize_class_currents(
    currents: np.ndarray, n_on: np.ndarray | int, seg_map: SegmentMap,
    v_read: float = 2.0,
) -> np.ndarray:
    """Quantize column currents to integer weight-segment units.

    The common baseline of n_on level-0 currents is removed first; the
    result is the (shifted) integer class sum. Half-unit boundaries
    round down, matching the mapper readback rule.
    """
    scale = v_read / seg_map.config.v_ref
    n_on = np.asarray(n_on)
    x = (np.asarray(currents) - n_on[..., None] * seg_map.i_min * scale) / (
        seg_map.delta_i * scale
    )
    return np.ceil(x - 0.5).astype(np.int64)


def analog_predict(class_currents: np.ndarray) -> int | np.ndarray:
    """Argmax class from currents or digitized sums, lowest index wins."""
    return predict(class_currents)


def ceil_partition(total: int, cap: int) -> list[tuple[int, int]]:
    """Split [0, total) into the fewest contiguous parts of size <= cap."""
    if total < 1:
        raise DimensionError("nothing to partition")
    n_parts = -(-total // cap)
    bounds = [0]
    for i in range(n_parts):
        bounds.append(min(total, (i + 1) * cap))
    return [(bounds[i], bounds[i + 1]) for i in range(n_parts)]


def paired_row_partition(k: int, cap: int = MAX_ROWS) -> list[tuple[int, int]]:
    """Split K literal rows into parts that keep (x, not-x) pairs together.

    Returned spans index the feature half: part (a, b) holds feature
    rows [a, b) and negation rows [K/2 + a, K/2 + b), 2*(b-a) <= cap.
    """
    if k % 2 != 0:
        raise DimensionError("literal row count must be even")
    return ceil_partition(k // 2, cap // 2)


@dataclass(frozen=True)
class TilingPlan:
    """How a model spreads over clause and class tiles."""

    n_literals: int
    n_clauses: int
    n_classes: int
    clause_row_parts: tuple[tuple[int, int], ...]  # feature-half spans
    clause_col_parts: tuple[tuple[int, int], ...]
    class_row_parts: tuple[tuple[int, int], ...]
    class_col_parts: tuple[tuple[int, int], ...]

    def literal_rows(self, part: tuple[int, int]) -> np.ndarray:
        """Literal indices (features then negations) of a row part."""
        a, b = part
        half = self.n_literals // 2
        return np.concatenate([np.arange(a, b), np.arange(half + a, half + b)])


def plan_tiling(
    n_literals: int, n_clauses: int, n_classes: int,
    max_rows: int = MAX_ROWS, max_cols: int = MAX_COLS,
) -> TilingPlan:
    """Minimal deterministic partition under the geometry caps."""
    return TilingPlan(
        n_literals=n_literals,
        n_clauses=n_clauses,
        n_classes=n_classes,
        clause_row_parts=tuple(paired_row_partition(n_literals, max_rows)),
        clause_col_parts=tuple(ceil_partition(n_clauses, max_cols)),
        class_row_parts=tuple(ceil_partition(n_clauses, max_rows)),
        class_col_parts=tuple(ceil_partition(n_classes, max_cols)),
    )


def tiled_clause_compute(
    tiles: list[list[CrossbarTile]], plan: TilingPlan,
    literals: np.ndarray, cfg: ReadConfig,
    gen: np.random.Generator | None = None,
    ledger: "EnergyLedger | None" = None,
) -> np.ndarray:
    """Clause bits from partitioned tiles: AND over row parts.

    tiles[r][c] covers row part r and column part c of the plan. With a
    ledger, column read energy and CSA event energy are accumulated.
    """
    literals = np.atleast_2d(np.asarray(literals, dtype=bool))
    if literals.shape[-1] != plan.n_literals:
        raise DimensionError("literal length does not match the tiling plan")
    out = np.ones((literals.shape[0], plan.n_clauses), dtype=bool)
    for r, row_part in enumerate(plan.clause_row_parts):
        rows = plan.literal_rows(row_part)
        for c, (c0, c1) in enumerate(plan.clause_col_parts):
            currents = drive_clause_read(tiles[r][c], literals[:, rows], cfg)
            if ledger is not None:
                from .energy import column_read_energy_aj

                aj = column_read_energy_aj(currents, cfg.v_read, cfg.t_read)
                ledger.add_read_aj(
                    aj + currents.size * cfg.csa_energy_aj, events=currents.size
                )
            out[:, c0:c1] &= csa_sense(currents, cfg, gen)
    return out


def tiled_class_compute(
    tiles: list[list[CrossbarTile]], plan: TilingPlan,
    clauses: np.ndarray, seg_map: SegmentMap, cfg: ReadConfig,
    ledger: "EnergyLedger | None" = None,
) -> np.ndarray:
    """Digitized class sums from partitioned tiles (integer units)."""
    clauses = np.atleast_2d(np.asarray(clauses, dtype=bool))
    if clauses.shape[-1] != plan.n_clauses:
        raise DimensionError("clause length does not match the tiling plan")
    out = np.zeros((clauses.shape[0], plan.n_classes), dtype=np.int64)
    for r, (r0, r1) in enumerate(plan.class_row_parts):
        part = clauses[:, r0:r1]
        n_on = part.sum(axis=1)
        for c, (c0, c1) in enumerate(plan.class_col_parts):
            currents = drive_class_read(tiles[r][c], part, cfg)
            if ledger is not None:
                from .energy import column_read_energy_aj

                aj = column_read_energy_aj(currents, cfg.v_read, cfg.t_read)
                ledger.add_read_aj(aj, events=currents.size)
            out[:, c0:c1] += digitize_class_currents(
                currents, n_on, seg_map, cfg.v_read
            )
    return out


def save_tile(path: str | Path, tile: CrossbarTile) -> None:
    """Snapshot the tile to an .npz container (exact round-trip)."""
    np.savez_compressed(
        path,
        format=np.array(SNAPSHOT_TAG),
        mode=np.array(tile.mode),
        used=np.array([tile.used_rows, tile.used_cols], dtype=np.int64),
        g=tile.cells.g,
        rate=tile.cells.rate,
        scale=tile.cells.scale,
        keys=tile.cells.keys,
        drawn=tile.cells.drawn,
        config=np.array(repr(tile.cells.config.to_dict())),
    )


def load_tile(path: str | Path) -> CrossbarTile:
    import ast

    with np.load(path) as z:
        if "format" not in z or str(z["format"]) != SNAPSHOT_TAG:
            raise ValueError(f"{path} is not a tile snapshot")
        stored = DeviceConfig.from_dict(ast.literal_eval(str(z["config"])))
        pop = DevicePopulation(
            g=z["g"], rate=z["rate"], scale=z["scale"],
            keys=z["keys"], drawn=z["drawn"], config=stored,
        )
        used = z["used"]
        return CrossbarTile(
            cells=pop, mode=str(z["mode"]),
            used_rows=int(used[0]), used_cols=int(used[1]),
        )


def split_boolean_tiles(
    big: CrossbarTile, plan: TilingPlan
) -> list[list[CrossbarTile]]:
    """Materialize the per-plan clause tiles of an unsplit tile.

    Row parts gather non-contiguous literal rows, so the parts are
    copies; use them for reads, not for further tuning.
    """
    tiles = []
    for row_part in plan.clause_row_parts:
        rows = plan.literal_rows(row_part)
        row_tiles = []
        for c0, c1 in plan.clause_col_parts:
            cells = DevicePopulation(
                g=big.cells.g[rows, c0:c1], rate=big.cells.rate[rows, c0:c1],
                scale=big.cells.scale[rows, c0:c1], keys=big.cells.keys[rows, c0:c1],
                drawn=big.cells.drawn[rows, c0:c1], config=big.cells.config,
            )
            row_tiles.append(CrossbarTile(cells=cells, mode=MODE_CLAUSE))
        tiles.append(row_tiles)
    return tiles


def split_class_tiles(
    big: CrossbarTile, plan: TilingPlan
) -> list[list[CrossbarTile]]:
    """View an unsplit class tile as the tiles of a plan (shared cells)."""
    tiles = []
    for r0, r1 in plan.class_row_parts:
        row_tiles = []
        for c0, c1 in plan.class_col_parts:
            cells = DevicePopulation(
                g=big.cells.g[r0:r1, c0:c1], rate=big.cells.rate[r0:r1, c0:c1],
                scale=big.cells.scale[r0:r1, c0:c1], keys=big.cells.keys[r0:r1, c0:c1],
                drawn=big.cells.drawn[r0:r1, c0:c1], config=big.cells.config,
            )
            row_tiles.append(CrossbarTile(cells=cells, mode=MODE_CLASS))
        tiles.append(row_tiles)
    return tiles
