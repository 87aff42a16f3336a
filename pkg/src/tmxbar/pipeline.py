"""Model-to-hardware orchestration.

Gathers the mapper, crossbar and energy pieces into the three pipeline
steps the CLI and the tests drive:

    map_model      lower a trained model onto clause and class tiles
    analog_infer   batched inference through the tiles with energy
    save_system / load_system
                   mapped-system directory round-trip

The mapped-system directory holds one .npz snapshot per tile plus a
system.json carrying the geometry, segment map, weight shift, tuning
reports and the mapping energy ledger.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .crossbar import (
    MAX_ROWS,
    MODE_CLASS,
    MODE_CLAUSE,
    CrossbarTile,
    ReadConfig,
    TilingPlan,
    blank_tile,
    load_tile,
    plan_tiling,
    save_tile,
    tiled_clause_compute,
    tiled_class_compute,
)
from .device import DeviceConfig
from .energy import EnergyLedger
from .logic import Model, predict
from .mapper import (
    SegmentMap,
    TuneReport,
    deep_erase,
    encode_actions,
    exact_map_boolean,
    exact_map_levels,
    finetune,
    pretune,
    shift_weights,
)
from .rng import derive_seed, stream

SYSTEM_TAG = "tmxbar-system-v1"
DEEP_ERASE_PULSES = 40


@dataclass
class MappedSystem:
    plan: TilingPlan
    seg_map: SegmentMap
    shift: int
    clause_tiles: list[list[CrossbarTile]]
    class_tiles: list[list[CrossbarTile]]
    device_config: DeviceConfig
    reports: dict
    exact: bool = False


def _report_entry(stage_reports: list[TuneReport]) -> dict:
    merged: dict = {}
    total_cells = 0
    program = []
    erase = []
    flagged = 0
    for rep in stage_reports:
        program.append(rep.program_pulses.ravel())
        erase.append(rep.erase_pulses.ravel())
        flagged += int(rep.flagged.sum())
        total_cells += rep.flagged.size
    prog = np.concatenate(program)
    ers = np.concatenate(erase)
    merged = {
        "cells": total_cells,
        "program_mean": float(prog.mean()),
        "program_sd": float(prog.std()),
        "program_max": int(prog.max()),
        "erase_mean": float(ers.mean()),
        "erase_sd": float(ers.std()),
        "erase_max": int(ers.max()),
        "total_mean": float((prog + ers).mean()),
        "total_sd": float((prog + ers).std()),
        "total_max": int((prog + ers).max()),
        "cost": flagged / total_cells,
        "program_hist": np.bincount(prog).tolist(),
        "erase_hist": np.bincount(ers).tolist(),
        "total_hist": np.bincount(prog + ers).tolist(),
    }
    return merged


def map_model(
    model: Model,
    device_config: DeviceConfig,
    seed: int = 0,
    exact: bool = False,
    skip_finetune: bool = False,
    finetune_band: int | None = None,
) -> MappedSystem:
    """Lower a trained model onto freshly sampled tiles.

    exact=True places every cell at its target conductance directly
    (ideal calibration, no pulses); otherwise the full deep-erase /
    encode / pretune / finetune program-and-verify flow runs.
    """
    unipolar, shift = shift_weights(model.weights)
    levels = max(2, int(unipolar.max()) + 1)
    device_config = device_config if not exact else device_config.nominal()
    seg_map = SegmentMap(levels=levels, config=device_config)
    plan = plan_tiling(model.n_literals, model.n_clauses, model.n_classes)
    ledger = EnergyLedger()
    reports: dict = {"levels": levels, "shift": shift, "exact": exact}

    encode_reports = []
    clause_tiles: list[list[CrossbarTile]] = []
    for r, row_part in enumerate(plan.clause_row_parts):
        rows = plan.literal_rows(row_part)
        row_tiles = []
        for c, (c0, c1) in enumerate(plan.clause_col_parts):
            # physical clause arrays come at full row height; spare rows
            # are erased but never driven
            tile = blank_tile(
                MAX_ROWS, c1 - c0, device_config,
                derive_seed(seed, "tile", "clause", r, c),
                MODE_CLAUSE, used_rows=rows.size,
            )
            actions_part = model.actions[rows][:, c0:c1]
            if exact:
                exact_map_boolean(tile.cells, actions_part)
            else:
                deep_erase(tile.cells)
                ledger.add_erase_pulses(DEEP_ERASE_PULSES * tile.cells.g.size)
                rep = encode_actions(tile.cells, actions_part)
                ledger.add_program_pulses(int(rep.program_pulses.sum()))
                ledger.add_erase_pulses(int(rep.erase_pulses.sum()))
                encode_reports.append(rep)
            row_tiles.append(tile)
        clause_tiles.append(row_tiles)
    if encode_reports:
        reports["encode"] = _report_entry(encode_reports)

    level_matrix = unipolar.T  # clauses x classes
    pretune_reports = []
    finetune_reports = []
    class_tiles: list[list[CrossbarTile]] = []
    for r, (r0, r1) in enumerate(plan.class_row_parts):
        row_tiles = []
        for c, (c0, c1) in enumerate(plan.class_col_parts):
            tile = blank_tile(
                r1 - r0, c1 - c0, device_config,
                derive_seed(seed, "tile", "class", r, c),
                MODE_CLASS,
            )
            targets = level_matrix[r0:r1, c0:c1]
            if exact:
                exact_map_levels(tile.cells, targets, seg_map)
            else:
                deep_erase(tile.cells)
                ledger.add_erase_pulses(DEEP_ERASE_PULSES * tile.cells.g.size)
                rep = pretune(tile.cells, targets, seg_map)
                ledger.add_program_pulses(int(rep.program_pulses.sum()))
                ledger.add_erase_pulses(int(rep.erase_pulses.sum()))
                pretune_reports.append(rep)
                if not skip_finetune:
                    if finetune_band is None:
                        rep = finetune(tile.cells, targets, seg_map)
                    else:
                        rep = finetune(
                            tile.cells, targets, seg_map, band=finetune_band
                        )
                    ledger.add_program_pulses(int(rep.program_pulses.sum()))
                    ledger.add_erase_pulses(int(rep.erase_pulses.sum()))
                    finetune_reports.append(rep)
            row_tiles.append(tile)
        class_tiles.append(row_tiles)
    if pretune_reports:
        reports["pretune"] = _report_entry(pretune_reports)
    if finetune_reports:
        reports["finetune"] = _report_entry(finetune_reports)
    reports["mapping_ledger"] = ledger.to_dict()

    return MappedSystem(
        plan=plan, seg_map=seg_map, shift=shift,
        clause_tiles=clause_tiles, class_tiles=class_tiles,
        device_config=device_config, reports=reports, exact=exact,
    )


def analog_infer(
    system: MappedSystem,
    literals: np.ndarray,
    read_config: ReadConfig | None = None,
    seed: int = 0,
    batch: int = 256,
) -> dict:
    """Run literal vectors through the mapped tiles.

    Returns predictions, digitized class sums, clause fire counts and
    separate clause-tile / class-tile energy ledgers. Comparator offset
    draws are consumed batch by batch, so results with csa_offset_sd > 0
    are reproducible for a fixed seed and batch size.
    """
    cfg = read_config or ReadConfig()
    literals = np.atleast_2d(np.asarray(literals, dtype=bool))
    gen = stream(seed, "csa") if cfg.csa_offset_sd > 0 else None
    clause_ledger = EnergyLedger()
    class_ledger = EnergyLedger()
    preds = np.empty(literals.shape[0], dtype=np.int64)
    sums = np.empty((literals.shape[0], system.plan.n_classes), dtype=np.int64)
    fired = 0
    for lo in range(0, literals.shape[0], batch):
        hi = min(lo + batch, literals.shape[0])
        clauses = tiled_clause_compute(
            system.clause_tiles, system.plan, literals[lo:hi], cfg,
            gen=gen, ledger=clause_ledger,
        )
        fired += int(clauses.sum())
        digitized = tiled_class_compute(
            system.class_tiles, system.plan, clauses, system.seg_map, cfg,
            ledger=class_ledger,
        )
        sums[lo:hi] = digitized
        preds[lo:hi] = predict(digitized)
    return {
        "predictions": preds,
        "class_sums": sums,
        "clauses_fired": fired,
        "clause_ledger": clause_ledger,
        "class_ledger": class_ledger,
        "n_samples": int(literals.shape[0]),
    }


def save_system(out_dir: str | Path, system: MappedSystem) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for r, row in enumerate(system.clause_tiles):
        for c, tile in enumerate(row):
            save_tile(out / f"clause_r{r}c{c}.npz", tile)
    for r, row in enumerate(system.class_tiles):
        for c, tile in enumerate(row):
            save_tile(out / f"class_r{r}c{c}.npz", tile)
    meta = {
        "format": SYSTEM_TAG,
        "n_literals": system.plan.n_literals,
        "n_clauses": system.plan.n_clauses,
        "n_classes": system.plan.n_classes,
        "levels": system.seg_map.levels,
        "shift": system.shift,
        "exact": system.exact,
        "device_config": system.device_config.to_dict(),
        "reports": system.reports,
    }
    (out / "system.json").write_text(json.dumps(meta, indent=1, sort_keys=True))


def load_system(in_dir: str | Path) -> MappedSystem:
    src = Path(in_dir)
    meta = json.loads((src / "system.json").read_text())
    if meta.get("format") != SYSTEM_TAG:
        raise ValueError(f"{src} is not a mapped-system directory")
    config = DeviceConfig.from_dict(meta["device_config"])
    plan = plan_tiling(meta["n_literals"], meta["n_clauses"], meta["n_classes"])
    clause_tiles = [
        [
            load_tile(src / f"clause_r{r}c{c}.npz")
            for c in range(len(plan.clause_col_parts))
        ]
        for r in range(len(plan.clause_row_parts))
    ]
    class_tiles = [
        [
            load_tile(src / f"class_r{r}c{c}.npz")
            for c in range(len(plan.class_col_parts))
        ]
        for r in range(len(plan.class_row_parts))
    ]
    return MappedSystem(
        plan=plan,
        seg_map=SegmentMap(levels=meta["levels"], config=config),
        shift=meta["shift"],
        clause_tiles=clause_tiles,
        class_tiles=class_tiles,
        device_config=config,
        reports=meta["reports"],
        exact=meta["exact"],
    )
