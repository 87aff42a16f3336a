"""Lowers a trained model onto crossbar tiles.

Boolean clause tiles store include/exclude actions as HCS/LCS cells;
analog class tiles store shifted (unipolar) weights as one of `levels`
conductance targets between 1 nS and 2.5 uS.

Weight levels are uniform in read current, not in conductance: level w
targets the conductance whose read current is I(1 nS) + w * delta_i with
delta_i = (I(2.5 uS) - I(1 nS)) / (levels - 1). One level therefore
equals one constant current step everywhere in the range, which is what
lets the class readout digitize column currents into exact integer
weight units (and lets partial sums from split tiles add up losslessly).
Both endpoints still map exactly to 1 nS and 2.5 uS.

Tuning is program-and-verify with a verify read after every pulse:

  encode   1 ms pulses, excludes driven below 1 nS, includes held/erased
           above 2.4 uS
  pretune  500 us pulses until within +-20 segments of target
  finetune 50 us pulses until within +-5 segments

Cells that fail to converge within the pulse cap (64 per stage) are
flagged and counted in the report's cost fraction.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .device import (
    KIND_ERASE,
    KIND_PROGRAM,
    DeviceConfig,
    DevicePopulation,
    PulseSpec,
    apply_pulses,
    conductance_for_current,
    pulses_until,
    read_current,
)

ENCODE_WIDTH = 1e-3
PRETUNE_WIDTH = 500e-6
FINETUNE_WIDTH = 50e-6
PRETUNE_BAND = 20
FINETUNE_BAND = 5
PULSE_CAP = 64
# Boolean-mode verify thresholds, siemens
EXCLUDE_BELOW = 1.0e-9
INCLUDE_ABOVE = 2.4e-6


def shift_weights(w: np.ndarray) -> tuple[np.ndarray, int]:
    """Make weights unipolar: returns (w + shift, shift), min result 0."""
    w = np.asarray(w)
    shift = int(max(0, -int(w.min()))) if w.size else 0
    return w + shift, shift


@dataclass(frozen=True)
class SegmentMap:
    """Quantized weight levels 0..levels-1 on the current axis."""

    levels: int
    config: DeviceConfig

    def __post_init__(self) -> None:
        if self.levels < 2:
            raise ValueError("need at least two weight levels")

    @property
    def g_min(self) -> float:
        return self.config.read_anchor_g[0]

    @property
    def g_max(self) -> float:
        return self.config.read_anchor_g[-1]

    @property
    def i_min(self) -> float:
        return self.config.read_anchor_i[0]

    @property
    def i_max(self) -> float:
        return self.config.read_anchor_i[-1]

    @property
    def delta_i(self) -> float:
        return (self.i_max - self.i_min) / (self.levels - 1)

    def target_current(self, level: np.ndarray | int) -> np.ndarray | float:
        return self.i_min + np.asarray(level) * self.delta_i

    def target_g(self, level: np.ndarray | int) -> np.ndarray | float:
        """Conductance target per level; endpoints are exact anchors."""
        level = np.asarray(level)
        g = np.asarray(conductance_for_current(self.target_current(level), self.config))
        g = np.where(level <= 0, self.g_min, g)
        g = np.where(level >= self.levels - 1, self.g_max, g)
        return g if level.ndim else float(g)

    def segments_of_current(self, i: np.ndarray) -> np.ndarray:
        """Continuous position on the level axis (1.0 = one segment)."""
        return (np.asarray(i) - self.i_min) / self.delta_i

    def level_of_current(self, i: np.ndarray) -> np.ndarray:
        """Nearest level; exact halves round down."""
        seg = np.ceil(self.segments_of_current(i) - 0.5)
        return np.clip(seg, 0, self.levels - 1).astype(np.int64)


@dataclass
class TuneReport:
    """Per-cell pulse budget and residual for one tuning stage."""

    stage: str
    program_pulses: np.ndarray
    erase_pulses: np.ndarray
    residual_segments: np.ndarray
    flagged: np.ndarray

    @property
    def total_pulses(self) -> np.ndarray:
        return self.program_pulses + self.erase_pulses

    @property
    def cost(self) -> float:
        """Fraction of cells left outside tolerance."""
        return float(self.flagged.mean())

    def summary(self) -> dict:
        tot = self.total_pulses
        return {
            "stage": self.stage,
            "cells": int(tot.size),
            "mean_pulses": float(tot.mean()),
            "sd_pulses": float(tot.std()),
            "max_pulses": int(tot.max()),
            "mean_program_pulses": float(self.program_pulses.mean()),
            "sd_program_pulses": float(self.program_pulses.std()),
            "mean_erase_pulses": float(self.erase_pulses.mean()),
            "sd_erase_pulses": float(self.erase_pulses.std()),
            "cost": self.cost,
        }

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(
                ["row", "col", "program_pulses", "erase_pulses",
                 "residual_segments", "flagged"]
            )
            rows, cols = self.program_pulses.shape
            for r in range(rows):
                for c in range(cols):
                    out.writerow([
                        r, c,
                        int(self.program_pulses[r, c]),
                        int(self.erase_pulses[r, c]),
                        f"{self.residual_segments[r, c]:.3f}",
                        int(self.flagged[r, c]),
                    ])


def deep_erase(pop: DevicePopulation, width: float = 1e-3, pulses: int = 40) -> None:
    """Drive every cell to its erased ceiling (tile initialization)."""
    spec = PulseSpec(KIND_ERASE, width)
    for _ in range(pulses):
        apply_pulses(pop, spec)


def encode_actions(
    pop: DevicePopulation, actions: np.ndarray,
    pulse_width: float = ENCODE_WIDTH, cap: int = PULSE_CAP,
) -> TuneReport:
    """Write include/exclude actions into a pre-erased Boolean tile.

    actions: bool (rows x cols), True = include. The tile region beyond
    the action matrix is untouched.
    """
    actions = np.asarray(actions, dtype=bool)
    r, c = actions.shape
    if pop.shape[0] < r or pop.shape[1] < c:
        raise ValueError(
            f"tile {pop.shape} smaller than action matrix {actions.shape}"
        )
    region = DevicePopulation(
        g=pop.g[:r, :c], rate=pop.rate[:r, :c], scale=pop.scale[:r, :c],
        keys=pop.keys[:r, :c], drawn=pop.drawn[:r, :c], config=pop.config,
    )
    prog = pulses_until(
        region, PulseSpec(KIND_PROGRAM, pulse_width), EXCLUDE_BELOW,
        mask=~actions, cap=cap,
    )
    erase = pulses_until(
        region, PulseSpec(KIND_ERASE, pulse_width), INCLUDE_ABOVE,
        mask=actions, cap=cap,
    )
    ok = np.where(actions, region.g > INCLUDE_ABOVE, region.g < EXCLUDE_BELOW)
    return TuneReport(
        stage="encode",
        program_pulses=prog,
        erase_pulses=erase,
        residual_segments=np.zeros_like(region.g),
        flagged=~ok,
    )


def _verify_band_tune(
    pop: DevicePopulation, levels: np.ndarray, seg_map: SegmentMap,
    width: float, band: int, cap: int, stage: str,
) -> TuneReport:
    """Closed loop: read, compare in segment units, pulse toward target."""
    levels = np.asarray(levels)
    cfg = pop.config
    prog = PulseSpec(KIND_PROGRAM, width)
    erase = PulseSpec(KIND_ERASE, width)
    prog_counts = np.zeros(pop.shape, dtype=np.int64)
    erase_counts = np.zeros(pop.shape, dtype=np.int64)
    while True:
        seg = seg_map.segments_of_current(read_current(pop.g, cfg.v_ref, cfg))
        over = seg > levels + band
        under = seg < levels - band
        total = prog_counts + erase_counts
        over &= total < cap
        under &= total < cap
        if not (over.any() or under.any()):
            break
        if over.any():
            apply_pulses(pop, prog, over)
            prog_counts[over] += 1
        if under.any():
            apply_pulses(pop, erase, under)
            erase_counts[under] += 1
    seg = seg_map.segments_of_current(read_current(pop.g, cfg.v_ref, cfg))
    residual = seg - levels
    return TuneReport(
        stage=stage,
        program_pulses=prog_counts,
        erase_pulses=erase_counts,
        residual_segments=residual,
        flagged=np.abs(residual) > band,
    )


def pretune(
    pop: DevicePopulation, levels: np.ndarray, seg_map: SegmentMap,
    width: float = PRETUNE_WIDTH, band: int = PRETUNE_BAND, cap: int = PULSE_CAP,
) -> TuneReport:
    """Coarse tuning stage; expects a freshly erased tile."""
    if np.any(pop.g <= 1.0e-6):
        raise ValueError("pretune expects an erased tile (every cell above 1 uS)")
    return _verify_band_tune(pop, levels, seg_map, width, band, cap, "pretune")


def finetune(
    pop: DevicePopulation, levels: np.ndarray, seg_map: SegmentMap,
    width: float = FINETUNE_WIDTH, band: int = FINETUNE_BAND, cap: int = PULSE_CAP,
) -> TuneReport:
    """Precision tuning stage, run after pretune."""
    return _verify_band_tune(pop, levels, seg_map, width, band, cap, "finetune")


def exact_map_boolean(pop: DevicePopulation, actions: np.ndarray) -> None:
    """Idealized mapping: includes exactly at 2.5 uS, excludes at 1 nS."""
    actions = np.asarray(actions, dtype=bool)
    r, c = actions.shape
    cfg = pop.config
    pop.g[:r, :c] = np.where(actions, cfg.read_anchor_g[-1], cfg.read_anchor_g[0])


def exact_map_levels(
    pop: DevicePopulation, levels: np.ndarray, seg_map: SegmentMap
) -> None:
    """Idealized mapping: each cell exactly at its level target."""
    levels = np.asarray(levels)
    r, c = levels.shape
    pop.g[:r, :c] = seg_map.target_g(levels)


def readback(pop: DevicePopulation, seg_map: SegmentMap) -> np.ndarray:
    """Nearest-level weight estimate from cell conductances."""
    cfg = pop.config
    return seg_map.level_of_current(read_current(pop.g, cfg.v_ref, cfg))
