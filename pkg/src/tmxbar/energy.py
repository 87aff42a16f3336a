"""Energy, area and throughput accounting.

All energies are tracked as integer attojoules so that ledger merges
are exact and associative regardless of accumulation order. The
per-event constants are exact in aJ:

    program pulse   139 nJ   = 139_000_000_000 aJ
    erase pulse     0.8 pJ   = 800_000 aJ
    read, HCS cell  0.05 pJ  = 50_000 aJ
    read, LCS cell  3.2e-5 pJ = 32 aJ

Column read energy is v * min(sum I, I_sat) * t with the 576 uA
saturation applied to the energy bookkeeping only; the sensed signal
is never clamped. A fully driven 2048-row HCS column at 2 V / 5 ns
saturates to exactly 5.76 pJ.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PROGRAM_PULSE_AJ = 139_000_000_000
ERASE_PULSE_AJ = 800_000
READ_HCS_AJ = 50_000
READ_LCS_AJ = 32
I_SAT = 576e-6
CELL_AREA_UM2 = 3.159
ATTO = 1e-18

# chip-level reference points for the 500-clause digit recognizer;
# echoed in reports for comparison, not derived here
REFERENCE_THROUGHPUT_GOPS = 413.6
REFERENCE_EFFICIENCY_TOPS_W = 24.56


class LedgerError(ValueError):
    pass


@dataclass
class EnergyLedger:
    """Integer-attojoule event ledger, exact under merge."""

    program_pulses: int = 0
    erase_pulses: int = 0
    read_events: int = 0
    program_aj: int = 0
    erase_aj: int = 0
    read_aj: int = 0

    def add_program_pulses(self, count: int) -> None:
        if count < 0:
            raise LedgerError("pulse count must be >= 0")
        self.program_pulses += count
        self.program_aj += count * PROGRAM_PULSE_AJ

    def add_erase_pulses(self, count: int) -> None:
        if count < 0:
            raise LedgerError("pulse count must be >= 0")
        self.erase_pulses += count
        self.erase_aj += count * ERASE_PULSE_AJ

    def add_read_aj(self, aj: int, events: int = 1) -> None:
        if aj < 0:
            raise LedgerError("read energy must be >= 0")
        self.read_events += events
        self.read_aj += aj

    @property
    def total_aj(self) -> int:
        return self.program_aj + self.erase_aj + self.read_aj

    @property
    def total_j(self) -> float:
        return self.total_aj * ATTO

    def merge(self, other: "EnergyLedger") -> "EnergyLedger":
        return EnergyLedger(
            program_pulses=self.program_pulses + other.program_pulses,
            erase_pulses=self.erase_pulses + other.erase_pulses,
            read_events=self.read_events + other.read_events,
            program_aj=self.program_aj + other.program_aj,
            erase_aj=self.erase_aj + other.erase_aj,
            read_aj=self.read_aj + other.read_aj,
        )

    def to_dict(self) -> dict:
        return {
            "program_pulses": self.program_pulses,
            "erase_pulses": self.erase_pulses,
            "read_events": self.read_events,
            "program_aj": self.program_aj,
            "erase_aj": self.erase_aj,
            "read_aj": self.read_aj,
            "total_aj": self.total_aj,
        }


def column_read_energy_aj(
    column_currents: np.ndarray, v_read: float, t_read: float,
    i_sat: float = I_SAT,
) -> int:
    """Summed read energy of the driven columns, in whole attojoules.

    Each column contributes v * min(I, i_sat) * t. Column energies are
    rounded to integer aJ before summing so the ledger stays exact; at
    pJ scale the rounding is ~1e-6 relative.
    """
    currents = np.minimum(np.asarray(column_currents, dtype=np.float64), i_sat)
    if np.any(currents < 0):
        raise LedgerError("negative column current")
    per_col = np.rint(currents * v_read * t_read / ATTO).astype(np.int64)
    return int(per_col.sum())


def cell_read_energy_aj(n_hcs: int, n_lcs: int) -> int:
    """Read energy of individually driven cells (device-level events)."""
    if n_hcs < 0 or n_lcs < 0:
        raise LedgerError("cell counts must be >= 0")
    return n_hcs * READ_HCS_AJ + n_lcs * READ_LCS_AJ


def array_area_mm2(rows: int, cols: int, cell_area_um2: float = CELL_AREA_UM2) -> float:
    """Active cell area of one array, in mm^2."""
    if rows < 1 or cols < 1:
        raise LedgerError("array dimensions must be >= 1")
    return rows * cols * cell_area_um2 * 1e-6


def throughput_gops(columns: int, t_read: float = 5e-9) -> float:
    """Column MAC operations per second, in GOPS (1 column read = 1 op)."""
    if columns < 0:
        raise LedgerError("column count must be >= 0")
    return columns / t_read / 1e9


def efficiency_tops_per_w(ops_per_read: int, read_energy_aj: int, t_read: float = 5e-9) -> float:
    """Throughput per watt for one read phase."""
    if read_energy_aj <= 0:
        raise LedgerError("read energy must be positive")
    power_w = read_energy_aj * ATTO / t_read
    return (ops_per_read / t_read) / power_w / 1e12
