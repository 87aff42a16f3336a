"""Behavioral Y-Flash memristor model.

A cell is summarized by one conductance value g inside the envelope
[0.5 nS, 2.6 uS]. Program pulses (5 V) move g down, erase pulses (8 V)
move it up, both following an exponential approach toward a rail:

    program:  g' = g * exp(-lambda)                    (rail at 0 S)
    erase:    g' = rail + (g - rail) * exp(-lambda)    (rail 2.7 uS)

lambda depends on pulse width through a calibrated power law, and is
multiplied by a per-device rate factor (device-to-device spread of the
pulse response). Each pulse then applies a fresh lognormal cycle-to-cycle
multiplier whose relative sigma interpolates in log-conductance between
the two characterized states (4.8% near 1 nS, 0.74% near 1 uS). Pulses
saturate at the rails and never leave the envelope.

Read current is a fixed nonlinear calibration table: log-log
interpolation through the anchors (1 nS -> 3.2 nA), (2.2 uS -> 4.5 uA),
(2.5 uS -> 5 uA) at 2 V, scaled linearly with the read voltage, and 0
for reverse or floating drive. The map is monotone in g, so it has a
well-defined inverse used by the weight mapper.

Populations carry per-device factors and per-device counter-hash noise
streams, so results are reproducible for any pulse schedule and any
evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Iterable

import numpy as np

from .rng import GOLDEN, MASK64, derive_seed, hash_uniform_array, mix64_array, stream

KIND_PROGRAM = "program"
KIND_ERASE = "erase"


@dataclass(frozen=True)
class DeviceConfig:
    """All calibration anchors, rates, rails and sigmas (dumpable)."""

    # conductance envelope and pulse rails, siemens
    g_floor: float = 0.5e-9
    g_ceiling: float = 2.6e-6
    program_rail: float = 0.0
    erase_rail: float = 2.7e-6
    # nominal pulse amplitudes, volts (recorded; dynamics are width-driven)
    program_voltage: float = 5.0
    erase_voltage: float = 8.0
    # log-step per pulse at the reference widths, and the width power law
    lambda_prog_ref: float = 0.15
    prog_width_ref: float = 200e-6
    lambda_erase_ref: float = 0.0171
    erase_width_ref: float = 100e-6
    width_exponent: float = 1.2555
    # read-current calibration anchors at v_ref (siemens -> amperes)
    v_ref: float = 2.0
    read_anchor_g: tuple[float, ...] = (1.0e-9, 2.2e-6, 2.5e-6)
    read_anchor_i: tuple[float, ...] = (3.2e-9, 4.5e-6, 5.0e-6)
    # cycle-to-cycle relative sigma at the two characterized states
    c2c_sigma_lcs: float = 0.048
    c2c_sigma_lcs_g: float = 1.0e-9
    c2c_sigma_hcs: float = 0.0074
    c2c_sigma_hcs_g: float = 1.0e-6
    # device-to-device spread: conductance-axis scale and pulse-rate factors
    d2d_sigma: float = 0.027
    d2d_rate_sigma: float = 0.15
    # as-fabricated / erased-HCS characterization state
    hcs_init: float = 1.04e-6

    def nominal(self) -> "DeviceConfig":
        """Copy with every variability sigma set to zero."""
        return replace(
            self, c2c_sigma_lcs=0.0, c2c_sigma_hcs=0.0,
            d2d_sigma=0.0, d2d_rate_sigma=0.0,
        )

    def pulse_lambda(self, kind: str, width: float) -> float:
        """Nominal log-step magnitude for one pulse of the given width."""
        if width <= 0:
            raise ValueError(f"pulse width must be positive, got {width}")
        if kind == KIND_PROGRAM:
            ref, wref = self.lambda_prog_ref, self.prog_width_ref
        elif kind == KIND_ERASE:
            ref, wref = self.lambda_erase_ref, self.erase_width_ref
        else:
            raise ValueError(f"unknown pulse kind {kind!r}")
        return ref * (width / wref) ** self.width_exponent

    def c2c_sigma(self, g: np.ndarray) -> np.ndarray:
        """Relative per-pulse sigma, interpolated in log-conductance."""
        lo = np.log(self.c2c_sigma_lcs_g)
        hi = np.log(self.c2c_sigma_hcs_g)
        t = np.clip((np.log(g) - lo) / (hi - lo), 0.0, 1.0)
        return self.c2c_sigma_lcs + t * (self.c2c_sigma_hcs - self.c2c_sigma_lcs)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "DeviceConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown device config keys: {sorted(unknown)}")
        kwargs = {
            k: tuple(v) if isinstance(v, list) else v for k, v in d.items()
        }
        return cls(**kwargs)


@dataclass(frozen=True)
class PulseSpec:
    """One program or erase pulse."""

    kind: str
    width: float
    amplitude: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in (KIND_PROGRAM, KIND_ERASE):
            raise ValueError(f"unknown pulse kind {self.kind!r}")
        if self.width <= 0:
            raise ValueError("pulse width must be positive")


@dataclass
class DevicePopulation:
    """A 2-D array of cells with per-device variability factors.

    g:     actual conductances, siemens
    rate:  per-device multiplier on the pulse exponent
    scale: per-device multiplier on the conductance axis (erase rail)
    keys:  per-device 64-bit noise stream identities
    drawn: per-device count of noise draws consumed so far
    """

    g: np.ndarray
    rate: np.ndarray
    scale: np.ndarray
    keys: np.ndarray
    drawn: np.ndarray
    config: DeviceConfig

    @property
    def shape(self) -> tuple[int, ...]:
        return self.g.shape

    def view_flat(self) -> "DevicePopulation":
        return DevicePopulation(
            g=self.g.reshape(-1), rate=self.rate.reshape(-1),
            scale=self.scale.reshape(-1), keys=self.keys.reshape(-1),
            drawn=self.drawn.reshape(-1), config=self.config,
        )


def sample_population(
    rows: int, cols: int, config: DeviceConfig, seed: int,
    init_g: float | None = None,
) -> DevicePopulation:
    """Population in the erased-HCS characterization state.

    Device factors are lognormal: exp(sigma * z) with relative SD ~= sigma.
    Initial conductance is hcs_init scaled per device, clamped to the
    envelope. Same seed gives an identical population.
    """
    if rows < 1 or cols < 1:
        raise ValueError("population needs at least one device")
    gen = stream(seed, "d2d")
    shape = (rows, cols)
    rate = np.exp(config.d2d_rate_sigma * gen.standard_normal(shape))
    scale = np.exp(config.d2d_sigma * gen.standard_normal(shape))
    base = derive_seed(seed, "c2c")
    idx = np.arange(rows * cols, dtype=np.uint64).reshape(shape)
    keys = mix64_array(np.uint64(base) + idx * np.uint64(GOLDEN))
    g0 = config.hcs_init if init_g is None else init_g
    g = np.clip(g0 * scale, config.g_floor, config.g_ceiling)
    return DevicePopulation(
        g=g, rate=rate, scale=scale, keys=keys,
        drawn=np.zeros(shape, dtype=np.uint64), config=config,
    )


def _noise_normals(pop: DevicePopulation, mask: np.ndarray) -> np.ndarray:
    """One standard normal per masked cell, from its counter stream."""
    keys = pop.keys[mask]
    drawn = pop.drawn[mask]
    u1 = hash_uniform_array(keys + (drawn * np.uint64(2) + np.uint64(1)))
    u2 = hash_uniform_array(keys + (drawn * np.uint64(2) + np.uint64(2)))
    pop.drawn[mask] = drawn + np.uint64(1)
    # Box-Muller; u1 shifted away from zero for the log.
    r = np.sqrt(-2.0 * np.log1p(-u1))
    return r * np.cos(2.0 * np.pi * u2)


def apply_pulses(
    pop: DevicePopulation, spec: PulseSpec, mask: np.ndarray | None = None,
) -> None:
    """Apply one pulse to every masked cell, in place."""
    cfg = pop.config
    lam = cfg.pulse_lambda(spec.kind, spec.width)
    if mask is None:
        mask = np.ones(pop.shape, dtype=bool)
    if not mask.any():
        return
    g = pop.g[mask]
    step = np.exp(-lam * pop.rate[mask])
    if spec.kind == KIND_PROGRAM:
        nominal = cfg.program_rail + (g - cfg.program_rail) * step
        nominal = np.minimum(g, nominal)  # saturating, never moves up
    else:
        rail = cfg.erase_rail * pop.scale[mask]
        nominal = rail + (g - rail) * step
        nominal = np.maximum(g, nominal)  # saturating, never moves down
    sigma = cfg.c2c_sigma(np.maximum(nominal, cfg.g_floor))
    if np.any(sigma > 0):
        nominal = nominal * np.exp(sigma * _noise_normals(pop, mask))
    pop.g[mask] = np.clip(nominal, cfg.g_floor, cfg.g_ceiling)


def read_current(
    g: np.ndarray | float, v_drive: float, config: DeviceConfig
) -> np.ndarray | float:
    """Cell current at the given drive voltage.

    Forward drive interpolates the calibration table log-log and scales
    by v_drive/v_ref; the end segments extrapolate by slope. Reverse or
    floating drive carries no current.
    """
    if v_drive <= 0:
        return np.zeros_like(np.asarray(g, dtype=float)) if np.ndim(g) else 0.0
    lg = np.log(np.asarray(g, dtype=float))
    lin = _loglog_interp(lg, np.log(config.read_anchor_g), np.log(config.read_anchor_i))
    i = np.exp(lin) * (v_drive / config.v_ref)
    return i if np.ndim(g) else float(i)


def conductance_for_current(
    i_target: np.ndarray | float, config: DeviceConfig
) -> np.ndarray | float:
    """Inverse of read_current at v_ref. i_target must be positive."""
    li = np.log(np.asarray(i_target, dtype=float))
    lin = _loglog_interp(li, np.log(config.read_anchor_i), np.log(config.read_anchor_g))
    g = np.exp(lin)
    return g if np.ndim(i_target) else float(g)


def _loglog_interp(x: np.ndarray, xp: Iterable[float], fp: Iterable[float]) -> np.ndarray:
    xp = np.asarray(list(xp))
    fp = np.asarray(list(fp))
    out = np.interp(x, xp, fp)
    lo_slope = (fp[1] - fp[0]) / (xp[1] - xp[0])
    hi_slope = (fp[-1] - fp[-2]) / (xp[-1] - xp[-2])
    out = np.where(x < xp[0], fp[0] + (x - xp[0]) * lo_slope, out)
    out = np.where(x > xp[-1], fp[-1] + (x - xp[-1]) * hi_slope, out)
    return out


def pulses_until(
    pop: DevicePopulation, spec: PulseSpec, target_g: float,
    mask: np.ndarray | None = None, cap: int = 256,
) -> np.ndarray:
    """Closed-loop traversal: pulse each masked cell until it crosses
    target_g (below for program, above for erase) or the cap is hit.

    Returns the per-cell pulse count; capped cells hold cap. The stop
    decision uses the actual (read-back) conductance, one verify per
    pulse, which is what shapes the endpoint statistics.
    """
    if mask is None:
        mask = np.ones(pop.shape, dtype=bool)
    counts = np.zeros(pop.shape, dtype=np.int64)
    if spec.kind == KIND_PROGRAM:
        active = mask & (pop.g > target_g)
    else:
        active = mask & (pop.g < target_g)
    for _ in range(cap):
        if not active.any():
            break
        apply_pulses(pop, spec, active)
        counts[active] += 1
        if spec.kind == KIND_PROGRAM:
            active &= pop.g > target_g
        else:
            active &= pop.g < target_g
    return counts


@dataclass(frozen=True)
class C2CStats:
    lcs_mean: float
    lcs_rel_sd: float
    hcs_mean: float
    hcs_rel_sd: float


def c2c_statistics(
    n_cycles: int, config: DeviceConfig, seed: int = 0,
    prog_width: float = 200e-6, erase_width: float = 100e-6,
    lcs_target: float = 1.0e-9, hcs_target: float = 1.0e-6,
) -> C2CStats:
    """Cycle one nominal device and report endpoint statistics.

    Each cycle programs to below lcs_target then erases to above
    hcs_target at the characterization widths. Four unrecorded warm-up
    cycles bring the staircase onto its steady orbit first; with zero
    noise the recorded endpoints are exactly periodic and the reported
    SDs sit at the float-rounding floor.
    """
    if n_cycles < 100:
        raise ValueError("need at least 100 cycles for stable statistics")
    pop = sample_population(1, 1, replace(config, d2d_sigma=0.0, d2d_rate_sigma=0.0), seed)
    prog = PulseSpec(KIND_PROGRAM, prog_width)
    erase = PulseSpec(KIND_ERASE, erase_width)
    lcs = np.empty(n_cycles)
    hcs = np.empty(n_cycles)
    for cycle in range(-4, n_cycles):
        pulses_until(pop, prog, lcs_target)
        if cycle >= 0:
            lcs[cycle] = pop.g[0, 0]
        pulses_until(pop, erase, hcs_target)
        if cycle >= 0:
            hcs[cycle] = pop.g[0, 0]
    return C2CStats(
        lcs_mean=float(lcs.mean()),
        lcs_rel_sd=float(lcs.std() / lcs.mean()),
        hcs_mean=float(hcs.mean()),
        hcs_rel_sd=float(hcs.std() / hcs.mean()),
    )


def traversal_pulse_counts(
    n_devices: int, kind: str, config: DeviceConfig, seed: int,
    width: float | None = None, start_g: float | None = None,
    target_g: float | None = None, cap: int = 256,
) -> np.ndarray:
    """Per-device pulse counts for a full state traversal.

    Defaults reproduce the two characterization runs: program 200 us
    from the erased-HCS state down across 1 nS, and erase 100 us from
    the LCS state up across 1 uS.
    """
    if kind == KIND_PROGRAM:
        width = config.prog_width_ref if width is None else width
        start = config.hcs_init if start_g is None else start_g
        target = 1.0e-9 if target_g is None else target_g
    else:
        width = config.erase_width_ref if width is None else width
        start = 0.925e-9 if start_g is None else start_g
        target = 1.0e-6 if target_g is None else target_g
    pop = sample_population(n_devices, 1, config, seed, init_g=start)
    return pulses_until(pop, PulseSpec(kind, width), target, cap=cap)[:, 0]
