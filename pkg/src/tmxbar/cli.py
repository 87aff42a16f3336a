"""Command-line experiment harness.

Subcommands: train, map, infer, sweep, report, dump-device-config.
Settings resolve in three layers: built-in defaults, then the TOML file
given with --config (sections [train], [device], [read], [map],
[infer], [sweep]), then explicit flags. Reports embed the resolved
settings and sha256 content hashes of every input file.

Exit codes: 0 success, 2 usage or config error, 3 data error,
4 tuning cost beyond the configured ceiling.
"""

from __future__ import annotations

import csv
import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from .config import ConfigError, content_hash, dump_toml, load_toml, merge
from .crossbar import ReadConfig
from .data import DataError, booleanize, load_csv, load_idx, to_literals
from .device import DeviceConfig
from .energy import (
    REFERENCE_EFFICIENCY_TOPS_W,
    REFERENCE_THROUGHPUT_GOPS,
    array_area_mm2,
    throughput_gops,
)
from .logic import Model, infer as golden_infer
from .mapper import FINETUNE_BAND
from .model_io import ModelFormatError, load_model, save_model
from .pipeline import analog_infer, load_system, map_model, save_system
from .train import TrainConfig, fit

REPORT_TAG = "tmxbar-report-v1"
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NONCONVERGENCE = 4

REFERENCE_CLAUSE_PJ = 67.99
REFERENCE_CLASS_PJ = 16.22

TRAIN_DEFAULTS = {
    "dataset": "mnist", "data_root": "data", "clauses": 500, "t": 625,
    "s": 10.0, "epochs": 25, "seed": 1, "threshold": 75, "limit": 0,
    "out": "model.txt", "log": "",
}
MAP_DEFAULTS = {
    "model": "model.txt", "out": "mapped", "seed": 0, "exact": False,
    "skip_finetune": False, "max_cost": 0.05,
}
INFER_DEFAULTS = {
    "dataset": "mnist", "data_root": "data", "split": "test",
    "threshold": 75, "limit": 0, "seed": 0, "report": "",
    "tiles": "", "model": "",
}
SWEEP_DEFAULTS = {
    "dataset": "mnist", "data_root": "data", "split": "test",
    "threshold": 75, "limit": 500, "seeds": "0", "out": "sweep.csv",
}
SWEEP_PARAMS = ("c2c_sigma", "d2d_sigma", "csa_offset", "finetune_band")


class ConvergenceError(RuntimeError):
    pass


def _die(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _handled(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except DataError as exc:
            _die(EXIT_DATA, str(exc))
        except ConvergenceError as exc:
            _die(EXIT_NONCONVERGENCE, str(exc))
        except (ModelFormatError, ConfigError, ValueError, OSError) as exc:
            _die(EXIT_USAGE, str(exc))

    return wrapper


def _section(ctx: click.Context, name: str) -> dict:
    return ctx.obj.get("config", {}).get(name, {})


def _resolve(section: dict, defaults: dict, flags: dict, where: str) -> dict:
    for key in section:
        if key not in defaults:
            raise ConfigError(f"unknown key {key!r} in config section [{where}]")
    out = dict(defaults)
    out.update(section)
    out.update({k: v for k, v in flags.items() if v is not None})
    return out


def _device_config(ctx: click.Context) -> DeviceConfig:
    section = _section(ctx, "device")
    return DeviceConfig.from_dict(merge(DeviceConfig().to_dict(), section))


def _read_config(ctx: click.Context, **flag_overrides) -> ReadConfig:
    section = _section(ctx, "read")
    resolved = merge(ReadConfig().to_dict(), section, flag_overrides)
    return ReadConfig.from_dict(resolved)


def _dataset_dir(dataset: str, data_root: str, flag: str) -> Path:
    p = Path(dataset)
    if p.exists():
        return p
    rooted = Path(data_root) / dataset
    if rooted.exists():
        return rooted
    raise click.UsageError(
        f"{flag} path {dataset!r} does not exist (also tried {rooted})"
    )


_SPLIT_PREFIX = {"train": "train", "test": "t10k"}


def _idx_path(root: Path, prefix: str, kind: str) -> Path:
    base = f"{prefix}-{kind}"
    for candidate in (root / f"{base}.gz", root / base):
        if candidate.is_file():
            return candidate
    raise click.UsageError(f"no {base}[.gz] under {root}")


def _load_literals(
    dataset: str, data_root: str, split: str, threshold: int, flag: str
) -> tuple[np.ndarray, np.ndarray, list[Path]]:
    """Literal matrix + labels from an IDX directory or a CSV file."""
    src = _dataset_dir(dataset, data_root, flag)
    if src.is_file():
        features, labels = load_csv(src)
        return to_literals(features), labels, [src]
    prefix = _SPLIT_PREFIX.get(split)
    if prefix is None:
        raise click.UsageError(f"--split must be one of {sorted(_SPLIT_PREFIX)}")
    images = _idx_path(src, prefix, "images-idx3-ubyte")
    labels_p = _idx_path(src, prefix, "labels-idx1-ubyte")
    ds = load_idx(images, labels_p)
    return booleanize(ds, threshold), ds.labels, [images, labels_p]


def _hashes(paths: list[Path]) -> dict:
    return {str(p): content_hash(p) for p in paths}


def _write_report(path: str | Path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")


@click.group()
@click.option(
    "--config", "config_path", type=click.Path(), default=None,
    help="TOML experiment config; flags override its values.",
)
@click.pass_context
def main(ctx: click.Context, config_path: str | None) -> None:
    """Behavioral crossbar accelerator simulator for coalesced Tsetlin machines."""
    ctx.ensure_object(dict)
    if config_path is not None:
        try:
            ctx.obj["config"] = load_toml(config_path)
        except ConfigError as exc:
            _die(EXIT_USAGE, str(exc))
        ctx.obj["config_path"] = config_path
    else:
        ctx.obj["config"] = {}


@main.command("train")
@click.option("--dataset", default=None, help="IDX directory, CSV file, or name under --data-root.")
@click.option("--data-root", default=None)
@click.option("--clauses", type=int, default=None)
@click.option("--t", type=int, default=None, help="Vote clamp T.")
@click.option("--s", type=float, default=None, help="Specificity.")
@click.option("--epochs", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--threshold", type=int, default=None, help="Pixel binarization threshold.")
@click.option("--limit", type=int, default=None, help="Use only the first N samples (0 = all).")
@click.option("--out", default=None, help="Model file to write.")
@click.option("--log", default=None, help="Training log JSON (default <out>.log.json).")
@click.pass_context
@_handled
def cmd_train(ctx: click.Context, **flags) -> None:
    """Train a model and write it with an accuracy log."""
    cfg = _resolve(_section(ctx, "train"), TRAIN_DEFAULTS, flags, "train")
    literals, labels, files = _load_literals(
        cfg["dataset"], cfg["data_root"], "train", cfg["threshold"], "--dataset"
    )
    if cfg["limit"]:
        literals, labels = literals[: cfg["limit"]], labels[: cfg["limit"]]
    tc = TrainConfig(
        n_clauses=cfg["clauses"], t_threshold=cfg["t"], s=cfg["s"],
        epochs=cfg["epochs"], seed=cfg["seed"],
    )
    model, history = fit(literals, labels, tc)
    out = Path(cfg["out"])
    save_model(out, model)
    log_path = Path(cfg["log"]) if cfg["log"] else Path(str(out) + ".log.json")
    _write_report(log_path, {
        "format": REPORT_TAG,
        "command": "train",
        "resolved": cfg,
        "history": history,
        "inputs": _hashes(files),
        "model_file": {"path": str(out), "sha256": content_hash(out)},
    })
    final = history["train_accuracy"][-1] if history["train_accuracy"] else None
    click.echo(f"model written to {out} ({model.n_clauses} clauses, "
               f"{model.n_classes} classes, backend {history['backend']})")
    if final is not None:
        click.echo(f"final train accuracy {final:.4f}")
    click.echo(f"log written to {log_path}")


@main.command("map")
@click.option("--model", "model_path", default=None)
@click.option("--out", default=None, help="Output directory for tile snapshots.")
@click.option("--seed", type=int, default=None)
@click.option("--exact", is_flag=True, default=None, help="Ideal placement, no pulses.")
@click.option("--skip-finetune", is_flag=True, default=None)
@click.option("--max-cost", type=float, default=None,
              help="Fail (exit 4) if any stage's flagged-cell fraction exceeds this.")
@click.pass_context
@_handled
def cmd_map(ctx: click.Context, model_path, **flags) -> None:
    """Lower a trained model onto simulated tiles."""
    flags["model"] = model_path
    cfg = _resolve(_section(ctx, "map"), MAP_DEFAULTS, flags, "map")
    mp = Path(cfg["model"])
    if not mp.is_file():
        raise click.UsageError(f"--model path {mp} does not exist")
    model = load_model(mp)
    device = _device_config(ctx)
    system = map_model(
        model, device, seed=cfg["seed"], exact=bool(cfg["exact"]),
        skip_finetune=bool(cfg["skip_finetune"]),
    )
    for stage in ("encode", "pretune", "finetune"):
        rep = system.reports.get(stage)
        if rep and rep["cost"] > cfg["max_cost"]:
            raise ConvergenceError(
                f"{stage} cost {rep['cost']:.4f} exceeds ceiling {cfg['max_cost']}"
            )
    out = Path(cfg["out"])
    save_system(out, system)
    _write_histograms(out / "pulse_histograms.csv", system.reports)
    _write_report(out / "map_report.json", {
        "format": REPORT_TAG,
        "command": "map",
        "resolved": {k: cfg[k] for k in sorted(cfg)},
        "device_config": device.to_dict(),
        "reports": system.reports,
        "inputs": _hashes([mp]),
    })
    click.echo(f"mapped system written to {out}")
    for r, row in enumerate(system.clause_tiles):
        for c, tile in enumerate(row):
            click.echo(f"clause tile r{r}c{c}: {tile.rows}x{tile.cols} "
                       f"({tile.used_rows} used rows)")
    for r, row in enumerate(system.class_tiles):
        for c, tile in enumerate(row):
            click.echo(f"class tile r{r}c{c}: {tile.rows}x{tile.cols}")
    for stage in ("encode", "pretune", "finetune"):
        rep = system.reports.get(stage)
        if rep:
            click.echo(
                f"{stage}: program mean {rep['program_mean']:.2f} "
                f"sd {rep['program_sd']:.2f}, erase mean {rep['erase_mean']:.2f} "
                f"sd {rep['erase_sd']:.2f}, cost {rep['cost']:.4f}"
            )


def _write_histograms(path: Path, reports: dict) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["stage", "kind", "pulses", "cells"])
        for stage in ("encode", "pretune", "finetune"):
            rep = reports.get(stage)
            if not rep:
                continue
            for kind in ("program", "erase", "total"):
                for pulses, cells in enumerate(rep[f"{kind}_hist"]):
                    writer.writerow([stage, kind, pulses, cells])


@main.command("infer")
@click.option("--tiles", default=None, help="Mapped-system directory.")
@click.option("--model", "model_path", default=None, help="Model file for the golden reference.")
@click.option("--golden", is_flag=True, default=False, help="Logic-only inference, no analog.")
@click.option("--dataset", default=None)
@click.option("--data-root", default=None)
@click.option("--split", default=None, help="train or test (IDX datasets).")
@click.option("--threshold", type=int, default=None)
@click.option("--limit", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--csa-offset-sd", type=float, default=None, help="Comparator offset SD, amps.")
@click.option("--report", "report_path", default=None, help="Write the JSON report here.")
@click.pass_context
@_handled
def cmd_infer(ctx: click.Context, model_path, report_path, golden, csa_offset_sd, **flags) -> None:
    """Run golden and/or analog inference and report accuracy and energy."""
    flags["report"] = report_path
    flags["model"] = model_path
    cfg = _resolve(_section(ctx, "infer"), INFER_DEFAULTS, flags, "infer")
    tiles = cfg["tiles"] or None
    model_path = cfg["model"] or None
    if golden and model_path is None:
        raise click.UsageError("--golden needs --model")
    if not golden and tiles is None:
        raise click.UsageError("provide --tiles (or --golden with --model)")
    literals, labels, files = _load_literals(
        cfg["dataset"], cfg["data_root"], cfg["split"], cfg["threshold"], "--dataset"
    )
    if cfg["limit"]:
        literals, labels = literals[: cfg["limit"]], labels[: cfg["limit"]]
    n = literals.shape[0]
    payload: dict = {
        "format": REPORT_TAG,
        "command": "infer",
        "resolved": {k: cfg[k] for k in sorted(cfg) if k != "report"},
        "n_samples": n,
        "inputs": _hashes(files),
        "references": {
            "clause_pj_per_datapoint": REFERENCE_CLAUSE_PJ,
            "class_pj_per_datapoint": REFERENCE_CLASS_PJ,
        },
    }

    golden_preds = None
    if model_path is not None:
        mp = Path(model_path)
        if not mp.is_file():
            raise click.UsageError(f"--model path {mp} does not exist")
        model = load_model(mp)
        golden_preds = golden_infer(model, literals)
        acc = float(np.mean(golden_preds == labels))
        payload["golden_accuracy"] = acc
        payload["inputs"][str(mp)] = content_hash(mp)
        click.echo(f"golden accuracy {acc:.4f} ({n} samples)")

    if not golden:
        system = load_system(tiles)
        read_cfg = _read_config(
            ctx, **({"csa_offset_sd": csa_offset_sd} if csa_offset_sd is not None else {})
        )
        result = analog_infer(system, literals, read_cfg, seed=cfg["seed"])
        acc = float(np.mean(result["predictions"] == labels))
        clause_pj = result["clause_ledger"].total_aj / n / 1e6
        class_pj = result["class_ledger"].total_aj / n / 1e6
        payload["analog_accuracy"] = acc
        payload["read_config"] = read_cfg.to_dict()
        payload["device_config"] = system.device_config.to_dict()
        payload["clause_pj_per_datapoint"] = clause_pj
        payload["class_pj_per_datapoint"] = class_pj
        payload["clause_ledger"] = result["clause_ledger"].to_dict()
        payload["class_ledger"] = result["class_ledger"].to_dict()
        payload["inputs"][str(Path(tiles) / "system.json")] = content_hash(
            Path(tiles) / "system.json"
        )
        click.echo(f"analog accuracy {acc:.4f} ({n} samples)")
        click.echo(f"clause tile {clause_pj:.2f} pJ/datapoint "
                   f"(reference {REFERENCE_CLAUSE_PJ})")
        click.echo(f"class tile {class_pj:.2f} pJ/datapoint "
                   f"(reference {REFERENCE_CLASS_PJ})")
        if golden_preds is not None:
            agree = float(np.mean(result["predictions"] == golden_preds))
            payload["agreement_with_golden"] = agree
            click.echo(f"agreement with golden {agree:.4f}")

    if cfg["report"]:
        _write_report(cfg["report"], payload)
        click.echo(f"report written to {cfg['report']}")


@main.command("sweep")
@click.option("--param", type=click.Choice(SWEEP_PARAMS), required=True)
@click.option("--values", default=None, help="Comma-separated grid, e.g. 0,0.048,0.1.")
@click.option("--seeds", default=None, help="Comma-separated mapping seeds.")
@click.option("--model", "model_path", default=None)
@click.option("--dataset", default=None)
@click.option("--data-root", default=None)
@click.option("--split", default=None)
@click.option("--threshold", type=int, default=None)
@click.option("--limit", type=int, default=None)
@click.option("--out", default=None, help="CSV output path.")
@click.pass_context
@_handled
def cmd_sweep(ctx: click.Context, param, values, model_path, **flags) -> None:
    """Accuracy/energy across a variability or tolerance grid."""
    flags["model"] = model_path
    section = {k: v for k, v in _section(ctx, "sweep").items()
               if k not in ("param", "values")}
    defaults = dict(SWEEP_DEFAULTS, model="model.txt")
    cfg = _resolve(section, defaults, flags, "sweep")
    values = values if values is not None else _section(ctx, "sweep").get("values", "")
    grid = [v.strip() for v in str(values).split(",") if v.strip() != ""]
    if not grid:
        raise click.UsageError("--values grid is empty")
    seeds = [int(s) for s in str(cfg["seeds"]).split(",") if s.strip() != ""]
    if not seeds:
        raise click.UsageError("--seeds is empty")

    mp = Path(cfg["model"])
    if not mp.is_file():
        raise click.UsageError(f"--model path {mp} does not exist")
    model = load_model(mp)
    literals, labels, _ = _load_literals(
        cfg["dataset"], cfg["data_root"], cfg["split"], cfg["threshold"], "--dataset"
    )
    if cfg["limit"]:
        literals, labels = literals[: cfg["limit"]], labels[: cfg["limit"]]
    golden_preds = golden_infer(model, literals)
    golden_acc = float(np.mean(golden_preds == labels))
    base_device = _device_config(ctx)
    base_read = _read_config(ctx)

    rows = []
    for seed in seeds:
        cached_system = None
        for raw in grid:
            value = float(raw)
            device, read_cfg, band = base_device, base_read, None
            if param == "c2c_sigma":
                ratio = value / DeviceConfig().c2c_sigma_lcs
                device = DeviceConfig.from_dict(merge(base_device.to_dict(), {
                    "c2c_sigma_lcs": value,
                    "c2c_sigma_hcs": base_device.c2c_sigma_hcs * ratio,
                }))
            elif param == "d2d_sigma":
                device = DeviceConfig.from_dict(
                    merge(base_device.to_dict(), {"d2d_sigma": value})
                )
            elif param == "csa_offset":
                read_cfg = ReadConfig.from_dict(
                    merge(base_read.to_dict(), {"csa_offset_sd": value})
                )
            else:
                band = int(value)
            if param == "csa_offset":
                if cached_system is None:
                    cached_system = map_model(model, device, seed=seed)
                system = cached_system
            else:
                system = map_model(model, device, seed=seed, finetune_band=band)
            result = analog_infer(system, literals, read_cfg, seed=seed)
            n = result["n_samples"]
            rows.append({
                "param": param,
                "value": raw,
                "seed": seed,
                "golden_accuracy": f"{golden_acc:.6f}",
                "analog_accuracy":
                    f"{float(np.mean(result['predictions'] == labels)):.6f}",
                "agreement":
                    f"{float(np.mean(result['predictions'] == golden_preds)):.6f}",
                "clause_pj_per_datapoint":
                    f"{result['clause_ledger'].total_aj / n / 1e6:.4f}",
                "class_pj_per_datapoint":
                    f"{result['class_ledger'].total_aj / n / 1e6:.4f}",
                "mapping_total_aj":
                    str(system.reports["mapping_ledger"]["total_aj"]),
            })
            click.echo(f"{param}={raw} seed={seed}: "
                       f"analog accuracy {rows[-1]['analog_accuracy']}")
    with open(cfg["out"], "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    click.echo(f"sweep written to {cfg['out']} ({len(rows)} rows)")


@main.command("report")
@click.option("--tiles", required=True, help="Mapped-system directory.")
@click.option("--infer-report", "infer_report", default=None,
              help="JSON report from `infer` to fold energy figures in.")
@click.option("--out", default=None, help="Write JSON here instead of stdout.")
@click.pass_context
@_handled
def cmd_report(ctx: click.Context, tiles, infer_report, out) -> None:
    """Area/throughput/energy summary of a mapped system."""
    system = load_system(tiles)
    t_read = _read_config(ctx).t_read
    clause_tiles = [
        {"rows": t.used_rows, "cols": t.used_cols,
         "area_mm2": array_area_mm2(t.used_rows, t.used_cols)}
        for row in system.clause_tiles for t in row
    ]
    class_tiles = [
        {"rows": t.used_rows, "cols": t.used_cols,
         "area_mm2": array_area_mm2(t.used_rows, t.used_cols)}
        for row in system.class_tiles for t in row
    ]
    columns = sum(t["cols"] for t in clause_tiles + class_tiles)
    payload: dict = {
        "format": REPORT_TAG,
        "command": "report",
        "clause_tiles": clause_tiles,
        "class_tiles": class_tiles,
        "total_area_mm2": sum(t["area_mm2"] for t in clause_tiles + class_tiles),
        "parallel_columns": columns,
        "throughput_gops": throughput_gops(columns, t_read),
        "references": {
            "throughput_gops": REFERENCE_THROUGHPUT_GOPS,
            "efficiency_tops_per_w": REFERENCE_EFFICIENCY_TOPS_W,
            "clause_area_mm2": 2.477,
            "class_area_mm2": 0.016,
        },
        "inputs": {
            str(Path(tiles) / "system.json"):
                content_hash(Path(tiles) / "system.json"),
        },
    }
    if infer_report:
        rep = json.loads(Path(infer_report).read_text())
        total_aj = (rep["clause_ledger"]["total_aj"]
                    + rep["class_ledger"]["total_aj"])
        events = (rep["clause_ledger"]["read_events"]
                  + rep["class_ledger"]["read_events"])
        payload["read_energy_aj"] = total_aj
        payload["column_reads"] = events
        # ops per joule; 1e-18 J per aJ, 1e12 ops per Tera-op
        payload["efficiency_tops_per_w"] = events / (total_aj * 1e-18) / 1e12
        payload["inputs"][str(infer_report)] = content_hash(infer_report)
    text = json.dumps(payload, indent=1, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n")
        click.echo(f"report written to {out}")
    else:
        click.echo(text)


@main.command("dump-device-config")
@click.option("--out", default=None, help="Write TOML here instead of stdout.")
@click.pass_context
@_handled
def cmd_dump_device_config(ctx: click.Context, out) -> None:
    """Print the resolved device configuration as TOML."""
    cfg = _device_config(ctx)
    text = dump_toml({"device": cfg.to_dict()})
    if out:
        Path(out).write_text(text)
        click.echo(f"device config written to {out}")
    else:
        click.echo(text, nl=False)


if __name__ == "__main__":
    main()
