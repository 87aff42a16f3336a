"""Model file reader/writer.

Versioned structured-text container, bit-exact on round-trip:

    tmxbar-model v1
    literals <K>
    clauses <n>
    classes <m>
    state-bound <2N>
    actions
    <K lines of n '0'/'1' characters, literal-major>
    weights
    <m lines of n space-separated integers>
    end
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .logic import Model

FORMAT_TAG = "tmxbar-model v1"


class ModelFormatError(ValueError):
    """The file is not a well-formed model container."""


def save_model(path: str | Path, model: Model) -> None:
    lines = [
        FORMAT_TAG,
        f"literals {model.n_literals}",
        f"clauses {model.n_clauses}",
        f"classes {model.n_classes}",
        f"state-bound {model.state_bound}",
        "actions",
    ]
    digits = model.actions.astype(np.uint8) + ord("0")
    lines.extend(row.tobytes().decode("ascii") for row in digits)
    lines.append("weights")
    lines.extend(" ".join(str(int(w)) for w in row) for row in model.weights)
    lines.append("end")
    Path(path).write_text("\n".join(lines) + "\n")


def _expect(cond: bool, msg: str) -> None:
    if not cond:
        raise ModelFormatError(msg)


def _header_int(line: str, key: str) -> int:
    parts = line.split()
    _expect(len(parts) == 2 and parts[0] == key, f"expected '{key} <int>', got {line!r}")
    try:
        return int(parts[1])
    except ValueError as e:
        raise ModelFormatError(f"bad integer in header line {line!r}") from e


def load_model(path: str | Path) -> Model:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ModelFormatError(f"cannot read model file {path}: {e}") from e
    lines = text.splitlines()
    _expect(len(lines) >= 8, "truncated model file")
    _expect(lines[0] == FORMAT_TAG, f"unknown format tag {lines[0]!r}")
    k = _header_int(lines[1], "literals")
    n = _header_int(lines[2], "clauses")
    m = _header_int(lines[3], "classes")
    bound = _header_int(lines[4], "state-bound")
    _expect(lines[5] == "actions", "missing actions section")
    _expect(len(lines) >= 6 + k + 1 + m + 1, "truncated model file")

    actions = np.empty((k, n), dtype=bool)
    for i in range(k):
        row = lines[6 + i]
        _expect(len(row) == n, f"action row {i} has length {len(row)}, expected {n}")
        buf = np.frombuffer(row.encode("ascii"), dtype=np.uint8)
        _expect(bool(np.all((buf == ord("0")) | (buf == ord("1")))),
                f"action row {i} has characters other than 0/1")
        actions[i] = buf == ord("1")

    _expect(lines[6 + k] == "weights", "missing weights section")
    weights = np.empty((m, n), dtype=np.int32)
    for i in range(m):
        row = lines[7 + k + i].split()
        _expect(len(row) == n, f"weight row {i} has {len(row)} entries, expected {n}")
        try:
            weights[i] = [int(w) for w in row]
        except ValueError as e:
            raise ModelFormatError(f"non-integer weight in row {i}") from e

    _expect(lines[7 + k + m] == "end", "missing end marker")
    return Model(actions=actions, weights=weights, state_bound=bound)
