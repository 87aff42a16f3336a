"""Golden pure-logic model of the coalesced Tsetlin machine.

Everything the analog pipeline computes is checked against this module.
A clause is a conjunction over its included literals; clauses are shared
across classes and vote through a signed integer weight matrix. Clause
evaluation is bit-packed 64 literals per word for speed, but the results
are bit-identical to the per-element definition (the test suite checks
this against a brute-force evaluator).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DimensionError(ValueError):
    """Shapes of model parts or inputs disagree."""


@dataclass
class Model:
    """Trained classifier parameters.

    actions: bool matrix, n_literals x n_clauses. True = include.
    weights: int32 matrix, n_classes x n_clauses.
    state_bound: upper TA state bound recorded by the trainer (2N).
    """

    actions: np.ndarray
    weights: np.ndarray
    state_bound: int = 256

    def __post_init__(self) -> None:
        self.actions = np.asarray(self.actions, dtype=bool)
        self.weights = np.asarray(self.weights, dtype=np.int32)
        if self.actions.ndim != 2 or self.weights.ndim != 2:
            raise DimensionError("actions and weights must be 2-D")
        if self.weights.shape[1] != self.actions.shape[1]:
            raise DimensionError(
                f"clause count mismatch: actions {self.actions.shape[1]}, "
                f"weights {self.weights.shape[1]}"
            )
        if self.n_literals % 2 != 0:
            raise DimensionError("literal count must be even (feature + negation)")
        if self.n_classes < 1:
            raise DimensionError("need at least one class")

    @property
    def n_literals(self) -> int:
        return self.actions.shape[0]

    @property
    def n_clauses(self) -> int:
        return self.actions.shape[1]

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]


def check_literals(lit: np.ndarray, n_literals: int) -> np.ndarray:
    lit = np.asarray(lit, dtype=bool)
    if lit.shape[-1] != n_literals:
        raise DimensionError(
            f"literal vector length {lit.shape[-1]}, model expects {n_literals}"
        )
    return lit


def compute_clause(actions_col: np.ndarray, literals: np.ndarray) -> bool:
    """One clause: AND over i of (literal[i] OR NOT include[i]).

    Equivalently 0 iff some included literal is 0. A clause with no
    includes evaluates to 1.
    """
    actions_col = np.asarray(actions_col, dtype=bool)
    literals = check_literals(literals, actions_col.shape[0])
    return bool(np.all(literals | ~actions_col))


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a bool array (..., K) into uint64 words (..., ceil(K/64)).

    Bit k of word w is element 64*w + k. Padding bits are zero.
    """
    bits = np.asarray(bits, dtype=bool)
    k = bits.shape[-1]
    words = (k + 63) // 64
    padded = np.zeros(bits.shape[:-1] + (words * 64,), dtype=bool)
    padded[..., :k] = bits
    packed = np.packbits(padded, axis=-1, bitorder="little")
    return packed.view(np.uint64).reshape(bits.shape[:-1] + (words,))


def compute_clauses(actions: np.ndarray, literals: np.ndarray) -> np.ndarray:
    """All clause outputs for one literal vector (bool, length n_clauses)."""
    actions = np.asarray(actions, dtype=bool)
    literals = check_literals(literals, actions.shape[0])
    return compute_clauses_packed(
        pack_bits(actions.T), pack_bits(literals[None, :])
    )[0]


def compute_clauses_packed(
    actions_packed: np.ndarray, literals_packed: np.ndarray, block: int = 256
) -> np.ndarray:
    """Batched clause evaluation on packed bits.

    actions_packed: (n_clauses, words), literals_packed: (samples, words).
    Returns bool (samples, n_clauses). Chunked over samples to bound the
    intermediate (samples x clauses x words) array.
    """
    s = literals_packed.shape[0]
    out = np.empty((s, actions_packed.shape[0]), dtype=bool)
    for lo in range(0, s, block):
        hi = min(lo + block, s)
        viol = actions_packed[None, :, :] & ~literals_packed[lo:hi, None, :]
        out[lo:hi] = ~viol.any(axis=2)
    return out


def class_sums(weights: np.ndarray, clauses: np.ndarray) -> np.ndarray:
    """v[i] = sum_j weights[i, j] * clauses[j], as int64."""
    weights = np.asarray(weights)
    clauses = np.asarray(clauses, dtype=bool)
    if weights.shape[1] != clauses.shape[-1]:
        raise DimensionError(
            f"weights expect {weights.shape[1]} clauses, got {clauses.shape[-1]}"
        )
    return clauses.astype(np.int64) @ weights.T.astype(np.int64)


def predict(scores: np.ndarray) -> int | np.ndarray:
    """Argmax class with ties broken by the lowest index.

    Accepts one score vector or a batch (samples x classes).
    """
    scores = np.asarray(scores)
    if scores.shape[-1] == 0:
        raise DimensionError("empty score vector")
    # np.argmax already returns the first maximum.
    idx = np.argmax(scores, axis=-1)
    return int(idx) if scores.ndim == 1 else idx


def threshold_output(scores: np.ndarray) -> np.ndarray:
    """Multi-label output: y[i] = 1 iff v[i] > 0 (v = 0 maps to 0)."""
    return np.asarray(scores) > 0


def infer(model: Model, literals: np.ndarray) -> np.ndarray:
    """Predicted class per sample for a (samples x K) literal matrix."""
    literals = check_literals(np.atleast_2d(literals), model.n_literals)
    clauses = compute_clauses_packed(
        pack_bits(model.actions.T), pack_bits(literals)
    )
    return predict(class_sums(model.weights, clauses))


def accuracy(model: Model, literals: np.ndarray, labels: np.ndarray) -> float:
    pred = infer(model, literals)
    return float(np.mean(pred == np.asarray(labels)))
