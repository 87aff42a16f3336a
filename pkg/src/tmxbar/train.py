"""Coalesced Tsetlin machine trainer.

Clauses are shared across classes through a signed weight matrix. Per
sample, the labeled class receives clause updates that push its vote sum
toward +T and one uniformly sampled other class receives updates pushing
its sum toward -T. Feedback type per clause follows the sign of the
receiving class's weight: positive weights get recognize feedback on the
labeled class and erase feedback on the negative class, and vice versa
for negative weights. Firing clauses have the receiving weight stepped
toward the slot's polarity.

The per-clause / per-literal decisions run in the selected kernel
backend (compiled or numpy, bit-identical); this module owns
initialization, epoch ordering, logging and the final Model assembly.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import kernels
from .data import DataError
from .logic import DimensionError, Model, accuracy, pack_bits
from .rng import derive_seed, mix64_pair, stream

STATE_BOUND = 256
INIT_LOW = 128  # fresh automata sit just at the include boundary


@dataclass(frozen=True)
class TrainConfig:
    n_clauses: int = 500
    t_threshold: int = 625
    s: float = 10.0
    epochs: int = 25
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_clauses < 1:
            raise ValueError("need at least one clause")
        if self.t_threshold < 1:
            raise ValueError("vote target T must be >= 1")
        if not self.s > 1.0:
            raise ValueError("specificity s must be > 1")
        if self.epochs < 0:
            raise ValueError("epoch count must be >= 0")

    def to_dict(self) -> dict:
        return {
            "n_clauses": self.n_clauses,
            "t_threshold": self.t_threshold,
            "s": self.s,
            "epochs": self.epochs,
            "seed": self.seed,
        }


def init_parameters(
    n_clauses: int, n_literals: int, n_classes: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Fresh TA states in {128, 129} and weights in {-1, +1}."""
    gen = stream(seed, "train", "init")
    state = gen.integers(
        INIT_LOW, INIT_LOW + 2, size=(n_clauses, n_literals), dtype=np.int16
    )
    weights = gen.integers(0, 2, size=(n_classes, n_clauses), dtype=np.int32)
    weights = (2 * weights - 1).astype(np.int32)
    return state, weights


def fit(
    literals: np.ndarray,
    labels: np.ndarray,
    config: TrainConfig,
    n_classes: int | None = None,
    log_accuracy: bool = True,
) -> tuple[Model, dict]:
    """Train a model; returns it with a JSON-ready history dict."""
    literals = np.asarray(literals, dtype=bool)
    labels = np.asarray(labels)
    if literals.ndim != 2 or literals.shape[0] != labels.shape[0]:
        raise DimensionError("literals must be (samples x K) matching labels")
    if literals.shape[1] % 2 != 0:
        raise DimensionError("literal count must be even (feature + negation)")
    n_samples, k_literals = literals.shape
    if n_samples == 0:
        raise DataError("empty training set")
    if n_classes is None:
        n_classes = int(labels.max()) + 1
    if n_classes < 2:
        raise DataError("training needs at least two classes")
    if labels.min() < 0 or labels.max() >= n_classes:
        raise DataError(
            f"label outside [0, {n_classes}): found {int(labels.max())}"
        )

    state, weights = init_parameters(
        config.n_clauses, k_literals, n_classes, config.seed
    )
    actions_packed = np.ascontiguousarray(pack_bits(state > INIT_LOW))
    x_packed = np.ascontiguousarray(pack_bits(literals))
    x_bool = np.ascontiguousarray(literals.astype(np.uint8))
    labels32 = np.ascontiguousarray(labels.astype(np.int32))

    thr_up = kernels.float_threshold((config.s - 1.0) / config.s)
    thr_dn = kernels.float_threshold(1.0 / config.s)
    run_key = derive_seed(config.seed, "train", "events")

    history: dict = {
        "config": config.to_dict(),
        "backend": kernels.backend_name(),
        "n_samples": n_samples,
        "n_literals": k_literals,
        "n_classes": n_classes,
        "train_accuracy": [],
        "epoch_seconds": [],
    }
    for epoch in range(config.epochs):
        order = stream(config.seed, "train", "order", epoch).permutation(
            n_samples
        ).astype(np.int64)
        started = time.perf_counter()
        kernels.train_epoch(
            state, actions_packed, weights,
            x_packed, x_bool, labels32, order,
            config.t_threshold, thr_up, thr_dn,
            mix64_pair(run_key, epoch),
        )
        history["epoch_seconds"].append(round(time.perf_counter() - started, 3))
        if log_accuracy:
            snap = Model(
                actions=(state > INIT_LOW).T, weights=weights,
                state_bound=STATE_BOUND,
            )
            history["train_accuracy"].append(
                round(accuracy(snap, literals, labels), 6)
            )

    model = Model(
        actions=(state > INIT_LOW).T, weights=weights, state_bound=STATE_BOUND
    )
    return model, history
