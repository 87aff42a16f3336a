"""Golden-model checks against brute-force evaluators."""

import numpy as np
import pytest

from tmxbar.logic import (
    DimensionError,
    Model,
    class_sums,
    compute_clause,
    compute_clauses,
    compute_clauses_packed,
    infer,
    pack_bits,
    predict,
    threshold_output,
)


def brute_clause(actions_col, literals):
    # Direct transcription of the definition, one literal at a time.
    out = True
    for inc, lit in zip(actions_col, literals):
        out = out and (bool(lit) or not bool(inc))
    return out


def test_pack_bits_bit_positions():
    rng = np.random.default_rng(11)
    bits = rng.random(130) < 0.5
    packed = pack_bits(bits)
    assert packed.shape == (3,)
    for k in range(130):
        word, bit = divmod(k, 64)
        assert bool((int(packed[word]) >> bit) & 1) == bool(bits[k])
    # padding bits beyond K stay zero
    assert int(packed[2]) >> 2 == 0


def test_pack_bits_batched_matches_single():
    rng = np.random.default_rng(12)
    bits = rng.random((5, 70)) < 0.5
    packed = pack_bits(bits)
    for i in range(5):
        assert np.array_equal(packed[i], pack_bits(bits[i]))


@pytest.mark.parametrize("k,n", [(2, 1), (8, 5), (64, 3), (70, 7), (190, 20)])
def test_clause_evaluation_matches_brute_force(k, n):
    rng = np.random.default_rng(100 + k + n)
    actions = rng.random((k, n)) < 0.3
    literals = rng.random((9, k)) < 0.5
    expected = np.array(
        [[brute_clause(actions[:, j], lit) for j in range(n)] for lit in literals]
    )
    got = compute_clauses_packed(pack_bits(actions.T), pack_bits(literals))
    assert np.array_equal(got, expected)
    for lit, row in zip(literals, expected):
        assert np.array_equal(compute_clauses(actions, lit), row)
        for j in range(n):
            assert compute_clause(actions[:, j], lit) == row[j]


def test_empty_clause_fires():
    actions = np.zeros((6, 4), dtype=bool)
    literals = np.zeros(6, dtype=bool)
    assert np.all(compute_clauses(actions, literals))


def test_clause_blocks_on_missing_literal():
    actions = np.zeros((4, 1), dtype=bool)
    actions[2, 0] = True
    lit = np.array([True, True, False, True])
    assert not compute_clause(actions[:, 0], lit)
    lit[2] = True
    assert compute_clause(actions[:, 0], lit)


def test_class_sums_matches_matmul():
    rng = np.random.default_rng(21)
    weights = rng.integers(-40, 40, size=(10, 17), dtype=np.int32)
    clauses = rng.random((6, 17)) < 0.5
    v = class_sums(weights, clauses)
    assert v.dtype == np.int64
    assert np.array_equal(v, clauses.astype(np.int64) @ weights.T)


def test_predict_breaks_ties_low():
    assert predict(np.array([3, 7, 7, 1])) == 1
    assert predict(np.array([0, 0, 0])) == 0
    batch = np.array([[1, 2], [2, 2], [5, -1]])
    assert np.array_equal(predict(batch), [1, 0, 0])


def test_predict_shift_invariant():
    # Adding a constant to every class sum never changes the argmax.
    rng = np.random.default_rng(31)
    scores = rng.integers(-100, 100, size=(40, 10))
    base = predict(scores)
    for shift in (-1000, -3, 17, 40000):
        assert np.array_equal(predict(scores + shift), base)


def test_threshold_output_zero_is_negative():
    assert np.array_equal(
        threshold_output(np.array([-2, 0, 1])), [False, False, True]
    )


def test_clause_monotone_in_literals():
    # Flipping a literal 0 -> 1 can only turn clauses on, never off.
    rng = np.random.default_rng(41)
    actions = rng.random((30, 25)) < 0.3
    lit = rng.random(30) < 0.5
    before = compute_clauses(actions, lit)
    for k in np.flatnonzero(~lit):
        stronger = lit.copy()
        stronger[k] = True
        after = compute_clauses(actions, stronger)
        assert np.all(after >= before)


def test_infer_end_to_end_matches_loops():
    rng = np.random.default_rng(51)
    k, n, m = 22, 13, 4
    model = Model(
        actions=rng.random((k, n)) < 0.25,
        weights=rng.integers(-9, 9, size=(m, n), dtype=np.int32),
    )
    literals = rng.random((8, k)) < 0.5
    preds = infer(model, literals)
    for i in range(8):
        cl = [brute_clause(model.actions[:, j], literals[i]) for j in range(n)]
        v = [
            sum(int(model.weights[c, j]) for j in range(n) if cl[j])
            for c in range(m)
        ]
        assert preds[i] == int(np.argmax(v))


def test_model_shape_validation():
    ok_actions = np.zeros((4, 3), dtype=bool)
    ok_weights = np.zeros((2, 3), dtype=np.int32)
    Model(ok_actions, ok_weights)
    with pytest.raises(DimensionError):
        Model(np.zeros((4, 5), dtype=bool), ok_weights)
    with pytest.raises(DimensionError):
        Model(np.zeros((5, 3), dtype=bool), ok_weights)
    with pytest.raises(DimensionError):
        Model(ok_actions, np.zeros((0, 3), dtype=np.int32))
    with pytest.raises(DimensionError):
        infer(Model(ok_actions, ok_weights), np.zeros(6, dtype=bool))


def test_predict_rejects_empty_scores():
    with pytest.raises(DimensionError):
        predict(np.empty(0))
