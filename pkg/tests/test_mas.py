"""Finite-field agent dynamics and constrained transitions.

The worked model throughout: two agents over a 3-letter alphabet with
update (a1 + 2 a2 + u1, a1 + a2 + u2) mod 3, admissible states 1..6 and
admissible inputs {4, 5, 7, 8} everywhere.

Proves:
 Group 1 - modular update on tuples and basis vectors
 Group 2 - structure matrix: exhaustive agreement with the direct update,
           and the basis-product route gives the same column
 Group 3 - constrained reach/steering oracles (frozen successor sets)
 Group 4 - validation contracts
"""

import itertools

import numpy as np
import pytest

from fadectrl.errors import (
    DimensionMismatch,
    IndexOutOfRange,
    StateNotInConstraint,
    ValueOutOfDomain,
)
from fadectrl.mas import (
    ConstraintSets,
    MasModel,
    admissible_inputs,
    build_structure_matrix,
    one_step_reach,
    step_logical,
    step_tuple,
    successor_index,
    successor_table,
)
from fadectrl.stp import LogicalVector, decode_index, stp, stp_basis, stp_logical

MODEL = MasModel(2, 3, ({0: 1, 1: 2}, {0: 1, 1: 1}))
CONSTRAINTS = ConstraintSets.uniform(frozenset(range(1, 7)), frozenset({4, 5, 7, 8}))

# successors of each admissible state under each admissible input,
# worked out by hand from the modular update
REACH = {
    1: (4, 5),
    2: (2, 3, 5, 6),
    3: (1, 3),
    4: (2, 3),
    5: (4, 6),
    6: (1, 2, 4, 5),
}


# ── Group 1: the modular update ──────────────────────────────────────────────

def test_step_tuple_worked_values():
    assert step_tuple(MODEL, (1, 0), (0, 0)) == (1, 1)
    assert step_tuple(MODEL, (1, 0), (2, 0)) == (0, 1)
    assert step_tuple(MODEL, (0, 2), (2, 0)) == (0, 2)  # a self-loop
    assert step_tuple(MODEL, (2, 2), (1, 1)) == (1, 2)


def test_step_tuple_validation():
    with pytest.raises(DimensionMismatch):
        step_tuple(MODEL, (1,), (0, 0))
    with pytest.raises(ValueOutOfDomain):
        step_tuple(MODEL, (1, 3), (0, 0))
    with pytest.raises(ValueOutOfDomain):
        step_tuple(MODEL, (1, 0), (0, -1))


def test_step_logical_is_encoded_tuple_step():
    for a, u in itertools.product(range(1, 10), range(1, 10)):
        av = LogicalVector(9, a)
        uv = LogicalVector(9, u)
        out = step_logical(MODEL, av, uv)
        at = decode_index(av, 2, 3)
        ut = decode_index(uv, 2, 3)
        assert decode_index(out, 2, 3) == step_tuple(MODEL, at, ut)
        assert successor_index(MODEL, a, u) == out.index


def test_fixed_input_update_is_a_bijection():
    # the linear part [[1, 2], [1, 1]] is invertible mod 3, so each input
    # permutes the state space
    for u in range(1, 10):
        image = {successor_index(MODEL, a, u) for a in range(1, 10)}
        assert image == set(range(1, 10))


# ── Group 2: the structure matrix ────────────────────────────────────────────

def test_structure_matrix_exhaustive():
    f = build_structure_matrix(MODEL)
    assert (f.rows, f.cols) == (9, 81)
    for a, b in itertools.product(range(1, 10), range(1, 10)):
        expect = step_logical(MODEL, LogicalVector(9, b), LogicalVector(9, a))
        assert f.col_indices[(a - 1) * 9 + (b - 1)] == expect.index


def test_structure_matrix_basis_product_route():
    f = build_structure_matrix(MODEL)
    for a, b in itertools.product(range(1, 10), range(1, 10)):
        w = stp_basis(LogicalVector(9, a), LogicalVector(9, b))
        got = stp_logical(f, w)
        assert got == step_logical(MODEL, LogicalVector(9, b), LogicalVector(9, a))


def test_structure_matrix_dense_route_samples():
    f = build_structure_matrix(MODEL).to_dense()
    for a, b in ((1, 1), (4, 7), (3, 9), (9, 2)):
        u = LogicalVector(9, a).to_dense().reshape(-1, 1)
        al = LogicalVector(9, b).to_dense().reshape(-1, 1)
        out = stp(stp(f, u), al).ravel()
        expect = step_logical(
            MODEL, LogicalVector(9, b), LogicalVector(9, a)
        ).to_dense()
        assert np.array_equal(out, expect)


# ── Group 3: constrained transitions ─────────────────────────────────────────

def test_one_step_reach_frozen_table():
    for a, expect in REACH.items():
        assert one_step_reach(MODEL, CONSTRAINTS, a) == expect


def test_admissible_inputs_frozen_values():
    assert admissible_inputs(MODEL, CONSTRAINTS, 4, 2) == (7,)
    assert admissible_inputs(MODEL, CONSTRAINTS, 4, 3) == (8,)
    assert admissible_inputs(MODEL, CONSTRAINTS, 2, 2) == (4,)
    assert admissible_inputs(MODEL, CONSTRAINTS, 6, 4) == (7,)
    assert admissible_inputs(MODEL, CONSTRAINTS, 4, 4) == ()


def test_admissible_inputs_cover_reach_exactly():
    for a in sorted(CONSTRAINTS.state_set):
        for b in range(1, 10):
            steering = admissible_inputs(MODEL, CONSTRAINTS, a, b)
            if b in CONSTRAINTS.state_set and b in REACH[a]:
                assert steering
            for u in steering:
                assert successor_index(MODEL, a, u) == b
                assert u in CONSTRAINTS.inputs_for(a)


def test_successor_table_complete():
    table = successor_table(MODEL, CONSTRAINTS)
    assert len(table) == 6 * 4
    for (a, u), b in table.items():
        assert successor_index(MODEL, a, u) == b


# ── Group 4: validation ──────────────────────────────────────────────────────

def test_model_validation():
    with pytest.raises(ValueOutOfDomain):
        MasModel(2, 3, ({1: 1}, {0: 1, 1: 1}))  # missing self weight
    with pytest.raises(IndexOutOfRange):
        MasModel(2, 3, ({0: 1, 2: 1}, {1: 1}))
    with pytest.raises(ValueOutOfDomain):
        MasModel(2, 3, ({0: 3}, {1: 1}))
    with pytest.raises(ValueOutOfDomain):
        MasModel(2, 1, ({0: 0}, {1: 0}))
    with pytest.raises(DimensionMismatch):
        MasModel(2, 3, ({0: 1},))


def test_model_neighbors():
    assert MODEL.in_neighbors(0) == frozenset({1})
    assert MODEL.in_neighbors(1) == frozenset({0})
    assert MODEL.state_count == 9


def test_constraint_sets_validation():
    with pytest.raises(ValueOutOfDomain):
        ConstraintSets(frozenset(), {})
    with pytest.raises(DimensionMismatch):
        ConstraintSets(frozenset({1, 2}), {1: {4}})
    with pytest.raises(ValueOutOfDomain):
        ConstraintSets(frozenset({1}), {1: set()})
    with pytest.raises(StateNotInConstraint):
        CONSTRAINTS.inputs_for(7)
    with pytest.raises(IndexOutOfRange):
        ConstraintSets.uniform({1, 99}, {4}).validate_against(MODEL)
    CONSTRAINTS.validate_against(MODEL)


def test_per_state_input_map():
    cs = ConstraintSets(frozenset({1, 2}), {1: {4, 5}, 2: {7}})
    assert cs.inputs_for(1) == frozenset({4, 5})
    assert cs.inputs_for(2) == frozenset({7})
