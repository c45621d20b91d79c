"""Finite-field multi-agent dynamics and their algebraic form.

Each of n agents holds a value in {0,...,kappa-1} and updates by a
weighted modular sum over its in-neighbourhood plus a local input:

    alpha_j(k+1) = ( sum_{l in I_j u {j}} a_{j,l} alpha_l(k) + u_j(k) ) mod kappa.

The joint state/input embed as basis vectors of dimension N = kappa^n
(see stp.encode_tuple), and the whole update collapses to one logical
matrix F with  alpha(k+1) = F |x| u(k) |x| alpha(k).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (
    DimensionMismatch,
    IndexOutOfRange,
    StateNotInConstraint,
    ValueOutOfDomain,
)
from .stp import LogicalMatrix, LogicalVector, decode_index, encode_tuple


@dataclass(frozen=True)
class MasModel:
    """n agents over {0..kappa-1}; weights[j] maps l -> a_{j,l} (0-based).

    Every agent must carry its own self weight (a_{j,j}, possibly 0);
    the remaining keys of weights[j] are exactly its in-neighbours.
    """

    n: int
    kappa: int
    weights: tuple  # tuple of dicts, one per agent

    def __post_init__(self):
        if self.n < 1:
            raise DimensionMismatch("need at least one agent, got %d" % self.n)
        if self.kappa < 2:
            raise ValueOutOfDomain("kappa must be >= 2, got %d" % self.kappa)
        if len(self.weights) != self.n:
            raise DimensionMismatch(
                "%d weight maps for %d agents" % (len(self.weights), self.n)
            )
        for j, wmap in enumerate(self.weights):
            if j not in wmap:
                raise ValueOutOfDomain("agent %d is missing its self weight" % j)
            for l, a in wmap.items():
                if not 0 <= l < self.n:
                    raise IndexOutOfRange(
                        "agent %d references neighbour %d outside 0..%d"
                        % (j, l, self.n - 1)
                    )
                if not 0 <= a < self.kappa:
                    raise ValueOutOfDomain(
                        "weight a[%d,%d] = %d outside 0..%d"
                        % (j, l, a, self.kappa - 1)
                    )

    @property
    def state_count(self) -> int:
        return self.kappa ** self.n

    def in_neighbors(self, j: int) -> frozenset:
        return frozenset(l for l in self.weights[j] if l != j)


def step_tuple(model: MasModel, alpha, u) -> tuple:
    """One update of the modular law on value tuples."""
    alpha = tuple(alpha)
    u = tuple(u)
    if len(alpha) != model.n or len(u) != model.n:
        raise DimensionMismatch(
            "state/input tuples must have length %d" % model.n
        )
    for v in alpha + u:
        if not 0 <= v < model.kappa:
            raise ValueOutOfDomain("coordinate %r outside 0..%d" % (v, model.kappa - 1))
    out = []
    for j in range(model.n):
        acc = u[j]
        for l, a in model.weights[j].items():
            acc += a * alpha[l]
        out.append(acc % model.kappa)
    return tuple(out)


def step_logical(model: MasModel, alpha: LogicalVector, u: LogicalVector) -> LogicalVector:
    """One update on basis vectors (decode, step, encode; exact)."""
    n, kappa = model.n, model.kappa
    a_t = decode_index(alpha, n, kappa)
    u_t = decode_index(u, n, kappa)
    return encode_tuple(step_tuple(model, a_t, u_t), kappa)


def successor_index(model: MasModel, a: int, u: int) -> int:
    """Next-state delta index for state index a under input index u."""
    nn = model.state_count
    nxt = step_logical(
        model, LogicalVector(nn, a), LogicalVector(nn, u)
    )
    return nxt.index


def build_structure_matrix(model: MasModel) -> LogicalMatrix:
    """The N x N^2 logical matrix F with alpha' = F |x| u |x| alpha.

    Column (a-1)N + b is the encoded successor of state b under input a
    (the basis product delta_N^a |x| delta_N^b hits exactly that column).
    """
    nn = model.state_count
    cols = []
    for a in range(1, nn + 1):
        u_t = decode_index(LogicalVector(nn, a), model.n, model.kappa)
        for b in range(1, nn + 1):
            al_t = decode_index(LogicalVector(nn, b), model.n, model.kappa)
            nxt = encode_tuple(step_tuple(model, al_t, u_t), model.kappa)
            cols.append(nxt.index)
    return LogicalMatrix(nn, nn * nn, tuple(cols))


@dataclass(frozen=True)
class ConstraintSets:
    """Admissible state set C_alpha and per-state admissible inputs C_u."""

    state_set: frozenset
    input_map: dict = field(hash=False)

    def __post_init__(self):
        object.__setattr__(self, "state_set", frozenset(self.state_set))
        object.__setattr__(
            self, "input_map",
            {int(a): frozenset(us) for a, us in self.input_map.items()},
        )
        if not self.state_set:
            raise ValueOutOfDomain("state constraint set is empty")
        if set(self.input_map) != set(self.state_set):
            raise DimensionMismatch(
                "input map keys must be exactly the admissible states"
            )
        for a, us in self.input_map.items():
            if not us:
                raise ValueOutOfDomain("state %d has an empty input set" % a)

    @staticmethod
    def uniform(state_set, input_set) -> "ConstraintSets":
        """Same admissible input set at every admissible state."""
        states = frozenset(state_set)
        inputs = frozenset(input_set)
        return ConstraintSets(states, {a: inputs for a in states})

    def inputs_for(self, a: int) -> frozenset:
        try:
            return self.input_map[a]
        except KeyError:
            raise StateNotInConstraint(
                "state %d outside the admissible state set" % a
            ) from None

    def validate_against(self, model: MasModel):
        nn = model.state_count
        for a in self.state_set:
            if not 1 <= a <= nn:
                raise IndexOutOfRange("admissible state %d outside 1..%d" % (a, nn))
        for a, us in self.input_map.items():
            for u in us:
                if not 1 <= u <= nn:
                    raise IndexOutOfRange(
                        "admissible input %d at state %d outside 1..%d" % (u, a, nn)
                    )


def admissible_inputs(model: MasModel, constraints: ConstraintSets, a: int, b: int) -> tuple:
    """Sorted inputs u in C_u(a) steering state a to state b in one step."""
    out = [u for u in sorted(constraints.inputs_for(a))
           if successor_index(model, a, u) == b]
    return tuple(out)


def one_step_reach(model: MasModel, constraints: ConstraintSets, a: int) -> tuple:
    """Sorted admissible one-step successors of a that stay in C_alpha."""
    seen = set()
    for u in constraints.inputs_for(a):
        b = successor_index(model, a, u)
        if b in constraints.state_set:
            seen.add(b)
    return tuple(sorted(seen))


def successor_table(model: MasModel, constraints: ConstraintSets) -> dict:
    """{(a, u): b} over all admissible (state, input) pairs; b unrestricted."""
    table = {}
    for a in sorted(constraints.state_set):
        for u in sorted(constraints.inputs_for(a)):
            table[(a, u)] = successor_index(model, a, u)
    return table
