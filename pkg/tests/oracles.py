"""Independent brute-force oracles and random-instance generators.

These deliberately avoid the library's own algorithms: cycles are found
by plain DFS enumeration, invariance by checking every subset, so the
fast implementations have something honest to be compared against.
"""

from __future__ import annotations

from fractions import Fraction

from fadectrl.mas import ConstraintSets, MasModel, one_step_reach
from fadectrl.synthesis import Edge, TransitionGraph


def simple_cycles(graph: TransitionGraph) -> set:
    """Every simple directed cycle, as a vertex tuple with first == last,
    rotated to start at its smallest vertex (each cycle appears once)."""
    adjacency = {a: graph.successors(a) for a in graph.vertices}
    found = set()
    for root in graph.vertices:
        stack = [(root, (root,))]
        while stack:
            v, path = stack.pop()
            for w in adjacency[v]:
                if w < root:
                    continue  # that cycle is found from its own minimum
                if w == root:
                    found.add(path + (root,))
                elif w not in path:
                    stack.append((w, path + (w,)))
    return found


def cycle_mean(graph: TransitionGraph, cycle) -> Fraction:
    total = sum(graph.weight(cycle[i], cycle[i + 1])
                for i in range(len(cycle) - 1))
    return Fraction(total) / (len(cycle) - 1)


def brute_min_mean(graph: TransitionGraph):
    """Minimum mean over all simple cycles, or None if the graph is acyclic."""
    best = None
    for cycle in simple_cycles(graph):
        mean = cycle_mean(graph, cycle)
        if best is None or mean < best:
            best = mean
    return best


def random_scc_graph(rng, max_vertices: int = 9, max_weight: int = 50) -> TransitionGraph:
    """Random strongly connected digraph with integer weights.

    A Hamiltonian cycle through a shuffled vertex order guarantees strong
    connectivity; extra random edges (self-loops included) are layered on.
    """
    n = rng.randint(1, max_vertices)
    verts = tuple(range(1, n + 1))
    order = list(verts)
    rng.shuffle(order)
    edges = {}

    def put(a, b):
        edges[(a, b)] = Edge(rng.randint(0, max_weight), (1,), (1,))

    for i in range(n):
        put(order[i], order[(i + 1) % n])
    for _ in range(rng.randint(0, 2 * n)):
        a = rng.choice(verts)
        b = rng.choice(verts)
        if (a, b) not in edges:
            put(a, b)
    return TransitionGraph(verts, edges)


def brute_invariant(model: MasModel, constraints: ConstraintSets, omega) -> frozenset:
    """Union of every subset of omega closed under some admissible input,
    checked subset by subset (exponential, fine for |omega| <= 8)."""
    members = sorted(omega)
    best = set()
    for bits in range(1, 1 << len(members)):
        subset = {members[i] for i in range(len(members)) if bits >> i & 1}
        if all(set(one_step_reach(model, constraints, a)) & subset
               for a in subset):
            best |= subset
    return frozenset(best)


def random_mas_instance(rng):
    """(model, constraints, omega) with |C_alpha| <= 8 for invariant checks."""
    n, kappa = rng.choice(((1, 2), (1, 3), (1, 4), (2, 2), (2, 3)))
    weights = []
    for j in range(n):
        wmap = {j: rng.randrange(kappa)}
        for l in range(n):
            if l != j and rng.random() < 0.7:
                wmap[l] = rng.randrange(kappa)
        weights.append(wmap)
    model = MasModel(n, kappa, tuple(weights))
    nn = model.state_count
    states = rng.sample(range(1, nn + 1), rng.randint(1, min(8, nn)))
    inputs = rng.sample(range(1, nn + 1), rng.randint(1, min(4, nn)))
    constraints = ConstraintSets.uniform(frozenset(states), frozenset(inputs))
    omega = frozenset(a for a in states if rng.random() < 0.6)
    return model, constraints, omega
