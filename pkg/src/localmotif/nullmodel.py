"""Fixed-class blockmodel null and the expectations derived from it.

Every edge ``u -> v`` is an independent Bernoulli variable with parameter
``Pi[Z[u], Z[v]]``.  All probabilities below are exact under that model.
The arithmetic only uses ``+``, ``-`` and ``*`` on entries of ``Pi``, so a
model built from an object array of :class:`fractions.Fraction` yields
exact rational results (the tests rely on this).
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ContractError, EstimationError
from .graph import DeletionClass, DirectedGraph, Pattern


@dataclass(frozen=True, eq=False)
class BlockModel:
    """Blockmodel parameters ``(n, Q, Z, Pi)``.

    ``loops`` states whether the model draws self-loops; by default the
    diagonal pairs ``(u, u)`` carry no edge variable at all.
    """

    Z: np.ndarray
    Pi: np.ndarray
    loops: bool = False

    def __post_init__(self):
        Z = np.array(self.Z, dtype=np.intp).reshape(-1)
        Pi = np.array(self.Pi)
        if Pi.dtype != object:
            Pi = Pi.astype(float)
        if Pi.ndim != 2 or Pi.shape[0] != Pi.shape[1]:
            raise ContractError("Pi must be a square matrix")
        Q = Pi.shape[0]
        if len(Z) and (Z.min() < 0 or Z.max() >= Q):
            raise ContractError(f"class labels must lie in [0, {Q})")
        sizes = np.bincount(Z, minlength=Q)
        if Q and (sizes == 0).any():
            empty = np.nonzero(sizes == 0)[0].tolist()
            raise ContractError(f"classes {empty} have no vertices")
        if any(not (0 <= x <= 1) for x in Pi.ravel()):
            raise ContractError("Pi entries must lie in [0, 1]")
        Z.setflags(write=False)
        Pi.setflags(write=False)
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "Pi", Pi)

    @property
    def n(self) -> int:
        return len(self.Z)

    @property
    def Q(self) -> int:
        return self.Pi.shape[0]

    @property
    def exact(self) -> bool:
        return self.Pi.dtype == object

    @property
    def class_sizes(self) -> np.ndarray:
        sizes = np.bincount(self.Z, minlength=self.Q)
        return sizes.astype(object) if self.exact else sizes

    @property
    def rho(self) -> float:
        return float(np.max(self.Pi)) if self.Q else 0.0

    def edge_prob(self, u: int, v: int):
        if u == v and not self.loops:
            return 0
        return self.Pi[self.Z[u], self.Z[v]]

    def pair_probabilities(self) -> np.ndarray:
        """Dense ``n x n`` matrix of edge probabilities (float)."""
        P = self.Pi.astype(float)[self.Z][:, self.Z]
        if not self.loops:
            np.fill_diagonal(P, 0.0)
        return P


# ---------------------------------------------------------------------------
# estimation
# ---------------------------------------------------------------------------


def _check_graph_classes(graph: DirectedGraph, Z) -> np.ndarray:
    Z = np.asarray(Z, dtype=np.intp).reshape(-1)
    if len(Z) != graph.n:
        raise ContractError(f"class vector has length {len(Z)}, graph has {graph.n} vertices")
    return Z


def estimate_pi(graph: DirectedGraph, Z, Q: int | None = None) -> BlockModel:
    """Maximum-likelihood ``Pi`` for fixed classes ``Z``."""
    Z = _check_graph_classes(graph, Z)
    if len(Z) and Z.min() < 0:
        raise EstimationError("class labels must be non-negative")
    if Q is None:
        Q = int(Z.max()) + 1 if len(Z) else 0
    sizes = np.bincount(Z, minlength=Q)
    if len(sizes) > Q:
        raise EstimationError(f"class label {len(sizes) - 1} >= Q={Q}")
    if (sizes == 0).any():
        raise EstimationError(f"empty classes: {np.nonzero(sizes == 0)[0].tolist()}")
    counts = np.zeros((Q, Q))
    for u, v in graph.edges:
        counts[Z[u], Z[v]] += 1
    pairs = np.outer(sizes, sizes).astype(float)
    if not graph.allow_loops:
        pairs -= np.diag(sizes)
    Pi = np.zeros((Q, Q))
    ok = pairs > 0
    Pi[ok] = counts[ok] / pairs[ok]
    if (~ok).any():
        blocks = [tuple(b) for b in np.argwhere(~ok).tolist()]
        warnings.warn(f"blocks {blocks} have no vertex pairs; Pi set to 0", stacklevel=2)
    return BlockModel(Z, Pi, loops=graph.allow_loops)


def er_model(graph: DirectedGraph) -> BlockModel:
    """Erdos-Renyi null whose expected edge count matches the graph."""
    return estimate_pi(graph, np.zeros(graph.n, dtype=np.intp), Q=1)


def expected_degree_model(graph: DirectedGraph) -> BlockModel:
    """Expected Degree null: ``P(u -> v) = min(1, d_out(u) d_in(v) / E)``.

    Vertices sharing the same (in-degree, out-degree) pair form one class;
    classes are ordered by that pair.
    """
    E = graph.n_edges
    if E == 0:
        raise EstimationError("expected-degree model needs at least one edge")
    din = graph.in_degrees()
    dout = graph.out_degrees()
    keys = sorted(set(zip(din.tolist(), dout.tolist())))
    index = {key: q for q, key in enumerate(keys)}
    Z = np.array([index[(i, o)] for i, o in zip(din.tolist(), dout.tolist())], dtype=np.intp)
    ins = np.array([key[0] for key in keys], dtype=float)
    outs = np.array([key[1] for key in keys], dtype=float)
    Pi = np.minimum(1.0, np.outer(outs, ins) / E)
    return BlockModel(Z, Pi, loops=graph.allow_loops)


# ---------------------------------------------------------------------------
# per-position quantities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PositionStats:
    lam: float
    lam2: float
    n_u: int
    delta: float


def _required(flag, p):
    return p if flag else 1 - p


def class_extension_probs(model: BlockModel, sub_classes: Sequence[int], cls: DeletionClass):
    """``p_U^v`` for every class of ``v``, given the classes of the embedded
    subpattern vertices (in subpattern vertex order)."""
    m = len(cls.sub_vertices)
    if len(sub_classes) != m:
        raise ContractError(f"embedding has {len(sub_classes)} vertices, subpattern has {m}")
    Pi = model.Pi
    total = np.zeros(model.Q, dtype=Pi.dtype)
    loop_slot = cls.pattern.allow_loops
    diag = np.diagonal(Pi)
    for cfg in cls.extension_configs:
        term = np.ones(model.Q, dtype=Pi.dtype)
        for s, c in enumerate(sub_classes):
            term = term * _required(cfg[s], Pi[c, :]) * _required(cfg[m + s], Pi[:, c])
        if model.loops:
            term = term * _required(cfg[2 * m] if loop_slot else 0, diag)
        elif loop_slot and cfg[2 * m]:
            term = term * 0
        total = total + term
    return total


def extension_prob(model: BlockModel, embedding: Sequence[int], v: int, cls: DeletionClass):
    """Probability that adding ``v`` to the embedded subpattern occurrence
    yields an occurrence of the pattern with ``v`` in ``cls``.

    ``embedding[s]`` is the graph vertex playing subpattern vertex ``s``.
    Edges touching ``v`` are independent of the edges inside the
    embedding, so conditioning on the occurrence does not change the value.
    """
    if v in embedding:
        raise ContractError(f"vertex {v} already in the position")
    probs = class_extension_probs(model, [model.Z[u] for u in embedding], cls)
    return probs[model.Z[v]]


def lambda_u(model: BlockModel, embedding: Sequence[int], cls: DeletionClass):
    """Expected theme order and the sum of squared extension probabilities
    at one position, grouping candidate vertices by class."""
    classes = [int(model.Z[u]) for u in embedding]
    probs = class_extension_probs(model, classes, cls)
    free = model.class_sizes - np.bincount(classes, minlength=model.Q)
    lam = (free * probs).sum()
    lam2 = (free * probs * probs).sum()
    return lam, lam2


def position_stats(model: BlockModel, embedding: Sequence[int], cls: DeletionClass, n_u: int):
    lam, lam2 = lambda_u(model, embedding, cls)
    lam, lam2 = float(lam), float(lam2)
    if lam > 0:
        delta = (n_u - lam) / lam
    else:
        delta = math.inf if n_u > 0 else 0.0
    return PositionStats(lam, lam2, int(n_u), delta)


def embedding_prob(model: BlockModel, pattern: Pattern, embedding: Sequence[int]):
    """Probability that ``pattern`` vertex ``i -> embedding[i]`` is an induced
    embedding."""
    adj = pattern.adjacency
    prob = 1
    for i, u in enumerate(embedding):
        for j, v in enumerate(embedding):
            if i == j and not model.loops:
                if adj[i, i]:
                    return 0 * prob
                continue
            prob = prob * _required(adj[i, j], model.Pi[model.Z[u], model.Z[v]])
    return prob


def position_occurrence_prob(model: BlockModel, pattern: Pattern, sets: Sequence[Sequence[int]]):
    """``P(G[U] ~ pattern)`` for a position given as one vertex set per
    deletion class (classes in pattern order)."""
    classes = pattern.deletion_classes
    if len(sets) != len(classes):
        raise ContractError("position needs one vertex set per deletion class")
    per_class = []
    for cls, vs in zip(classes, sets):
        if len(vs) != cls.size:
            raise ContractError("position set size does not match its deletion class")
        per_class.append([list(zip(cls.members, perm)) for perm in itertools.permutations(vs)])
    total = 0
    for choice in itertools.product(*per_class):
        emb = [0] * pattern.k
        for pairs in choice:
            for a, u in pairs:
                emb[a] = u
        total = total + embedding_prob(model, pattern, emb)
    return total / len(pattern.automorphisms)


def expected_count(model: BlockModel, pattern: Pattern):
    """Expected number of induced occurrences of ``pattern``.

    Sums over assignments of model classes to pattern vertices: the
    edge/non-edge probability times the number of injective vertex maps
    with those classes, divided by the automorphism-group order (one
    occurrence per vertex set).
    """
    k, Q = pattern.k, model.Q
    if k > model.n:
        return 0 * model.Pi.sum()
    adj = pattern.adjacency
    Pi = model.Pi
    sizes = model.class_sizes
    ar = np.arange(Q)

    def along(vec, axis, ndim):
        shape = [1] * ndim
        shape[axis] = Q
        return np.reshape(vec, shape)

    def pair_factor(i, j):
        # indexed [class of i, class of j]
        return _required(adj[i, j], Pi) * _required(adj[j, i], Pi).T

    def vertex_factor(i):
        if model.loops:
            return _required(adj[i, i], np.diagonal(Pi))
        return np.zeros(Q, dtype=Pi.dtype) if adj[i, i] else np.ones(Q, dtype=Pi.dtype)

    # vertex 0's class is fixed per outer iteration; axes 0..k-2 of the
    # tensor are the classes of pattern vertices 1..k-1
    nd = k - 1
    total = 0 * Pi.sum()
    for q0 in range(Q):
        T = np.ones((), dtype=Pi.dtype) * sizes[q0] * vertex_factor(0)[q0]
        for j in range(1, k):
            ax = j - 1
            count = along(sizes, ax, nd) - along((ar == q0).astype(np.int64), ax, nd)
            for i in range(1, j):
                count = count - (along(ar, i - 1, nd) == along(ar, ax, nd)).astype(np.int64)
            T = T * count
            T = T * along(vertex_factor(j), ax, nd)
            T = T * along(pair_factor(0, j)[q0], ax, nd)
            for i in range(1, j):
                F = pair_factor(i, j)
                shape = [1] * nd
                shape[i - 1] = Q
                shape[ax] = Q
                T = T * F.reshape(shape)
        total = total + T.sum()
    return total / len(pattern.automorphisms)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def sample_adjacency(model: BlockModel, rng: np.random.Generator) -> np.ndarray:
    """Dense boolean adjacency drawn from the model."""
    return rng.random((model.n, model.n)) < model.pair_probabilities()


def generate(model: BlockModel, seed=None) -> DirectedGraph:
    """Draw a graph; deterministic for a given seed."""
    rng = np.random.default_rng(seed)
    edges = []
    P = model.pair_probabilities()
    for start in range(0, model.n, 1024):
        block = rng.random((min(1024, model.n - start), model.n)) < P[start:start + 1024]
        us, vs = np.nonzero(block)
        edges.extend(zip((us + start).tolist(), vs.tolist()))
    return DirectedGraph(model.n, edges, allow_loops=model.loops)


# ---------------------------------------------------------------------------
# model files
# ---------------------------------------------------------------------------


def read_model_file(path, graph: DirectedGraph | None = None) -> BlockModel:
    """Read ``n Q`` / ``n`` lines ``vertex class`` / ``Q`` rows of ``Pi``.

    With a graph, vertex ids are matched against its labels so the model
    is indexed like the graph.
    """
    with open(path) as fh:
        lines = [ln.split() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    try:
        n, Q = int(lines[0][0]), int(lines[0][1])
        rows = lines[1:1 + n]
        pi_rows = lines[1 + n:1 + n + Q]
        ids = [r[0] for r in rows]
        classes = [int(r[1]) for r in rows]
        Pi = np.array([[float(x) for x in r] for r in pi_rows])
    except (IndexError, ValueError) as exc:
        raise ContractError(f"{path}: malformed model file ({exc})") from None
    if len(rows) != n or Pi.shape != (Q, Q):
        raise ContractError(f"{path}: expected {n} vertex lines and a {Q}x{Q} matrix")
    Z = np.array(classes, dtype=np.intp)
    if graph is not None:
        Z = _align(graph, dict(zip(ids, classes)), path)
    return BlockModel(Z, Pi)


def write_model_file(path, model: BlockModel, labels: Sequence[str] | None = None) -> None:
    labels = labels or [str(u) for u in range(model.n)]
    with open(path, "w") as fh:
        fh.write(f"{model.n} {model.Q}\n")
        for u in range(model.n):
            fh.write(f"{labels[u]} {int(model.Z[u])}\n")
        for row in model.Pi.astype(float):
            fh.write(" ".join(repr(float(x)) for x in row) + "\n")


def read_classes(path, graph: DirectedGraph) -> np.ndarray:
    """Read ``vertex class`` lines; class tokens are mapped to ``0..Q-1``
    (numeric order when they are all integers, else lexical)."""
    table = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ContractError(f"{path}:{lineno}: expected 'vertex class'")
            table[parts[0]] = parts[1]
    tokens = set(table.values())
    try:
        ordered = sorted(tokens, key=int)
    except ValueError:
        ordered = sorted(tokens)
    index = {t: q for q, t in enumerate(ordered)}
    return _align(graph, {v: index[t] for v, t in table.items()}, path)


def _align(graph: DirectedGraph, table: dict, path) -> np.ndarray:
    Z = np.empty(graph.n, dtype=np.intp)
    for u in range(graph.n):
        key = graph.label(u)
        if key not in table:
            raise ContractError(f"{path}: vertex {key!r} has no class")
        Z[u] = table[key]
    return Z
