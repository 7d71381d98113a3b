"""Directed networks and small directed patterns.

Patterns are identified by a brute-force canonical code: the minimum, over
all k! vertex relabelings, of the row-major adjacency matrix read as a
bit string (first cell is the most significant bit).  This is cheap for
k <= 8 and results are cached per raw adjacency, so the census only pays
the k! cost once per distinct labeled subgraph.
"""

from __future__ import annotations

import itertools
import re
from collections import deque
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractError, SizeError

MAX_PATTERN_SIZE = 8

PATTERN_ALIASES = {
    "ffl": "3;0->1,0->2,1->2",
    "bifan": "4;0->2,0->3,1->2,1->3",
    "3cycle": "3;0->1,1->2,2->0",
    "coreg": "3;0->2,1->2",
}

Code = tuple[int, int]  # (k, adjacency bits)


class DirectedGraph:
    """A directed graph on vertices ``0..n-1`` with optional string labels.

    Edges are ordered pairs.  Self-loops are rejected unless
    ``allow_loops`` is set.
    """

    def __init__(
        self,
        n: int,
        edges: Iterable[tuple[int, int]] = (),
        labels: Sequence[str] | None = None,
        allow_loops: bool = False,
    ):
        if n < 0:
            raise ContractError(f"vertex count must be >= 0, got {n}")
        self.n = int(n)
        self.allow_loops = allow_loops
        succ: list[set[int]] = [set() for _ in range(n)]
        pred: list[set[int]] = [set() for _ in range(n)]
        count = 0
        for u, v in edges:
            u, v = int(u), int(v)
            if not (0 <= u < n and 0 <= v < n):
                raise ContractError(f"edge ({u}, {v}) has an endpoint outside [0, {n})")
            if u == v and not allow_loops:
                raise ContractError(f"self-loop on vertex {u} (allow_loops is off)")
            if v in succ[u]:
                raise ContractError(f"duplicate edge ({u}, {v})")
            succ[u].add(v)
            pred[v].add(u)
            count += 1
        self.succ = tuple(frozenset(s) for s in succ)
        self.pred = tuple(frozenset(p) for p in pred)
        self.n_edges = count
        if labels is not None:
            labels = tuple(str(x) for x in labels)
            if len(labels) != n:
                raise ContractError(f"{len(labels)} labels for {n} vertices")
        self.labels = labels

    @classmethod
    def from_adjacency(cls, adj, labels=None, allow_loops=False) -> "DirectedGraph":
        adj = np.asarray(adj, dtype=bool)
        if not allow_loops:
            adj = adj & ~np.eye(len(adj), dtype=bool)
        us, vs = np.nonzero(adj)
        return cls(len(adj), zip(us.tolist(), vs.tolist()), labels, allow_loops)

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u in range(self.n) for v in sorted(self.succ[u])]

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.succ[u]

    def label(self, v: int) -> str:
        return self.labels[v] if self.labels is not None else str(v)

    def out_degrees(self) -> np.ndarray:
        return np.array([len(s) for s in self.succ], dtype=np.int64)

    def in_degrees(self) -> np.ndarray:
        return np.array([len(p) for p in self.pred], dtype=np.int64)

    @cached_property
    def neighbors(self) -> tuple[frozenset[int], ...]:
        """Undirected support, loops dropped."""
        return tuple(
            frozenset((self.succ[u] | self.pred[u]) - {u}) for u in range(self.n)
        )

    def adjacency_matrix(self) -> np.ndarray:
        adj = np.zeros((self.n, self.n), dtype=bool)
        for u, v in self.edges:
            adj[u, v] = True
        return adj

    def induced_bits(self, vertices: Sequence[int]) -> int:
        """Row-major adjacency bits of the subgraph induced on ``vertices``
        (in the given order)."""
        k = len(vertices)
        bits = 0
        pos = k * k - 1
        for u in vertices:
            su = self.succ[u]
            for v in vertices:
                if v in su:
                    bits |= 1 << pos
                pos -= 1
        return bits

    def relabel(self, perm: Sequence[int]) -> "DirectedGraph":
        """Return the graph with vertex ``u`` renamed ``perm[u]``."""
        labels = None
        if self.labels is not None:
            labels = [""] * self.n
            for u in range(self.n):
                labels[perm[u]] = self.labels[u]
        return DirectedGraph(
            self.n, ((perm[u], perm[v]) for u, v in self.edges), labels, self.allow_loops
        )

    def __repr__(self) -> str:
        return f"DirectedGraph(n={self.n}, edges={self.n_edges})"


# ---------------------------------------------------------------------------
# canonical forms
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _permutations(k: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(k))), dtype=np.intp).reshape(-1, k)


@lru_cache(maxsize=None)
def _bit_weights(k: int) -> np.ndarray:
    return (np.uint64(1) << np.arange(k * k - 1, -1, -1, dtype=np.uint64)).astype(np.uint64)


def bits_to_adjacency(k: int, bits: int) -> np.ndarray:
    flat = [(bits >> (k * k - 1 - i)) & 1 for i in range(k * k)]
    return np.array(flat, dtype=bool).reshape(k, k)


def adjacency_to_bits(adj: np.ndarray) -> int:
    bits = 0
    for cell in np.asarray(adj, dtype=bool).ravel():
        bits = (bits << 1) | int(cell)
    return bits


def _permuted_codes(adj: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    k = len(adj)
    perms = _permutations(k)
    # row p holds adj[perm[x], perm[y]] for every (x, y)
    stack = adj[perms[:, :, None], perms[:, None, :]].reshape(len(perms), k * k)
    codes = (stack.astype(np.uint64) * _bit_weights(k)).sum(axis=1, dtype=np.uint64)
    return perms, codes


@lru_cache(maxsize=1 << 20)
def canonical_form(k: int, bits: int) -> tuple[int, tuple[int, ...]]:
    """Canonical bits plus the relabeling that reaches them.

    Returns ``(canon_bits, to_canon)`` where original vertex ``i`` becomes
    canonical vertex ``to_canon[i]``.
    """
    if not 1 <= k <= MAX_PATTERN_SIZE:
        raise SizeError(f"pattern size {k} outside [1, {MAX_PATTERN_SIZE}]")
    adj = bits_to_adjacency(k, bits)
    perms, codes = _permuted_codes(adj)
    best = int(np.argmin(codes))
    perm = perms[best]
    to_canon = [0] * k
    for x, orig in enumerate(perm):
        to_canon[orig] = x
    return int(codes[best]), tuple(to_canon)


def canonical_code(pattern: "Pattern") -> Code:
    return pattern.code


def automorphism_group(pattern: "Pattern") -> list[tuple[int, ...]]:
    return list(pattern.automorphisms)


def deletion_classes(pattern: "Pattern") -> list["DeletionClass"]:
    return list(pattern.deletion_classes)


@lru_cache(maxsize=4096)
def canonical_pattern(code: Code) -> "Pattern":
    """The pattern in canonical labeling for ``code`` (cached)."""
    return Pattern.from_code(code)


def subpattern_of(pattern: "Pattern", cls: "DeletionClass") -> "Pattern":
    if cls.pattern != pattern:
        raise ContractError("deletion class belongs to a different pattern")
    return cls.subpattern


# ---------------------------------------------------------------------------
# patterns
# ---------------------------------------------------------------------------

_LITERAL = re.compile(r"^\s*(\d+)\s*;\s*(.*?)\s*$")


class Pattern:
    """A small directed graph on vertices ``0..k-1``.

    Instances are immutable; structural data (canonical code, automorphism
    group, deletion classes) is computed lazily and cached.
    """

    def __init__(self, adjacency, allow_loops: bool = False):
        adj = np.array(adjacency, dtype=bool)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ContractError("pattern adjacency must be square")
        k = adj.shape[0]
        if not 1 <= k <= MAX_PATTERN_SIZE:
            raise SizeError(f"pattern size {k} outside [1, {MAX_PATTERN_SIZE}]")
        if adj.diagonal().any() and not allow_loops:
            raise ContractError("pattern has a self-loop (allow_loops is off)")
        adj.setflags(write=False)
        self.adjacency = adj
        self.k = k
        self.allow_loops = allow_loops

    @classmethod
    def from_edges(cls, k: int, edges: Iterable[tuple[int, int]], allow_loops=False):
        if not 1 <= k <= MAX_PATTERN_SIZE:
            raise SizeError(f"pattern size {k} outside [1, {MAX_PATTERN_SIZE}]")
        adj = np.zeros((k, k), dtype=bool)
        for u, v in edges:
            if not (0 <= u < k and 0 <= v < k):
                raise ContractError(f"pattern edge ({u}, {v}) outside [0, {k})")
            adj[u, v] = True
        return cls(adj, allow_loops)

    @classmethod
    def parse(cls, literal: str, allow_loops: bool = False) -> "Pattern":
        """Parse ``k;u->v,u->v,...`` or one of :data:`PATTERN_ALIASES`."""
        literal = PATTERN_ALIASES.get(literal.strip().lower(), literal)
        m = _LITERAL.match(literal)
        if not m:
            raise ContractError(f"bad pattern literal {literal!r}")
        k = int(m.group(1))
        edges = []
        body = m.group(2)
        if body:
            for item in body.split(","):
                parts = item.split("->")
                if len(parts) != 2:
                    raise ContractError(f"bad edge {item!r} in pattern literal")
                try:
                    edges.append((int(parts[0]), int(parts[1])))
                except ValueError:
                    raise ContractError(f"bad edge {item!r} in pattern literal") from None
        if len(set(edges)) != len(edges):
            raise ContractError(f"duplicate edge in pattern literal {literal!r}")
        return cls.from_edges(k, edges, allow_loops)

    @classmethod
    def from_code(cls, code: Code) -> "Pattern":
        k, bits = code
        adj = bits_to_adjacency(k, bits)
        return cls(adj, allow_loops=bool(adj.diagonal().any()))

    @property
    def edges(self) -> list[tuple[int, int]]:
        us, vs = np.nonzero(self.adjacency)
        return list(zip(us.tolist(), vs.tolist()))

    @property
    def literal(self) -> str:
        return f"{self.k};" + ",".join(f"{u}->{v}" for u, v in self.edges)

    @cached_property
    def bits(self) -> int:
        return adjacency_to_bits(self.adjacency)

    @cached_property
    def _canonical(self) -> tuple[int, tuple[int, ...]]:
        return canonical_form(self.k, self.bits)

    @property
    def code(self) -> Code:
        return (self.k, self._canonical[0])

    @property
    def to_canon(self) -> tuple[int, ...]:
        return self._canonical[1]

    def is_isomorphic(self, other: "Pattern") -> bool:
        return self.code == other.code

    @cached_property
    def connected(self) -> bool:
        """Weak connectivity."""
        k = self.k
        und = self.adjacency | self.adjacency.T
        seen = {0}
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for v in np.nonzero(und[u])[0].tolist():
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        return len(seen) == k

    @cached_property
    def automorphisms(self) -> tuple[tuple[int, ...], ...]:
        """Every permutation ``phi`` (as a tuple, ``a -> phi[a]``) preserving edges."""
        perms, codes = _permuted_codes(self.adjacency)
        keep = codes == np.uint64(self.bits)
        return tuple(tuple(p) for p in perms[keep].tolist())

    @cached_property
    def orbits(self) -> tuple[tuple[int, ...], ...]:
        seen: set[int] = set()
        out = []
        for a in range(self.k):
            if a in seen:
                continue
            orbit = tuple(sorted({phi[a] for phi in self.automorphisms}))
            seen.update(orbit)
            out.append(orbit)
        return tuple(out)

    @cached_property
    def deletion_classes(self) -> tuple["DeletionClass", ...]:
        return tuple(
            DeletionClass._build(self, index, members)
            for index, members in enumerate(self.orbits)
        )

    @cached_property
    def vertex_class(self) -> tuple[int, ...]:
        """Deletion-class index of every pattern vertex."""
        out = [0] * self.k
        for cls in self.deletion_classes:
            for a in cls.members:
                out[a] = cls.index
        return tuple(out)

    def class_of(self, vertex: int) -> "DeletionClass":
        return self.deletion_classes[self.vertex_class[vertex]]

    def induced(self, vertices: Sequence[int]) -> "Pattern":
        idx = list(vertices)
        return Pattern(self.adjacency[np.ix_(idx, idx)], self.allow_loops)

    def delete(self, vertices: Iterable[int]) -> "Pattern":
        """Induced pattern on the remaining vertices, kept in increasing order."""
        gone = set(vertices)
        return self.induced([a for a in range(self.k) if a not in gone])

    def in_degree(self, a: int) -> int:
        return int(self.adjacency[:, a].sum())

    def out_degree(self, a: int) -> int:
        return int(self.adjacency[a].sum())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Pattern)
            and self.k == other.k
            and self.bits == other.bits
        )

    def __hash__(self) -> int:
        return hash((self.k, self.bits))

    def __repr__(self) -> str:
        return f"Pattern({self.literal!r})"


@dataclass(frozen=True, eq=False)
class DeletionClass:
    """An automorphism orbit of a pattern together with the subpattern left
    by deleting its representative.

    ``sub_vertices[s]`` is the pattern vertex that became subpattern vertex
    ``s``.  Each entry of ``extension_configs`` lists, for the deleted vertex,
    the edges ``s -> new`` (first ``k-1`` slots), ``new -> s`` (next ``k-1``
    slots) and, for loop-enabled patterns, the loop on the new vertex.
    """

    pattern: Pattern
    index: int
    members: tuple[int, ...]
    representative: int
    subpattern: Pattern
    sub_vertices: tuple[int, ...]
    extension_configs: tuple[tuple[int, ...], ...]

    @classmethod
    def _build(cls, pattern: Pattern, index: int, members: tuple[int, ...]):
        rep = members[0]
        sub_vertices = tuple(a for a in range(pattern.k) if a != rep)
        sub = pattern.delete([rep])
        adj = pattern.adjacency
        base = [int(adj[w, rep]) for w in sub_vertices]
        base += [int(adj[rep, w]) for w in sub_vertices]
        if pattern.allow_loops:
            base.append(int(adj[rep, rep]))
        m = len(sub_vertices)
        configs = set()
        for sigma in sub.automorphisms:
            cfg = list(base)
            for s in range(m):
                cfg[sigma[s]] = base[s]
                cfg[m + sigma[s]] = base[m + s]
            configs.add(tuple(cfg))
        return cls(pattern, index, members, rep, sub, sub_vertices, tuple(sorted(configs)))

    @property
    def size(self) -> int:
        return len(self.members)

    def describe(self) -> str:
        return "{" + ",".join(str(a) for a in self.members) + "}"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, DeletionClass)
            and self.pattern == other.pattern
            and self.index == other.index
        )

    def __hash__(self) -> int:
        return hash((self.pattern, self.index))
