"""Connected-subgraph census (ESU) and theme orders.

ESU runs on the undirected support of the graph; each enumerated vertex
set is then classified by the canonical code of its induced directed
subgraph.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

from .errors import ContractError, SizeError
from .graph import MAX_PATTERN_SIZE, Code, DeletionClass, DirectedGraph, Pattern, canonical_form
from .nullmodel import PositionStats

log = logging.getLogger(__name__)

Occurrences = dict[Code, list[tuple[int, ...]]]


@dataclass(frozen=True, order=True)
class Position:
    """One sorted vertex tuple per deletion class, classes in pattern order."""

    sets: tuple[tuple[int, ...], ...]

    @property
    def vertices(self) -> tuple[int, ...]:
        return tuple(sorted(v for s in self.sets for v in s))

    def labeled(self, graph: DirectedGraph) -> list[list[str]]:
        return [[graph.label(v) for v in s] for s in self.sets]


@dataclass(frozen=True)
class ThemeRecord:
    """Theme order at one occurrence of the subpattern.

    ``embedding[s]`` is the graph vertex playing subpattern vertex ``s``.
    """

    pattern: Code
    class_index: int
    position: Position
    order: int
    embedding: tuple[int, ...]
    stats: PositionStats | None = None


def format_code(code: Code) -> str:
    return f"{code[0]}:{code[1]}"


def embedding(graph: DirectedGraph, vertices: Sequence[int], pattern: Pattern):
    """Map pattern vertices onto ``vertices`` when they induce ``pattern``.

    Returns a tuple whose entry ``a`` is the graph vertex playing pattern
    vertex ``a``, or ``None`` if the induced subgraph is not isomorphic.
    """
    vertices = tuple(vertices)
    k = len(vertices)
    if k != pattern.k:
        return None
    bits, to_canon = canonical_form(k, graph.induced_bits(vertices))
    if (k, bits) != pattern.code:
        return None
    canon_to_graph = [0] * k
    for j, c in enumerate(to_canon):
        canon_to_graph[c] = vertices[j]
    return tuple(canon_to_graph[pattern.to_canon[a]] for a in range(k))


def position_of(graph: DirectedGraph, vertices: Sequence[int], pattern: Pattern) -> Position | None:
    emb = embedding(graph, vertices, pattern)
    if emb is None:
        return None
    return Position(tuple(
        tuple(sorted(emb[a] for a in cls.members)) for cls in pattern.deletion_classes
    ))


def _esu_sets(graph: DirectedGraph, k: int, roots: Iterable[int]):
    nbrs = graph.neighbors

    def extend(sub, ext, closed, v):
        if len(sub) == k - 1:
            for w in ext:
                yield tuple(sorted(sub + [w]))
            return
        ext = list(ext)
        while ext:
            w = ext.pop()
            fresh = [u for u in nbrs[w] if u > v and u not in closed]
            yield from extend(sub + [w], ext + sorted(fresh), closed | nbrs[w], v)

    for v in roots:
        if k == 1:
            yield (v,)
            continue
        start = sorted(u for u in nbrs[v] if u > v)
        yield from extend([v], start, nbrs[v] | {v}, v)


def _census_chunk(graph: DirectedGraph, k: int, roots: Sequence[int]) -> Occurrences:
    out: Occurrences = {}
    for i, vs in enumerate(_esu_sets(graph, k, roots)):
        bits, _ = canonical_form(k, graph.induced_bits(vs))
        out.setdefault((k, bits), []).append(vs)
        if i and i % 500_000 == 0:
            log.info("census k=%d: %d subgraphs so far", k, i)
    return out


def enumerate_subgraphs(graph: DirectedGraph, k: int, threads: int = 1) -> Occurrences:
    """Every connected induced ``k``-vertex subgraph, grouped by canonical code.

    Keys are sorted by code and each occurrence list is sorted, so the
    result does not depend on ``threads``.
    """
    if not 1 <= k <= MAX_PATTERN_SIZE:
        raise SizeError(f"census size {k} outside [1, {MAX_PATTERN_SIZE}]")
    roots = list(range(graph.n))
    if threads > 1 and graph.n > 1:
        # interleave roots so each worker gets a mix of cheap and costly ones
        chunks = [roots[i::threads] for i in range(threads)]
        merged: Occurrences = {}
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for part in pool.map(_census_chunk, [graph] * threads, [k] * threads, chunks):
                for code, sets in part.items():
                    merged.setdefault(code, []).extend(sets)
    else:
        merged = _census_chunk(graph, k, roots)
    return {code: sorted(merged[code]) for code in sorted(merged)}


def census_counts(occurrences: Occurrences) -> dict[Code, int]:
    return {code: len(sets) for code, sets in occurrences.items()}


def dump_census(occurrences: Occurrences, fh: TextIO, graph: DirectedGraph | None = None) -> None:
    """Write ``code<TAB>v1,...,vk`` lines in sorted order."""
    for code, sets in occurrences.items():
        for vs in sets:
            names = [graph.label(v) for v in vs] if graph is not None else [str(v) for v in vs]
            fh.write(f"{format_code(code)}\t{','.join(names)}\n")


def theme_orders(
    graph: DirectedGraph,
    pattern: Pattern,
    cls: DeletionClass,
    occurrences_k: Occurrences,
    occurrences_k_minus_1: Occurrences | None = None,
) -> list[ThemeRecord]:
    """Theme order at every subpattern occurrence that has an extension.

    Each size-k occurrence is split into its (k-1)-subsets obtained by
    removing a vertex playing a member of ``cls``.  With
    ``occurrences_k_minus_1`` the subpattern occurrences without any
    extension are emitted too (order 0); only connected subpatterns can be
    listed that way.
    """
    if cls.pattern != pattern:
        raise ContractError("deletion class does not belong to the pattern")
    counts: dict[tuple[int, ...], int] = {}
    for vs in occurrences_k.get(pattern.code, ()):
        emb = embedding(graph, vs, pattern)
        if emb is None:
            raise ContractError(f"vertex set {vs} is not an occurrence of {pattern}")
        for a in cls.members:
            x = emb[a]
            rest = tuple(u for u in vs if u != x)
            counts[rest] = counts.get(rest, 0) + 1
    sub = cls.subpattern
    if occurrences_k_minus_1 is not None:
        for rest in occurrences_k_minus_1.get(sub.code, ()):
            counts.setdefault(rest, 0)
    records = []
    for rest in sorted(counts):
        sub_emb = embedding(graph, rest, sub)
        position = Position(tuple(
            tuple(sorted(sub_emb[a] for a in c.members)) for c in sub.deletion_classes
        ))
        records.append(ThemeRecord(pattern.code, cls.index, position, counts[rest], sub_emb))
    return records
