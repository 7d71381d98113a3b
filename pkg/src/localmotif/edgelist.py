"""Whitespace-separated edge lists with string vertex ids."""

from __future__ import annotations

import logging

from .errors import ContractError
from .graph import DirectedGraph

log = logging.getLogger(__name__)


def parse_edge_list(path, allow_loops: bool = False) -> DirectedGraph:
    """One ``src dst`` pair per line; ``#`` starts a comment.

    Ids are interned in order of first appearance.  Duplicate edges are
    collapsed and self-loops dropped (unless allowed), each with a warning.
    """
    index: dict[str, int] = {}
    labels: list[str] = []
    edges: dict[tuple[int, int], None] = {}
    duplicates = loops = 0
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ContractError(f"{path}:{lineno}: expected 'src dst', got {raw.rstrip()!r}")
            ids = []
            for token in parts:
                if token not in index:
                    index[token] = len(labels)
                    labels.append(token)
                ids.append(index[token])
            u, v = ids
            if u == v and not allow_loops:
                loops += 1
                log.warning("%s:%d: self-loop on %r skipped", path, lineno, parts[0])
                continue
            if (u, v) in edges:
                duplicates += 1
                log.warning("%s:%d: duplicate edge %s -> %s collapsed", path, lineno, *parts)
                continue
            edges[(u, v)] = None
    if duplicates or loops:
        log.info("%s: %d duplicate edges, %d self-loops dropped", path, duplicates, loops)
    return DirectedGraph(len(labels), edges, labels, allow_loops)


def write_edge_list(graph: DirectedGraph, fh) -> None:
    for u, v in graph.edges:
        fh.write(f"{graph.label(u)}\t{graph.label(v)}\n")
