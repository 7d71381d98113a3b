"""End-to-end local motif detection: census, scoring, filtering, reporting."""

from __future__ import annotations

import itertools
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Mapping

from . import bounds
from .census import Occurrences, ThemeRecord, enumerate_subgraphs, format_code, theme_orders
from .errors import ContractError, SizeError
from .graph import MAX_PATTERN_SIZE, Code, DeletionClass, DirectedGraph, Pattern, canonical_pattern
from .nullmodel import BlockModel, PositionStats, class_extension_probs, expected_count

log = logging.getLogger(__name__)

MOTIF = "motif"
POTENTIAL = "potential"
FILTERED = "filtered"
NOT_SIGNIFICANT = "not-significant"


@dataclass(frozen=True)
class Witness:
    """Vertices ``removed`` from the pattern leave a smaller pattern that is
    already a motif for the deleted vertex's class there."""

    removed: tuple[int, ...]
    smaller_code: Code
    smaller_class: int


@dataclass(frozen=True)
class ScoredTheme:
    record: ThemeRecord
    score: float

    @property
    def stats(self) -> PositionStats:
        return self.record.stats


@dataclass
class MotifResult:
    pattern: Pattern
    class_index: int
    expected_sub: float
    s_star: float
    log_p_bound: float
    n_u_star: int
    n_positions: int
    top_themes: list[ScoredTheme]
    status: str = NOT_SIGNIFICANT
    witness: Witness | None = None
    all_witnesses: list[Witness] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    misfits: list[ScoredTheme] = field(default_factory=list)

    @property
    def key(self) -> tuple[Code, int]:
        return (self.pattern.code, self.class_index)

    @property
    def code(self) -> Code:
        return self.pattern.code

    @property
    def deletion_class(self) -> DeletionClass:
        return self.pattern.deletion_classes[self.class_index]

    @property
    def p_bound(self) -> float:
        return math.exp(self.log_p_bound)

    def to_record(self, graph: DirectedGraph | None = None) -> dict:
        def label(v):
            return graph.label(v) if graph is not None else str(v)

        themes = []
        for th in self.top_themes:
            st = th.stats
            themes.append({
                "class_sets": [[label(v) for v in s] for s in th.record.position.sets],
                "order": st.n_u,
                "lambda": st.lam,
                "delta": st.delta,
                "g": th.score,
            })
        witness = None
        if self.witness is not None:
            witness = {
                "removed": list(self.witness.removed),
                "smaller_pattern": format_code(self.witness.smaller_code),
                "smaller_class": self.witness.smaller_class,
            }
        return {
            "pattern_code": format_code(self.code),
            "adjacency": self.pattern.literal,
            "class_index": self.class_index,
            "class_members": list(self.deletion_class.members),
            "expected_subpattern_count": self.expected_sub,
            "p_bound": self.p_bound,
            "log10_p_bound": self.log_p_bound / math.log(10),
            "s_star": self.s_star,
            "n_u_star": self.n_u_star,
            "status": self.status,
            "witness": witness,
            "top_themes": themes,
            "diagnostics": self.diagnostics,
        }


# ---------------------------------------------------------------------------
# scoring one (pattern, class) pair
# ---------------------------------------------------------------------------


class _Scorer:
    """Caches lambda values per class tuple and E[N(m')] per subpattern."""

    def __init__(self, model: BlockModel):
        self.model = model
        self._lam: dict = {}
        self._expected: dict[Code, float] = {}

    def expected(self, sub: Pattern) -> float:
        if sub.code not in self._expected:
            self._expected[sub.code] = float(expected_count(self.model, sub))
        return self._expected[sub.code]

    def lam(self, cls: DeletionClass, embedding) -> tuple[float, float]:
        classes = tuple(int(self.model.Z[u]) for u in embedding)
        key = (cls.pattern.code, cls.index, classes)
        if key not in self._lam:
            probs = class_extension_probs(self.model, classes, cls).astype(float)
            free = self.model.class_sizes.astype(float)
            for c in classes:
                free[c] -= 1
            self._lam[key] = (float((free * probs).sum()), float((free * probs * probs).sum()))
        return self._lam[key]


def score_pair(
    graph: DirectedGraph,
    model: BlockModel,
    pattern: Pattern,
    cls: DeletionClass,
    occurrences: Mapping[int, Occurrences],
    scorer: _Scorer | None = None,
    theme_cap: int = 10,
    diagnostics: bool = False,
) -> MotifResult:
    scorer = scorer or _Scorer(model)
    k = pattern.k
    records = theme_orders(
        graph, pattern, cls, occurrences[k], occurrences.get(k - 1) if diagnostics else None
    )
    scored, misfits = [], []
    for rec in records:
        lam, lam2 = scorer.lam(cls, rec.embedding)
        n_u = rec.order
        delta = (n_u - lam) / lam if lam > 0 else (math.inf if n_u > 0 else 0.0)
        rec = ThemeRecord(rec.pattern, rec.class_index, rec.position, n_u, rec.embedding,
                          PositionStats(lam, lam2, n_u, delta))
        s = bounds.score(lam, n_u)
        (misfits if math.isinf(s) else scored).append(ScoredTheme(rec, s))
    if misfits:
        log.warning("%s class %d: %d positions with extensions but zero expectation "
                    "(model misfit); excluded from the p-value",
                    pattern.literal, cls.index, len(misfits))
    scored.sort(key=lambda th: (-th.score, th.record.position))
    s_star = scored[0].score if scored else 0.0
    n_u_star = scored[0].record.order if scored else 0
    e_sub = scorer.expected(cls.subpattern)
    log_p = bounds.global_pvalue_log(e_sub, s_star)
    diag = {"rho": model.rho, "tv_bound": None, "prop1_ratio": None}
    if scored and scored[0].stats.lam > 0:
        st = scored[0].stats
        diag["tv_bound"] = bounds.tv_distance_bound(st.lam, st.lam2)
        if st.delta > 0:
            diag["prop1_ratio"] = bounds.lower_bound_diag(
                bounds.BoundInputs(lam=st.lam, t=st.delta, lam2=min(st.lam2, st.lam))
            )
    return MotifResult(
        pattern=pattern,
        class_index=cls.index,
        expected_sub=e_sub,
        s_star=s_star,
        log_p_bound=log_p,
        n_u_star=n_u_star,
        n_positions=len(records),
        top_themes=scored[:theme_cap],
        diagnostics=diag,
        misfits=misfits,
    )


# ---------------------------------------------------------------------------
# redundancy filter
# ---------------------------------------------------------------------------


def is_redundant(
    pattern: Pattern,
    cls: DeletionClass,
    smaller: Mapping[tuple[Code, int], str],
    first_only: bool = True,
) -> list[Witness]:
    """Witnesses that the over-representation of ``(pattern, cls)`` is
    explained by a smaller motif.

    A witness is a nonempty vertex set ``A`` with no edge (either way)
    between ``A`` and the deleted vertex ``a``, such that ``pattern - A`` is
    a motif for the class of ``a`` in it.  ``smaller`` maps
    ``(code, class index)`` to a final status.  Subsets are tried by size,
    then lexicographically.
    """
    a = cls.representative
    adj = pattern.adjacency
    others = [b for b in range(pattern.k) if b != a and not adj[a, b] and not adj[b, a]]
    found = []
    for size in range(1, len(others) + 1):
        for removed in itertools.combinations(others, size):
            remaining = [b for b in range(pattern.k) if b not in removed]
            if len(remaining) < 2:
                continue
            rest = pattern.induced(remaining)
            canon_vertex = rest.to_canon[remaining.index(a)]
            canonical = canonical_pattern(rest.code)
            key = (rest.code, canonical.vertex_class[canon_vertex])
            if smaller.get(key) == MOTIF:
                found.append(Witness(removed, key[0], key[1]))
                if first_only:
                    return found
    return found


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------


def detect(
    graph: DirectedGraph,
    model: BlockModel,
    k_max: int,
    alpha: float,
    k_min: int = 3,
    theme_cap: int = 10,
    diagnostics: bool = False,
    all_witnesses: bool = False,
    threads: int = 1,
    occurrences: dict[int, Occurrences] | None = None,
) -> list[MotifResult]:
    """Score and filter every (pattern, deletion class) pair of sizes
    ``k_min..k_max`` occurring in ``graph``."""
    if model.n != graph.n:
        raise ContractError(f"model has {model.n} vertices, graph has {graph.n}")
    if not 3 <= k_min <= k_max <= MAX_PATTERN_SIZE:
        raise SizeError(f"need 3 <= k_min <= k_max <= {MAX_PATTERN_SIZE}")
    occurrences = dict(occurrences or {})
    scorer = _Scorer(model)
    statuses: dict[tuple[Code, int], str] = {}
    results: list[MotifResult] = []
    for k in range(k_min, k_max + 1):
        needed = [k, k - 1] if diagnostics else [k]
        for size in needed:
            if size not in occurrences:
                occurrences[size] = enumerate_subgraphs(graph, size, threads)
        level = []
        for code in occurrences[k]:
            pattern = canonical_pattern(code)
            for cls in pattern.deletion_classes:
                res = score_pair(graph, model, pattern, cls, occurrences, scorer,
                                 theme_cap, diagnostics)
                if res.p_bound <= alpha:
                    res.status = POTENTIAL
                level.append(res)
        for res in level:
            if res.status != POTENTIAL:
                continue
            witnesses = is_redundant(res.pattern, res.deletion_class, statuses,
                                     first_only=not all_witnesses)
            if witnesses:
                res.status = FILTERED
                res.witness = witnesses[0]
                res.all_witnesses = witnesses
            else:
                res.status = MOTIF
        for res in level:
            statuses[res.key] = res.status
        results.extend(level)
        log.info("size %d: %d pairs, %d motifs", k, len(level),
                 sum(r.status == MOTIF for r in level))
    return results


def rank_report(results: list[MotifResult], include_all: bool = False) -> list[MotifResult]:
    """Motifs by increasing p bound, then decreasing score, then code."""
    chosen = results if include_all else [r for r in results if r.status == MOTIF]
    return sorted(chosen, key=lambda r: (r.log_p_bound, -r.s_star, r.code, r.class_index))


def format_table(results: list[MotifResult], graph: DirectedGraph | None = None) -> str:
    if not results:
        return "no local motifs found\n"
    header = f"{'pattern':<28} {'class':<10} {'p_bound':>10} {'s*':>9} {'N_U*':>5}  {'status':<16} top theme"
    lines = [header, "-" * len(header)]
    for r in results:
        theme = ""
        if r.top_themes:
            sets = r.top_themes[0].record.position.sets
            label = graph.label if graph is not None else str
            theme = " ".join("{" + ",".join(label(v) for v in s) + "}" for s in sets)
        status = r.status
        if r.witness is not None:
            status += f"(A={set(r.witness.removed)})"
        lines.append(
            f"{r.pattern.literal:<28} {r.deletion_class.describe():<10} "
            f"{bounds.format_pvalue(r.log_p_bound):>10} {r.s_star:9.3f} {r.n_u_star:5d}  "
            f"{status:<16} {theme}"
        )
    return "\n".join(lines) + "\n"


def write_records(results: list[MotifResult], fh, graph: DirectedGraph | None = None) -> None:
    for r in results:
        fh.write(json.dumps(r.to_record(graph), sort_keys=True) + "\n")
