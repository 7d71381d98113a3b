"""Monte Carlo validation of the analytic bounds.

Replicate ``i`` of a study draws its graph from
``SeedSequence(master_seed, spawn_key=(i,))``, so results do not depend on
how replicates are split across workers.

The per-replicate statistic uses a dense-matrix embedding search instead of
the ESU census: it lists every induced embedding of the subpattern and
counts extensions with boolean row products.  Duplicate embeddings of one
vertex set share the same theme order and expectation, so they do not
change the maximum score.
"""

from __future__ import annotations

import itertools
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binomtest

from . import bounds
from .errors import ContractError
from .graph import DeletionClass, Pattern, canonical_form
from .nullmodel import BlockModel, class_extension_probs, embedding_prob, expected_count, lambda_u

PRESETS = {
    "reference": ((30, 30, 30), 0.04, 0.01),
    "dense": ((30, 30, 30), 0.20, 0.05),
    "large": ((120, 120, 120), 0.01, 0.0025),
}


def planted_partition(sizes, p_in: float, p_out: float) -> BlockModel:
    Q = len(sizes)
    Z = np.repeat(np.arange(Q), sizes)
    Pi = np.full((Q, Q), p_out)
    np.fill_diagonal(Pi, p_in)
    return BlockModel(Z, Pi)


def preset_model(name: str) -> BlockModel:
    try:
        sizes, p_in, p_out = PRESETS[name]
    except KeyError:
        raise ContractError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return planted_partition(sizes, p_in, p_out)


def default_deleted_vertex(pattern: Pattern) -> int:
    """Smallest vertex of maximal in-degree (the FFL sink, a bi-fan sink)."""
    degs = [pattern.in_degree(a) for a in range(pattern.k)]
    return degs.index(max(degs))


def replicate_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(index,)))


# ---------------------------------------------------------------------------
# dense embedding search
# ---------------------------------------------------------------------------


class EmbeddingSearch:
    """All induced embeddings of a loop-free pattern in a dense adjacency."""

    def __init__(self, pattern: Pattern):
        if pattern.allow_loops and pattern.adjacency.diagonal().any():
            raise ContractError("dense embedding search does not support loops")
        self.pattern = pattern
        und = pattern.adjacency | pattern.adjacency.T
        # greedily place the vertex with the most ties to those already placed
        order = [int(np.argmax(und.sum(axis=1)))]
        while len(order) < pattern.k:
            rest = [a for a in range(pattern.k) if a not in order]
            order.append(max(rest, key=lambda a: (und[a, order].sum(), und[a].sum(), -a)))
        self.order = order
        self._unorder = np.argsort(order)

    def embeddings(self, adj: np.ndarray) -> np.ndarray:
        """Array of shape ``(r, k)``; row entry ``a`` plays pattern vertex ``a``."""
        n = len(adj)
        pat = self.pattern.adjacency
        rows = np.arange(n, dtype=np.intp)[:, None]
        adj_t = adj.T
        for step in range(1, self.pattern.k):
            j = self.order[step]
            r = len(rows)
            if r == 0:
                break
            mask = np.ones((r, n), dtype=bool)
            for pos, i in enumerate(self.order[:step]):
                col = rows[:, pos]
                mask &= adj[col] if pat[i, j] else ~adj[col]
                mask &= adj_t[col] if pat[j, i] else ~adj_t[col]
                mask[np.arange(r), col] = False
            ridx, v = np.nonzero(mask)
            rows = np.concatenate([rows[ridx], v[:, None]], axis=1)
        if rows.shape[1] < self.pattern.k:
            return np.empty((0, self.pattern.k), dtype=np.intp)
        return rows[:, self._unorder]

    def count_occurrences(self, adj: np.ndarray) -> int:
        return len(self.embeddings(adj)) // len(self.pattern.automorphisms)


class ThemeStatistic:
    """``max_U g(lambda_U, Delta_U)`` for one (pattern, class) pair under a
    known model, evaluated on dense adjacency matrices."""

    def __init__(self, model: BlockModel, pattern: Pattern, cls: DeletionClass):
        if cls.pattern != pattern:
            raise ContractError("deletion class does not belong to the pattern")
        if model.loops:
            raise ContractError("simulation does not support loop-enabled models")
        self.model = model
        self.pattern = pattern
        self.cls = cls
        self.search = EmbeddingSearch(cls.subpattern)
        self.m = pattern.k - 1
        self.configs = [tuple(bool(b) for b in cfg) for cfg in cls.extension_configs]
        Q = model.Q
        self.lam_table = np.zeros((Q,) * self.m) if self.m else np.zeros(())
        sizes = model.class_sizes.astype(float)
        for classes in itertools.product(range(Q), repeat=self.m):
            probs = class_extension_probs(model, classes, cls).astype(float)
            free = sizes - np.bincount(classes, minlength=Q)
            self.lam_table[classes] = float((free * probs).sum())
        self.expected_sub = float(expected_count(model, cls.subpattern))
        self._g_cache: dict[tuple[float, int], float] = {}

    def orders(self, adj: np.ndarray, emb: np.ndarray) -> np.ndarray:
        r, n = len(emb), len(adj)
        adj_t = adj.T
        total = np.zeros(r, dtype=np.int64)
        rows = np.arange(r)
        m = self.m
        for cfg in self.configs:
            term = np.ones((r, n), dtype=bool)
            for s in range(m):
                col = emb[:, s]
                term &= adj[col] if cfg[s] else ~adj[col]
                term &= adj_t[col] if cfg[m + s] else ~adj_t[col]
            for s in range(m):
                term[rows, emb[:, s]] = False
            total += term.sum(axis=1)
        return total

    def _g(self, lam: float, n_u: int) -> float:
        key = (lam, n_u)
        if key not in self._g_cache:
            self._g_cache[key] = bounds.score(lam, n_u)
        return self._g_cache[key]

    def max_score(self, adj: np.ndarray) -> float:
        emb = self.search.embeddings(adj)
        if len(emb) == 0:
            return 0.0
        n_u = self.orders(adj, emb)
        lam = self.lam_table[tuple(self.model.Z[emb].T)]
        hit = n_u > lam
        if not hit.any():
            return 0.0
        best = 0.0
        # g increases with n_u for fixed lambda: only the largest order per lambda matters
        for lam_value in np.unique(lam[hit]):
            top = int(n_u[hit & (lam == lam_value)].max())
            best = max(best, self._g(float(lam_value), top))
        return best

    def replicate_scores(self, master_seed: int, indices) -> np.ndarray:
        P = self.model.pair_probabilities()
        n = self.model.n
        out = np.empty(len(indices))
        for j, i in enumerate(indices):
            adj = replicate_rng(master_seed, int(i)).random((n, n)) < P
            out[j] = self.max_score(adj)
        return out


# ---------------------------------------------------------------------------
# studies
# ---------------------------------------------------------------------------


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = binomtest(int(successes), int(trials)).proportion_ci(confidence, method="wilson")
    return float(ci.low), float(ci.high)


def default_t_grid(expected_sub: float, replicates: int, points: int = 40) -> np.ndarray:
    """Thresholds whose bound runs from 1 down to ``1 / replicates``."""
    lo = max(math.log(expected_sub), 1e-3) if expected_sub > 0 else 1e-3
    hi = max(math.log(expected_sub * replicates) if expected_sub > 0 else 1.0, lo + 1.0)
    return np.linspace(lo, hi, points)


@dataclass
class SimStudy:
    model: BlockModel
    pattern: Pattern
    cls: DeletionClass
    replicates: int
    t_grid: np.ndarray | None = None
    master_seed: int = 0

    def __post_init__(self):
        if self.replicates < 1:
            raise ContractError("replicates must be >= 1")
        if self.t_grid is not None:
            grid = np.asarray(self.t_grid, dtype=float)
            if (grid <= 0).any() or (np.diff(grid) <= 0).any():
                raise ContractError("t grid must be positive and strictly increasing")
            self.t_grid = grid


@dataclass
class TailRow:
    t: float
    exceedances: int
    empirical: float
    ci_lo: float
    ci_hi: float
    bound: float

    @property
    def ratio(self) -> float:
        return self.empirical / self.bound if self.bound > 0 else math.nan


@dataclass
class StudyResult:
    study: SimStudy
    expected_sub: float
    scores: np.ndarray
    rows: list[TailRow] = field(default_factory=list)

    def table(self) -> str:
        lines = ["t\tempirical\tci_lo\tci_hi\tbound\tratio\texceedances"]
        for r in self.rows:
            lines.append(
                f"{r.t:.6g}\t{r.empirical:.6g}\t{r.ci_lo:.6g}\t{r.ci_hi:.6g}\t"
                f"{r.bound:.6g}\t{r.ratio:.6g}\t{r.exceedances}"
            )
        return "\n".join(lines) + "\n"


def _scores_chunk(stat: ThemeStatistic, seed: int, indices) -> np.ndarray:
    return stat.replicate_scores(seed, indices)


def empirical_tail(study: SimStudy, workers: int = 1, chunk: int = 2000) -> StudyResult:
    """Empirical tail of the max score against the global bound.

    Each replicate contributes ``S = max_U g(lambda_U, Delta_U)`` (0 without
    any excess); ``empirical(t) = #{S >= t} / replicates`` and
    ``bound(t) = min(1, E[N(m')] exp(-t))``.
    """
    stat = ThemeStatistic(study.model, study.pattern, study.cls)
    indices = np.arange(study.replicates)
    if workers > 1:
        parts = [indices[i:i + chunk] for i in range(0, len(indices), chunk)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            scores = np.concatenate(list(pool.map(
                _scores_chunk, [stat] * len(parts), [study.master_seed] * len(parts), parts
            )))
    else:
        scores = stat.replicate_scores(study.master_seed, indices)
    grid = study.t_grid
    if grid is None:
        grid = default_t_grid(stat.expected_sub, study.replicates)
    result = StudyResult(study, stat.expected_sub, scores)
    for t in grid:
        hits = int((scores >= t).sum())
        lo, hi = wilson_interval(hits, study.replicates)
        result.rows.append(TailRow(
            float(t), hits, hits / study.replicates, lo, hi,
            bounds.global_pvalue(stat.expected_sub, float(t)),
        ))
    return result


# ---------------------------------------------------------------------------
# moment checks for the null model
# ---------------------------------------------------------------------------


@dataclass
class MomentEstimate:
    mean: float
    se: float
    lam: float
    accepted: int
    estimable: bool = True


def _extension_table(pattern: Pattern, cls: DeletionClass, internal_bits: int) -> np.ndarray:
    """For a fixed internal adjacency of the position (k-1 vertices), whether
    each extension vector makes the k vertices an occurrence with the new
    vertex in ``cls``.  Decided by canonical forms, not by the class's
    extension configurations."""
    k = pattern.k
    m = k - 1
    inner = np.array([(internal_bits >> (m * m - 1 - i)) & 1 for i in range(m * m)],
                     dtype=bool).reshape(m, m)
    table = np.zeros(1 << (2 * m), dtype=bool)
    code = pattern.code
    target_class = cls.index
    canon_class = {}
    for a in range(k):
        canon_class[pattern.to_canon[a]] = pattern.vertex_class[a]
    for idx in range(1 << (2 * m)):
        slots = [(idx >> (2 * m - 1 - i)) & 1 for i in range(2 * m)]
        adj = np.zeros((k, k), dtype=bool)
        adj[:m, :m] = inner
        for s in range(m):
            adj[s, m] = slots[s]
            adj[m, s] = slots[m + s]
        bits = 0
        for cell in adj.ravel():
            bits = (bits << 1) | int(cell)
        cbits, to_canon = canonical_form(k, bits)
        if (k, cbits) == code and canon_class[to_canon[m]] == target_class:
            table[idx] = True
    return table


def conditional_theme_moments(
    model: BlockModel,
    pattern: Pattern,
    cls: DeletionClass,
    replicates: int,
    position=None,
    seed: int = 0,
    batch: int = 10_000,
    max_draws: int = 10**8,
) -> MomentEstimate:
    """Monte Carlo mean of the theme order at a fixed position conditional
    on the position inducing the subpattern (any isomorphic labeling).

    ``position`` lists the graph vertices of the position; by default the
    first ``k-1`` vertices of class 0.
    """
    sub = cls.subpattern
    m = pattern.k - 1
    if position is None:
        members = np.nonzero(model.Z == 0)[0]
        position = members[:m] if len(members) >= m else np.arange(m)
    U = np.array(position, dtype=np.intp)
    P = model.pair_probabilities()
    others = np.setdiff1d(np.arange(model.n), U)
    rng = np.random.default_rng(seed)
    # analytic expectation, taken at the identity labeling of U
    lam = float(lambda_u(model, list(U), cls)[0])
    weights = 1 << np.arange(m * m - 1, -1, -1)
    slot_weights = 1 << np.arange(2 * m - 1, -1, -1)
    inner_p = P[np.ix_(U, U)]
    tables: dict[int, np.ndarray] = {}
    orders = []
    accepted = draws = 0
    zero_prob = all(
        float(embedding_prob(model, sub, [int(U[s]) for s in perm])) == 0.0
        for perm in itertools.permutations(range(m))
    )
    if zero_prob:
        return MomentEstimate(math.nan, math.nan, lam, 0, estimable=False)
    while accepted < replicates:
        if draws >= max_draws:
            warnings.warn(f"only {accepted} conditioning events in {draws} draws; "
                          "confidence interval is wide", stacklevel=2)
            break
        inner = rng.random((batch, m, m)) < inner_p
        draws += batch
        codes = (inner.reshape(batch, -1) * weights).sum(axis=1)
        keep = np.zeros(batch, dtype=bool)
        for c in np.unique(codes).tolist():
            if canonical_form(m, int(c))[0] == sub.code[1]:
                keep |= codes == c
        codes = codes[keep][: replicates - accepted]
        b = len(codes)
        if b == 0:
            continue
        out = rng.random((b, m, len(others))) < P[np.ix_(U, others)]
        into = rng.random((b, m, len(others))) < P[np.ix_(others, U)].T
        slots = np.concatenate([out, into], axis=1)
        ext = np.tensordot(slot_weights, slots, axes=([0], [1]))
        for c in np.unique(codes).tolist():
            if c not in tables:
                tables[c] = _extension_table(pattern, cls, int(c))
            sel = codes == c
            orders.append(tables[c][ext[sel]].sum(axis=1))
        accepted += b
    values = np.concatenate(orders) if orders else np.empty(0)
    if len(values) < 2:
        return MomentEstimate(math.nan, math.nan, lam, len(values), estimable=False)
    return MomentEstimate(float(values.mean()), float(values.std(ddof=1) / math.sqrt(len(values))),
                          lam, len(values))


def mc_expected_count(pattern: Pattern, model: BlockModel, replicates: int, seed: int = 0):
    """Monte Carlo mean and standard error of the induced occurrence count."""
    search = EmbeddingSearch(pattern)
    P = model.pair_probabilities()
    n = model.n
    counts = np.empty(replicates)
    for i in range(replicates):
        adj = replicate_rng(seed, i).random((n, n)) < P
        counts[i] = search.count_occurrences(adj)
    return float(counts.mean()), float(counts.std(ddof=1) / math.sqrt(replicates))
