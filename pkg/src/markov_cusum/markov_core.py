"""Finite-alphabet Markov sources of arbitrary finite order.

An order-r chain over A symbols is handled as a first-order chain over the
A**r contexts ("alphabet lifting"), so stationary laws and rates are all
computed on the lifted chain. Probabilities are manipulated as base-2 logs
with ``-inf`` standing for probability zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence, Union

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import _kernels
from .errors import AlphabetMismatch, InvalidDelta, NonErgodic, SupportViolation

SeedLike = Union[None, int, np.random.SeedSequence, np.random.Generator]

ROW_TOL = 1e-12
STATIONARY_TOL = 1e-10


def as_generator(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def spawn_seeds(seed: SeedLike, n: int) -> list:
    """Independent child streams; child i never depends on n."""
    if isinstance(seed, np.random.Generator):
        seed = seed.bit_generator.seed_seq
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return seed.spawn(n)


def _log2(p):
    with np.errstate(divide="ignore"):
        return np.log2(p)


def context_codes(x: np.ndarray, order: int, n_symbols: int) -> np.ndarray:
    """Context code of every position i >= order (preceding `order` symbols)."""
    x = np.asarray(x, dtype=np.int64)
    n = x.shape[0]
    if n <= order:
        return np.zeros(0, dtype=np.int64)
    ctx = np.zeros(n - order, dtype=np.int64)
    mult = 1
    for j in range(1, order + 1):
        ctx += x[order - j:n - j] * mult
        mult *= n_symbols
    return ctx


def block_code(block: Sequence[int], n_symbols: int) -> int:
    c = 0
    for s in block:
        c = c * n_symbols + int(s)
    return c


class _ChainLaw:
    """Likelihood helpers shared by true models and empirical estimates.

    Subclasses provide ``order``, ``n_symbols``, ``transitions`` and
    ``initial_law``.
    """

    order: int
    n_symbols: int

    @property
    def n_contexts(self) -> int:
        return self.n_symbols ** self.order

    @cached_property
    def log2_transitions(self) -> np.ndarray:
        return _log2(self.transitions)

    @cached_property
    def _block_marginals(self) -> list:
        # _block_marginals[w] is the law of the first w symbols, w = 1..order
        shaped = np.asarray(self.initial_law).reshape((self.n_symbols,) * self.order)
        out = [np.ones(1)]
        for w in range(1, self.order + 1):
            axes = tuple(range(w, self.order))
            out.append(shaped.sum(axis=axes).reshape(-1) if axes else shaped.reshape(-1))
        return out

    def block_log2_marginal(self, block: Sequence[int]) -> float:
        w = len(block)
        if w == 0:
            return 0.0
        if w > self.order:
            raise ValueError("block longer than the model order")
        p = self._block_marginals[w][block_code(block, self.n_symbols)]
        return math.log2(p) if p > 0 else -math.inf

    def log2_prob(self, x: Sequence[int]) -> float:
        x = np.asarray(x, dtype=np.int64)
        n = x.shape[0]
        if n == 0:
            raise ValueError("sequence must be non-empty")
        if n <= self.order:
            return self.block_log2_marginal(x)
        total = self.block_log2_marginal(x[:self.order])
        if total == -math.inf:
            return total
        ctx = context_codes(x, self.order, self.n_symbols)
        terms = self.log2_transitions[ctx, x[self.order:]]
        return float(total + terms.sum())

    def window_log2_arrays(self, path: np.ndarray):
        """Per-position pieces used to score every window of ``path``.

        Returns ``(head, cond)``: ``head[s, w-1]`` is the log-probability of
        the block ``path[s:s+w]`` for w <= order (NaN past the end) and
        ``cond[t]`` the transition log-probability of ``path[t]`` given the
        ``order`` preceding symbols (NaN for t < order).
        """
        path = np.asarray(path, dtype=np.int64)
        n = path.shape[0]
        r = self.order
        head = np.full((n, r), np.nan)
        for w in range(1, r + 1):
            m = n - w + 1
            if m <= 0:
                break
            code = np.zeros(m, dtype=np.int64)
            for j in range(w):
                code = code * self.n_symbols + path[j:j + m]
            with np.errstate(divide="ignore"):
                head[:m, w - 1] = np.log2(self._block_marginals[w][code])
        cond = np.full(n, np.nan)
        if n > r:
            ctx = context_codes(path, r, self.n_symbols)
            cond[r:] = self.log2_transitions[ctx, path[r:]]
        return head, cond


class RunningLog2Prob:
    """Incremental log2-probability of a growing window, O(1) per symbol."""

    def __init__(self, law: _ChainLaw):
        self.law = law
        self.block: list = []
        self.context = 0
        self.total = 0.0
        self.n = 0

    def push(self, a: int) -> float:
        law = self.law
        a = int(a)
        if self.n < law.order:
            self.block.append(a)
            self.total = law.block_log2_marginal(self.block)
        else:
            self.total += float(law.log2_transitions[self.context, a])
        self.context = (self.context * law.n_symbols + a) % law.n_contexts
        self.n += 1
        return self.total

    def copy(self) -> "RunningLog2Prob":
        other = RunningLog2Prob(self.law)
        other.block = list(self.block)
        other.context = self.context
        other.total = self.total
        other.n = self.n
        return other


def _lifted_edges(transitions: np.ndarray, n_symbols: int):
    n_ctx = transitions.shape[0]
    src, dst = np.nonzero(transitions > 0)
    return src, (src * n_symbols + dst) % n_ctx


def _classify(transitions: np.ndarray, n_symbols: int):
    """Return (closed-class mask, period) of the lifted chain.

    Raises NonErgodic when the chain has more than one closed class.
    """
    n_ctx = transitions.shape[0]
    src, dst = _lifted_edges(transitions, n_symbols)
    graph = csr_matrix((np.ones(src.size), (src, dst)), shape=(n_ctx, n_ctx))
    n_comp, labels = connected_components(graph, directed=True, connection="strong")
    leaves = np.ones(n_comp, dtype=bool)
    cross = labels[src] != labels[dst]
    leaves[labels[src[cross]]] = False
    closed = np.flatnonzero(leaves)
    if closed.size != 1:
        raise NonErgodic(f"chain is reducible: {closed.size} closed classes")
    mask = labels == closed[0]
    # period = gcd of level(u) + 1 - level(v) over edges inside the class
    root = int(np.flatnonzero(mask)[0])
    level = np.full(n_ctx, -1)
    level[root] = 0
    frontier = [root]
    adj = [[] for _ in range(n_ctx)]
    for u, v in zip(src.tolist(), dst.tolist()):
        adj[u].append(v)
    while frontier:
        nxt = []
        for u in frontier:
            for v in adj[u]:
                if level[v] < 0:
                    level[v] = level[u] + 1
                    nxt.append(v)
        frontier = nxt
    period = 0
    for u, v in zip(src.tolist(), dst.tolist()):
        if mask[u] and mask[v]:
            period = math.gcd(period, int(level[u] + 1 - level[v]))
    return mask, period


def _solve_stationary(transitions: np.ndarray, n_symbols: int) -> np.ndarray:
    n_ctx = transitions.shape[0]
    lifted = np.zeros((n_ctx, n_ctx))
    src, dst = _lifted_edges(transitions, n_symbols)
    sym = dst % n_symbols
    lifted[src, dst] = transitions[src, sym]
    system = lifted.T - np.eye(n_ctx)
    system[-1, :] = 1.0
    rhs = np.zeros(n_ctx)
    rhs[-1] = 1.0
    pi = np.linalg.solve(system, rhs)
    pi[np.abs(pi) < 1e-15] = 0.0
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    residual = np.abs(pi @ lifted - pi).max()
    if residual > STATIONARY_TOL:
        raise NonErgodic(f"stationary solve residual {residual:.3g}")
    return pi


@dataclass(frozen=True, eq=False)
class MarkovModel(_ChainLaw):
    """Order-``order`` Markov source over symbols ``0..n_symbols-1``.

    ``transitions[c, a]`` is p(a | context c) for every one of the
    ``n_symbols**order`` contexts. ``initial_law`` is the law of the first
    context and defaults to the stationary law.
    """

    transitions: np.ndarray
    order: int = 1
    initial_law: Optional[np.ndarray] = None
    n_symbols: int = field(init=False)
    period: int = field(init=False, repr=False)
    recurrent: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        rows = np.array(self.transitions, dtype=np.float64)
        if rows.ndim != 2:
            raise ValueError("transitions must be a 2-d table")
        n_symbols = rows.shape[1]
        if n_symbols < 2:
            raise ValueError("alphabet size must be at least 2")
        if self.order < 1:
            raise ValueError("order must be a positive integer")
        if rows.shape[0] != n_symbols ** self.order:
            raise ValueError(
                f"expected {n_symbols ** self.order} rows for order {self.order}, "
                f"got {rows.shape[0]}")
        for i, row in enumerate(rows):
            if not np.all(np.isfinite(row)) or np.any(row < 0) or np.any(row > 1):
                raise ValueError(f"row {i}: entries must lie in [0, 1]")
            if abs(row.sum() - 1.0) > ROW_TOL:
                raise ValueError(f"row {i}: sums to {row.sum()!r}, not 1")
        rows.setflags(write=False)
        object.__setattr__(self, "transitions", rows)
        object.__setattr__(self, "n_symbols", n_symbols)
        mask, period = _classify(rows, n_symbols)
        if period > 1 and not self._rows_deterministic(rows, mask):
            raise NonErgodic(f"chain is periodic with period {period}")
        object.__setattr__(self, "period", period)
        object.__setattr__(self, "recurrent", mask)
        if self.initial_law is None:
            init = _solve_stationary(rows, n_symbols)
        else:
            init = np.array(self.initial_law, dtype=np.float64).reshape(-1)
            if init.shape[0] != rows.shape[0]:
                raise ValueError("initial_law must have one entry per context")
            if np.any(init < 0) or abs(init.sum() - 1.0) > ROW_TOL:
                raise ValueError("initial_law must be a probability vector")
        init.setflags(write=False)
        object.__setattr__(self, "initial_law", init)

    @staticmethod
    def _rows_deterministic(rows, mask):
        return bool(np.all(rows[mask].max(axis=1) == 1.0))

    @property
    def is_deterministic_cycle(self) -> bool:
        return self._rows_deterministic(self.transitions, self.recurrent)

    @cached_property
    def stationary(self) -> np.ndarray:
        return _solve_stationary(self.transitions, self.n_symbols)

    @cached_property
    def _cum_rows(self):
        cum = np.cumsum(self.transitions, axis=1)
        cum[:, -1] = 1.0
        init = np.cumsum(self.initial_law)
        init[-1] = 1.0
        return init, cum

    def sample(self, length: int, seed: SeedLike = None,
               start_context: Optional[int] = None) -> np.ndarray:
        """Draw ``length`` symbols; continue from ``start_context`` if given."""
        rng = as_generator(seed)
        out = np.empty(length, dtype=np.int64)
        if length == 0:
            return out
        u = rng.random(length)
        cum_init, cum = self._cum_rows
        _kernels.sample_chain(cum_init, cum, self.order, self.n_symbols, u, out,
                              -1 if start_context is None else int(start_context))
        return out

    def sample_many(self, trials: int, length: int, seed: SeedLike = None) -> np.ndarray:
        rng = as_generator(seed)
        out = np.empty((trials, length), dtype=np.int64)
        u = rng.random((trials, length))
        cum_init, cum = self._cum_rows
        _kernels.sample_chains_batch(cum_init, cum, self.order, self.n_symbols, u, out)
        return out

    def with_initial(self, initial_law) -> "MarkovModel":
        return MarkovModel(self.transitions, self.order, initial_law)


@dataclass(frozen=True)
class ChangeSpec:
    """Pre-change law, post-change law, change point and training length.

    ``change_point`` counts from the first sample after the training prefix
    (m = 1 means the very first monitored sample is post-change); ``None``
    means no change ever happens.
    """

    pre: MarkovModel
    post: MarkovModel
    change_point: Optional[int] = None
    n0: int = 0

    def __post_init__(self):
        if self.change_point is not None and self.change_point < 1:
            raise ValueError("change_point must be >= 1 or None")
        if self.n0 < 0:
            raise ValueError("n0 must be non-negative")
        _check_same_shape(self.pre, self.post)
        support = self.pre.transitions > 0
        bad = (self.post.transitions > 0) & ~support
        if np.any(bad[self.post.recurrent]):
            raise SupportViolation("post-change law is not absolutely continuous "
                                   "with respect to the pre-change law")


def _check_same_shape(p, q):
    if p.n_symbols != q.n_symbols or p.order != q.order:
        raise AlphabetMismatch(
            f"alphabet/order mismatch: ({p.n_symbols}, {p.order}) vs "
            f"({q.n_symbols}, {q.order})")


def stationary_distribution(model: MarkovModel) -> np.ndarray:
    """Stationary law over contexts; NonErgodic for periodic chains."""
    if model.period > 1:
        raise NonErgodic(f"chain is periodic with period {model.period}")
    return model.stationary


def sample_path(spec: ChangeSpec, length: int, seed: SeedLike = None) -> np.ndarray:
    if length < 1:
        raise ValueError("length must be >= 1")
    rng = as_generator(seed)
    if spec.change_point is None:
        n_pre = length
    else:
        n_pre = min(length, spec.n0 + spec.change_point - 1)
    pre = spec.pre.sample(n_pre, rng)
    post = spec.post.sample(length - n_pre, rng)
    return np.concatenate([pre, post])


def log2_probability(model: _ChainLaw, x: Sequence[int]) -> float:
    return model.log2_prob(x)


def _row_entropies(rows: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(rows > 0, -rows * np.log2(rows), 0.0)
    return terms.sum(axis=1)


def entropy_rate(model: MarkovModel) -> float:
    """Bits per symbol; 0 for a deterministic cycle."""
    if model.is_deterministic_cycle:
        return 0.0
    pi = stationary_distribution(model)
    return float(pi @ _row_entropies(model.transitions))


def divergence_rate(p: MarkovModel, q: _ChainLaw) -> float:
    """D(p || q) in bits per symbol, weighted by the stationary law of p."""
    _check_same_shape(p, q)
    pi = p.stationary
    prow = p.transitions
    qrow = np.asarray(q.transitions)
    live = (pi > 0)[:, None] & (prow > 0)
    if np.any(live & (qrow <= 0)):
        return math.inf
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(live, prow * (np.log2(prow) - np.log2(qrow)), 0.0)
    return max(0.0, float(pi @ terms.sum(axis=1)))


def log_likelihood_ratio_path(p: _ChainLaw, q: _ChainLaw, x: np.ndarray) -> np.ndarray:
    """Cumulative log2(p(x_1^n) / q(x_1^n)) for n = 1..len(x)."""
    head_p, cond_p = p.window_log2_arrays(x[:p.order + 1])
    head_q, cond_q = q.window_log2_arrays(x[:q.order + 1])
    r = p.order
    n = len(x)
    out = np.empty(n)
    for w in range(1, min(r, n) + 1):
        out[w - 1] = head_p[0, w - 1] - head_q[0, w - 1]
    if n > r:
        ctx = context_codes(x, r, p.n_symbols)
        inc = p.log2_transitions[ctx, x[r:]] - q.log2_transitions[ctx, x[r:]]
        out[r:] = out[r - 1] + np.cumsum(inc)
    return out


@dataclass(frozen=True)
class BerkProbe:
    delta: float
    direction: str
    values: tuple
    trials: int

    @property
    def n_values(self):
        return [n for n, _ in self.values]

    @property
    def probabilities(self):
        return [v for _, v in self.values]

    def stderr(self, i: int) -> float:
        v = self.values[i][1]
        return math.sqrt(v * (1 - v) / self.trials)


def berk_probe(p: MarkovModel, q: MarkovModel, delta: float, n_values: Sequence[int],
               trials: int, seed: SeedLike = None, direction: str = "forward") -> BerkProbe:
    """Monte Carlo p_n(delta) (forward: paths from p, ratio p/q) or q_n(delta).

    For ``direction="reverse"`` paths come from q and the ratio is q/p.
    """
    if direction not in ("forward", "reverse"):
        raise ValueError("direction must be 'forward' or 'reverse'")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    src, ref = (p, q) if direction == "forward" else (q, p)
    d = divergence_rate(src, ref)
    if not d > 0 or delta >= d:
        raise InvalidDelta(f"delta={delta} must be below the divergence rate {d}")
    n_values = sorted(int(n) for n in n_values)
    if not n_values or n_values[0] < 1 or len(set(n_values)) != len(n_values):
        raise ValueError("n_values must be distinct positive integers")
    n_max = n_values[-1]
    paths = src.sample_many(trials, n_max, seed)
    idx = np.array(n_values) - 1
    hits = np.zeros(len(n_values))
    for row in paths:
        llr = log_likelihood_ratio_path(src, ref, row)[idx]
        hits += (llr / (idx + 1)) < delta
    values = tuple((n, float(h / trials)) for n, h in zip(n_values, hits))
    return BerkProbe(delta, direction, values, trials)


@dataclass(frozen=True)
class ConvergenceDiagnostic:
    """Last index n <= horizon with a deviation >= epsilon (None if none)."""

    epsilon: float
    last_exceedance: Optional[int]
    horizon: int


def last_exceedance(per_symbol: np.ndarray, epsilon: float) -> Optional[int]:
    hits = np.flatnonzero(np.abs(per_symbol) >= epsilon)
    return int(hits[-1] + 1) if hits.size else None


def k_epsilon_diagnostic(p: MarkovModel, q: MarkovModel, epsilon: float,
                         horizon: int, seed: SeedLike = None) -> ConvergenceDiagnostic:
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    d = divergence_rate(p, q)
    if math.isinf(d):
        raise SupportViolation("p is not absolutely continuous with respect to q")
    x = p.sample(horizon, seed)
    llr = log_likelihood_ratio_path(p, q, x)
    if not np.all(np.isfinite(llr)):
        raise SupportViolation("sampled path has zero probability under q")
    dev = llr / np.arange(1, horizon + 1) - d
    return ConvergenceDiagnostic(epsilon, last_exceedance(dev, epsilon), horizon)
