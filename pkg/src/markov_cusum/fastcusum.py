"""Compiled max-over-start CUSUM for the CTW codec.

Same statistic as ``detectors.UniversalCusum`` with a CTW codec, but every
start's context tree lives in preallocated arrays and the per-step loop is
compiled. Engines can be copied mid-stream, which is how conditional
(prefix, continuation) runs share a pre-change history.
"""
from __future__ import annotations

import math
from typing import Optional

import numpy as np

from . import _kernels
from .codes import tree_layout
from .detectors import StoppingResult, Trace
from .markov_core import _ChainLaw


class CtwCusumEngine:
    def __init__(self, pre_law: _ChainLaw, depth: int, lam: float, capacity: int,
                 window_penalty: bool = False, prune: Optional[tuple] = None):
        self.pre_law = pre_law
        self.n_symbols = pre_law.n_symbols
        self.depth = int(depth)
        self.lam = float(lam)
        self.window_penalty = bool(window_penalty)
        self.prune = prune
        self.capacity = int(capacity)
        self.offsets, self.pow_a = tree_layout(self.n_symbols, self.depth)
        n_nodes = int(self.offsets[-1])
        cap = self.capacity
        self.path = np.zeros(cap, dtype=np.int64)
        self.counts = np.zeros((cap, n_nodes, self.n_symbols), dtype=np.int64)
        self.totals = np.zeros((cap, n_nodes), dtype=np.int64)
        self.pe = np.zeros((cap, n_nodes))
        self.pw = np.zeros((cap, n_nodes))
        self.acc = np.zeros(cap)
        self.stat = np.full(cap, -np.inf)
        self.below = np.zeros(cap, dtype=np.int64)
        self.active = np.zeros(cap, dtype=np.int64)
        self.meta = np.zeros(2, dtype=np.int64)
        self.head = np.full((cap, pre_law.order), np.nan)
        self.cond = np.full(cap, np.nan)
        self.trace_max = np.full(cap, np.nan)
        self.trace_arg = np.zeros(cap, dtype=np.int64)
        self.trace_active = np.zeros(cap, dtype=np.int64)
        self.log_num, self.log_den = _kernels.kt_tables(cap + 1, self.n_symbols)
        self.stop_index = -1

    @property
    def n(self) -> int:
        return int(self.meta[0])

    def copy(self) -> "CtwCusumEngine":
        other = object.__new__(CtwCusumEngine)
        for k, v in self.__dict__.items():
            shared = k in ("log_num", "log_den", "offsets", "pow_a")
            other.__dict__[k] = v.copy() if isinstance(v, np.ndarray) and not shared else v
        return other

    def _score_new(self, t0: int, t1: int):
        r = self.pre_law.order
        lo = max(0, t0 - r)
        head, cond = self.pre_law.window_log2_arrays(self.path[lo:t1])
        filled = ~np.isnan(head)
        self.head[lo:t1][filled] = head[filled]
        self.cond[max(t0, r):t1] = cond[max(t0, r) - lo:]

    def advance(self, segment, log2_threshold: float = math.inf) -> Optional[int]:
        """Feed ``segment``; stop early once the max statistic reaches the
        threshold. Returns the 1-based stop time or None."""
        segment = np.asarray(segment, dtype=np.int64)
        t0 = self.n
        t1 = t0 + segment.shape[0]
        if t1 > self.capacity:
            raise ValueError("engine capacity exceeded")
        self.path[t0:t1] = segment
        self._score_new(t0, t1)
        slack, w = self.prune if self.prune is not None else (0.0, 0)
        stop = _kernels.ctw_multi_advance(
            self.path, t1, self.n_symbols, self.depth, self.offsets, self.pow_a,
            self.counts, self.totals, self.pe, self.pw, self.acc, self.stat,
            self.below, self.active, self.meta, self.head, self.cond,
            self.pre_law.order, self.lam, self.window_penalty, float(log2_threshold),
            float(slack), int(w), self.trace_max, self.trace_arg, self.trace_active,
            self.log_num, self.log_den)
        if stop >= 0:
            self.stop_index = stop
            return stop + 1
        return None

    def max_trace(self) -> np.ndarray:
        return self.trace_max[:self.n]

    def result(self, log2_threshold: float, horizon: Optional[int] = None,
               with_trace: bool = False) -> StoppingResult:
        n = self.n if horizon is None else min(horizon, self.n)
        tm = self.trace_max[:n]
        hits = np.flatnonzero(tm >= log2_threshold)
        rec = None
        if with_trace:
            rec = Trace(list(tm), list(self.trace_arg[:n] + 1), list(self.trace_active[:n]))
        if hits.size:
            i = int(hits[0])
            return StoppingResult(True, i + 1, n, float(tm[i]), int(self.trace_arg[i] + 1),
                                  log2_threshold, bool(np.isposinf(tm[i])), rec)
        last = float(tm[-1]) if n else -math.inf
        arg = int(self.trace_arg[n - 1] + 1) if n else 0
        return StoppingResult(False, None, n, last, arg, log2_threshold, False, rec)


def run_ctw_cusum(pre_law: _ChainLaw, depth: int, lam: float, path, log2_threshold: float,
                  horizon: Optional[int] = None, window_penalty: bool = False,
                  prune: Optional[tuple] = None, trace: bool = False) -> StoppingResult:
    path = np.asarray(path, dtype=np.int64)
    horizon = len(path) if horizon is None else min(horizon, len(path))
    eng = CtwCusumEngine(pre_law, depth, lam, max(horizon, 1), window_penalty, prune)
    eng.advance(path[:horizon], log2_threshold)
    res = eng.result(log2_threshold, with_trace=trace)
    res.horizon = horizon
    return res


def crossing_times(running: np.ndarray, thresholds) -> list:
    """First 1-based index where ``running`` reaches each threshold (None if never)."""
    cm = np.maximum.accumulate(running) if running.size else running
    out = []
    for thr in thresholds:
        i = int(np.searchsorted(cm, thr, side="left"))
        out.append(i + 1 if i < cm.size else None)
    return out
