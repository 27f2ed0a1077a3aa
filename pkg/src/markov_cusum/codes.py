"""Length-only universal codes: Context Tree Weighting and LZ78.

No bitstream is ever produced; each codec tracks L(x_1^n) under a fixed
accounting and extends it one symbol at a time.

CTW: KT estimator (count + 1/2) / (total + A/2) at every node, weighting
1/2 local + 1/2 product of children, symbols before the start of the input
padded with 0. Lengths are the ideal -log2 of the weighted probability.

LZ78: phrase j costs ceil(log2 j) index bits plus ceil(log2 A) bits for the
new symbol; an unfinished last phrase costs its index bits only.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .errors import BadParams, TooLarge
from .markov_core import MarkovModel, SeedLike, as_generator, last_exceedance, ConvergenceDiagnostic

KRAFT_LIMIT = 10 ** 7


def _log2addexp2(x: float, y: float) -> float:
    if x > y:
        return x + math.log2(1.0 + 2.0 ** (y - x))
    return y + math.log2(1.0 + 2.0 ** (x - y))


def tree_layout(n_symbols: int, depth: int):
    pow_a = np.array([n_symbols ** d for d in range(depth + 1)], dtype=np.int64)
    offsets = np.zeros(depth + 2, dtype=np.int64)
    offsets[1:] = np.cumsum(pow_a)
    return offsets, pow_a


class CTW:
    """Context Tree Weighting code of a given depth over ``n_symbols``."""

    kind = "ctw"

    def __init__(self, n_symbols: int = 2, depth: int = 1):
        if n_symbols < 2 or depth < 0 or int(depth) != depth:
            raise BadParams(f"CTW needs n_symbols >= 2 and integer depth >= 0, "
                            f"got {n_symbols}, {depth}")
        self.n_symbols = n_symbols
        self.depth = int(depth)
        offsets, pow_a = tree_layout(n_symbols, self.depth)
        self._offsets = offsets.tolist()
        self._pow = pow_a.tolist()
        n_nodes = self._offsets[-1]
        self._counts = [[0] * n_symbols for _ in range(n_nodes)]
        self._totals = [0] * n_nodes
        self._pe = [0.0] * n_nodes
        self._pw = [0.0] * n_nodes
        self._history = [0] * self.depth  # most recent first
        self.n = 0
        self.length = 0.0

    def extend(self, a: int) -> float:
        a = int(a)
        if not 0 <= a < self.n_symbols:
            raise ValueError(f"symbol {a} outside alphabet")
        A, D = self.n_symbols, self.depth
        offsets, pw_, pe_ = self._offsets, self._pw, self._pe
        ctx_deep = 0
        mult = 1
        for h in self._history:
            ctx_deep += h * mult
            mult *= A
        half_a = 0.5 * A
        for d in range(D, -1, -1):
            cd = ctx_deep % self._pow[d]
            nid = offsets[d] + cd
            cnt = self._counts[nid]
            tot = self._totals[nid]
            pe_[nid] += math.log2(cnt[a] + 0.5) - math.log2(tot + half_a)
            cnt[a] += 1
            self._totals[nid] = tot + 1
            if d == D:
                pw_[nid] = pe_[nid]
            else:
                base = offsets[d + 1] + cd
                step = self._pow[d]
                acc = 0.0
                for b in range(A):
                    acc += pw_[base + b * step]
                pw_[nid] = _log2addexp2(pe_[nid], acc) - 1.0
        if D:
            self._history.insert(0, a)
            self._history.pop()
        self.n += 1
        self.length = -pw_[0]
        return self.length

    def copy(self) -> "CTW":
        # O(tree size)
        other = object.__new__(CTW)
        other.n_symbols = self.n_symbols
        other.depth = self.depth
        other._offsets = self._offsets
        other._pow = self._pow
        other._counts = [list(c) for c in self._counts]
        other._totals = list(self._totals)
        other._pe = list(self._pe)
        other._pw = list(self._pw)
        other._history = list(self._history)
        other.n = self.n
        other.length = self.length
        return other


class LZ78:
    """LZ78 incremental parse with integer code lengths."""

    kind = "lz78"

    def __init__(self, n_symbols: int = 2):
        if n_symbols < 2:
            raise BadParams(f"LZ78 needs n_symbols >= 2, got {n_symbols}")
        self.n_symbols = n_symbols
        self.symbol_bits = (n_symbols - 1).bit_length()
        self._trie: list = [{}]
        self._node = 0
        self._completed = 0
        self._cost = 0
        self.n = 0
        self.length = 0

    def extend(self, a: int) -> int:
        a = int(a)
        if not 0 <= a < self.n_symbols:
            raise ValueError(f"symbol {a} outside alphabet")
        nxt = self._trie[self._node].get(a)
        if nxt is None:
            self._cost += self._completed.bit_length() + self.symbol_bits
            self._trie[self._node][a] = len(self._trie)
            self._trie.append({})
            self._completed += 1
            self._node = 0
        else:
            self._node = nxt
        self.n += 1
        pending = self._completed.bit_length() if self._node else 0
        self.length = self._cost + pending
        return self.length

    @property
    def phrases(self) -> int:
        return self._completed + (1 if self._node else 0)

    def copy(self) -> "LZ78":
        # O(dictionary size)
        other = object.__new__(LZ78)
        other.n_symbols = self.n_symbols
        other.symbol_bits = self.symbol_bits
        other._trie = [dict(t) for t in self._trie]
        other._node = self._node
        other._completed = self._completed
        other._cost = self._cost
        other.n = self.n
        other.length = self.length
        return other


@dataclass(frozen=True)
class CodecSpec:
    kind: str = "ctw"
    n_symbols: int = 2
    depth: int = 1

    def new(self):
        return new_codec(self.kind, self.n_symbols, depth=self.depth)


def new_codec(kind: str, n_symbols: int = 2, depth: Optional[int] = None):
    if kind == "ctw":
        return CTW(n_symbols, 1 if depth is None else depth)
    if kind == "lz78":
        return LZ78(n_symbols)
    raise BadParams(f"unknown codec kind {kind!r}")


def code_length(kind: str, x: Sequence[int], n_symbols: int = 2,
                depth: Optional[int] = None) -> float:
    codec = new_codec(kind, n_symbols, depth)
    for a in x:
        codec.extend(a)
    return codec.length


def code_lengths(kind: str, x: np.ndarray, n_symbols: int = 2,
                 depth: Optional[int] = None) -> np.ndarray:
    """L(x_1^n) for every n, via the compiled kernels."""
    x = np.ascontiguousarray(x, dtype=np.int64)
    if kind == "ctw":
        depth = 1 if depth is None else depth
        if depth < 0:
            raise BadParams("CTW depth must be >= 0")
        offsets, pow_a = tree_layout(n_symbols, depth)
        return _kernels.ctw_lengths(x, n_symbols, depth, offsets, pow_a)
    if kind == "lz78":
        return _kernels.lz78_lengths(x, n_symbols, (n_symbols - 1).bit_length())
    raise BadParams(f"unknown codec kind {kind!r}")


def kraft_check(kind: str, n: int, n_symbols: int = 2, depth: Optional[int] = None) -> float:
    """Exhaustive sum of 2^-L over all sequences of length n."""
    if n_symbols ** n > KRAFT_LIMIT:
        raise TooLarge(f"{n_symbols}^{n} sequences exceed the enumeration limit")
    terms = []

    def walk(codec, remaining):
        if remaining == 0:
            terms.append(2.0 ** -codec.length)
            return
        for a in range(n_symbols):
            child = codec.copy()
            child.extend(a)
            walk(child, remaining - 1)

    walk(new_codec(kind, n_symbols, depth), n)
    return math.fsum(terms)


def all_sequences(n: int, n_symbols: int = 2):
    return itertools.product(range(n_symbols), repeat=n)


@dataclass(frozen=True)
class RedundancyProfile:
    n_values: tuple
    per_symbol_redundancy: tuple
    j_epsilon: ConvergenceDiagnostic


def redundancy_profile(kind: str, model: MarkovModel, n_values: Sequence[int],
                       epsilon: float, seed: SeedLike = None,
                       depth: Optional[int] = None) -> RedundancyProfile:
    """Per-symbol redundancy (L + log2 mu)/n on one model path, plus the last
    n where its magnitude reaches epsilon."""
    n_values = [int(n) for n in n_values]
    if any(b <= a for a, b in zip(n_values, n_values[1:])) or n_values[0] < 1:
        raise ValueError("n_values must be increasing positive integers")
    horizon = n_values[-1]
    x = model.sample(horizon, as_generator(seed))
    lengths = code_lengths(kind, x, model.n_symbols, depth)
    head, cond = model.window_log2_arrays(x)
    logp = np.empty(horizon)
    r = model.order
    for w in range(1, min(r, horizon) + 1):
        logp[w - 1] = head[0, w - 1]
    if horizon > r:
        logp[r:] = logp[r - 1] + np.cumsum(cond[r:])
    red = (lengths + logp) / np.arange(1, horizon + 1)
    picked = tuple(float(red[n - 1]) for n in n_values)
    diag = ConvergenceDiagnostic(epsilon, last_exceedance(red, epsilon), horizon)
    return RedundancyProfile(tuple(n_values), picked, diag)
