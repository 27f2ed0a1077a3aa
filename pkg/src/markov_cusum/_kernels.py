"""Compiled inner loops. Everything here works on plain arrays.

Context encoding (Markov side): a block y_1..y_r maps to
sum(y_j * A**(r - j)), so the most recent symbol is the least significant
digit and appending ``a`` maps ``c`` to ``(c * A + a) % A**r``.

Context-tree encoding (CTW side): the node for the depth-d context whose
j-th most recent symbol is h_j has id ``offsets[d] + sum(h_j * A**(j-1))``.
Symbols before the start of a window are padded with 0.
"""
import math

import numpy as np
from numba import njit


@njit(cache=True)
def sample_chain(cum_init, cum_rows, order, n_symbols, u, out, start_ctx):
    n = out.shape[0]
    n_ctx = cum_rows.shape[0]
    i0 = 0
    if start_ctx < 0:
        c = np.searchsorted(cum_init, u[0], side="right")
        for j in range(min(order, n)):
            p = n_symbols ** (order - 1 - j)
            out[j] = (c // p) % n_symbols
        i0 = order
    else:
        c = start_ctx
    for i in range(i0, n):
        a = np.searchsorted(cum_rows[c], u[i], side="right")
        out[i] = a
        c = (c * n_symbols + a) % n_ctx
    return c


@njit(cache=True)
def sample_chains_batch(cum_init, cum_rows, order, n_symbols, u, out):
    for k in range(out.shape[0]):
        sample_chain(cum_init, cum_rows, order, n_symbols, u[k], out[k], -1)


@njit(cache=True)
def transition_counts(path, order, n_symbols, n_ctx):
    counts = np.zeros((n_ctx, n_symbols), np.int64)
    c = 0
    for j in range(min(order, path.shape[0])):
        c = c * n_symbols + path[j]
    for i in range(order, path.shape[0]):
        a = path[i]
        counts[c, a] += 1
        c = (c * n_symbols + a) % n_ctx
    return counts


@njit(cache=True, inline="always")
def _log2addexp2(x, y):
    if x > y:
        return x + math.log2(1.0 + 2.0 ** (y - x))
    return y + math.log2(1.0 + 2.0 ** (x - y))


@njit(cache=True)
def kt_tables(size, n_symbols):
    """log2(c + 1/2) and log2(t + A/2) for c, t < size."""
    num = np.empty(size)
    den = np.empty(size)
    half_a = 0.5 * n_symbols
    for i in range(size):
        num[i] = math.log2(i + 0.5)
        den[i] = math.log2(i + half_a)
    return num, den


@njit(cache=True)
def ctw_update(counts, totals, pe, pw, s, ctx_deep, a, n_symbols, depth,
               offsets, pow_a, log_num, log_den):
    """Fold symbol ``a`` into the tree of start ``s``; returns log2 P_w(root)."""
    for d in range(depth, -1, -1):
        cd = ctx_deep % pow_a[d]
        nid = offsets[d] + cd
        c = counts[s, nid, a]
        tot = totals[s, nid]
        pe[s, nid] += log_num[c] - log_den[tot]
        counts[s, nid, a] = c + 1
        totals[s, nid] = tot + 1
        if d == depth:
            pw[s, nid] = pe[s, nid]
        else:
            base = offsets[d + 1] + cd
            acc = 0.0
            for b in range(n_symbols):
                acc += pw[s, base + b * pow_a[d]]
            pw[s, nid] = _log2addexp2(pe[s, nid], acc) - 1.0
    return pw[s, 0]


@njit(cache=True)
def _window_context(path, t, s, depth, n_symbols):
    ctx = 0
    mult = 1
    for j in range(1, depth + 1):
        if t - j >= s:
            ctx += path[t - j] * mult
        mult *= n_symbols
    return ctx


@njit(cache=True)
def ctw_lengths(path, n_symbols, depth, offsets, pow_a):
    n = path.shape[0]
    n_nodes = offsets[depth + 1]
    counts = np.zeros((1, n_nodes, n_symbols), np.int64)
    totals = np.zeros((1, n_nodes), np.int64)
    pe = np.zeros((1, n_nodes))
    pw = np.zeros((1, n_nodes))
    out = np.empty(n)
    log_num, log_den = kt_tables(n + 1, n_symbols)
    for t in range(n):
        ctx = _window_context(path, t, 0, depth, n_symbols)
        out[t] = -ctw_update(counts, totals, pe, pw, 0, ctx, path[t],
                             n_symbols, depth, offsets, pow_a, log_num, log_den)
    return out


@njit(cache=True)
def _ceil_log2(j):
    k = 0
    while (1 << k) < j:
        k += 1
    return k


@njit(cache=True)
def lz78_lengths(path, n_symbols, symbol_bits):
    n = path.shape[0]
    child = np.full((n + 2, n_symbols), -1, np.int64)
    n_nodes = 1
    cur = 0
    completed = 0
    cost = 0
    out = np.empty(n)
    for i in range(n):
        a = path[i]
        nxt = child[cur, a]
        if nxt < 0:
            cost += _ceil_log2(completed + 1) + symbol_bits
            child[cur, a] = n_nodes
            n_nodes += 1
            completed += 1
            cur = 0
        else:
            cur = nxt
        if cur != 0:
            out[i] = cost + _ceil_log2(completed + 1)
        else:
            out[i] = cost
    return out


@njit(cache=True)
def ctw_multi_advance(path, t_end, n_symbols, depth, offsets, pow_a,
                      counts, totals, pe, pw, acc, stat, below,
                      active, meta, head_logp, cond_logp, order,
                      lam, window_penalty, threshold, prune_slack, prune_w,
                      trace_max, trace_arg, trace_active, log_num, log_den):
    """Advance every candidate start through ``path[meta[0]:t_end]``.

    ``meta`` holds (next time index, number of active starts). A new start is
    opened at every step. Returns the 0-based index of the first step whose
    max statistic reaches ``threshold``, or -1.
    """
    t = meta[0]
    n_active = meta[1]
    while t < t_end:
        active[n_active] = t
        n_active += 1
        a = path[t]
        glob_ctx = _window_context(path, t, 0, depth, n_symbols)
        best = -np.inf
        best_s = -1
        for i in range(n_active):
            s = active[i]
            if t - s >= depth:
                ctx = glob_ctx
            else:
                ctx = _window_context(path, t, s, depth, n_symbols)
            lw = ctw_update(counts, totals, pe, pw, s, ctx, a, n_symbols,
                            depth, offsets, pow_a, log_num, log_den)
            w = t - s + 1
            if w <= order:
                acc[s] = head_logp[s, w - 1]
            else:
                acc[s] += cond_logp[t]
            if window_penalty:
                pen = lam * w
            else:
                pen = lam * (t + 1)
            v = lw - acc[s] - pen
            stat[s] = v
            if v > best or best_s < 0:
                best = v
                best_s = s
        if prune_w > 0:
            j = 0
            for i in range(n_active):
                s = active[i]
                if stat[s] < best - prune_slack:
                    below[s] += 1
                else:
                    below[s] = 0
                if below[s] < prune_w or s == best_s or s == t:
                    active[j] = s
                    j += 1
            n_active = j
        trace_max[t] = best
        trace_arg[t] = best_s
        trace_active[t] = n_active
        t += 1
        if best >= threshold:
            meta[0] = t
            meta[1] = n_active
            return t - 1
    meta[0] = t
    meta[1] = n_active
    return -1
