"""Straight-line reference implementations used only by the tests.

Each one is written independently of the package code paths it checks:
plain Python loops, sorting, brute-force enumeration.
"""
from __future__ import annotations

import math
import statistics


def naive_rolling_mean(xs, window, min_obs):
    out = []
    for t in range(len(xs)):
        win = [v for v in xs[max(0, t - window + 1): t + 1] if not math.isnan(v)]
        out.append(sum(win) / len(win) if len(win) >= min_obs else math.nan)
    return out


def naive_zscore(xs, window, min_obs):
    """window=None means every observation up to t."""
    out = []
    for t in range(len(xs)):
        lo = 0 if window is None else max(0, t - window + 1)
        win = [v for v in xs[lo: t + 1] if not math.isnan(v)]
        if len(win) < min_obs or math.isnan(xs[t]):
            out.append(math.nan)
            continue
        if max(win) == min(win):
            out.append(0.0)
            continue
        m = statistics.fmean(win)
        sd = statistics.stdev(win)
        out.append((xs[t] - m) / sd)
    return out


def order_stat_percentile(xs, q):
    s = sorted(xs)
    h = (len(s) - 1) * q
    lo = int(math.floor(h))
    hi = min(lo + 1, len(s) - 1)
    return s[lo] + (h - lo) * (s[hi] - s[lo])


def naive_backtest(weights, returns, b, initial=None, charge_entry=True):
    """weights/returns: lists of per-date lists.  Returns the value path incl. S_0."""
    k = len(weights[0])
    prev = list(initial) if initial is not None else [0.0] * k
    s = 1.0
    path = [s]
    for t, (w, r) in enumerate(zip(weights, returns)):
        gross = 0.0
        for i in range(k):
            gross += prev[i] * r[i]
        change = 0.0
        for i in range(k):
            change += abs(w[i] - prev[i])
        if t == 0 and not charge_entry:
            change = 0.0
        s = s * (1.0 + gross - b * change)
        path.append(s)
        prev = list(w)
    return path


def all_pairs_max_drawdown(values):
    best = 0.0
    for i in range(len(values)):
        for j in range(i, len(values)):
            best = max(best, 1.0 - values[j] / values[i])
    return best


def two_pass_std(xs):
    m = sum(xs) / len(xs)
    return math.sqrt(sum((x - m) ** 2 for x in xs) / (len(xs) - 1))


def erf_cdf(x):
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def staged_news_signal(counts, agg, smooth, z_min_obs, threshold=0.0):
    """counts: list of (n_pos, n_neg, n_neutral).  Expanding z-score."""
    score = [float(p - n) for p, n, _ in counts]
    a = naive_rolling_mean(score, agg, agg)
    z = naive_zscore(a, None, z_min_obs)
    sm = naive_rolling_mean(z, smooth, smooth)
    sig = [math.nan if math.isnan(v) else (1.0 if v > threshold else 0.0) for v in sm]
    return {"score": score, "agg": a, "z": z, "smooth": sm, "signal": sig}


def staged_stress(factor_values, categories, window, min_obs):
    """factor_values: {fid: list}; categories: {fid: cat}.  Returns (z, cat_means, grand, index)."""
    z = {f: naive_zscore(v, window, min_obs) for f, v in factor_values.items()}
    n = len(next(iter(factor_values.values())))
    cats = sorted(set(categories.values()))
    cat_means = {}
    for c in cats:
        members = [f for f in factor_values if categories[f] == c]
        col = []
        for t in range(n):
            vals = [z[f][t] for f in members if not math.isnan(z[f][t])]
            col.append(sum(vals) / len(vals) if vals else math.nan)
        cat_means[c] = col
    grand, index = [], []
    for t in range(n):
        vals = [cat_means[c][t] for c in cats]
        if any(math.isnan(v) for v in vals):
            grand.append(math.nan)
            index.append(math.nan)
        else:
            g = sum(vals) / len(vals)
            grand.append(g)
            index.append(erf_cdf(g))
    return z, cat_means, grand, index
