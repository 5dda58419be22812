"""Power-law fitting and plausibility testing for cluster-size samples.

The estimator is the standard continuous maximum-likelihood recipe: for
every distinct sample value as a candidate lower cutoff, alpha comes from
the closed form 1 + n/sum(ln(x/x_min)) and the cutoff minimizing the
Kolmogorov-Smirnov distance between the empirical tail and the fitted
tail wins (ties to the smaller cutoff). Goodness of fit is the
semi-parametric bootstrap: below the cutoff resample the observed body,
above it draw from the fitted law, refit every replicate, and report the
fraction of replicates at least as far from their fit as the data were
from theirs. A p-value above 0.1 makes the power law plausible.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSample, EmptyInput, InvalidBootstrapCount, TooFewValues

PLAUSIBILITY_P = 0.1
MIN_SAMPLE = 10
_BLOCK = 64  # candidate rows processed per numpy block


@dataclass(frozen=True)
class PowerLawFit:
    x_min: float
    alpha: float
    ks_distance: float
    n_tail: int


@dataclass(frozen=True)
class GofResult:
    p_value: float
    n_bootstrap: int
    seed: int
    plausible: bool


def _scan_candidates(sorted_x: np.ndarray):
    """KS distance and alpha for every admissible candidate cutoff.

    Returns (candidate_indices, alphas, ks) where indices point into the
    ascending sorted sample. Candidates need a tail of >= 2 points with
    at least two distinct values.
    """
    n = sorted_x.size
    logs = np.log(sorted_x)
    suffix = np.cumsum(logs[::-1])[::-1]  # suffix[j] = sum(logs[j:])
    first_of_value = np.nonzero(np.r_[True, sorted_x[1:] != sorted_x[:-1]])[0]
    cand = first_of_value[first_of_value <= n - 2]
    m = (n - cand).astype(float)
    sumlog = suffix[cand] - m * logs[cand]
    ok = sumlog > 0  # requires two distinct tail values
    cand, m, sumlog = cand[ok], m[ok], sumlog[ok]
    alphas = 1.0 + m / sumlog
    ks = np.empty(cand.size)
    ranks = np.arange(n, dtype=float)
    for s in range(0, cand.size, _BLOCK):
        idx = cand[s:s + _BLOCK]
        a = alphas[s:s + _BLOCK]
        mm = m[s:s + _BLOCK, None]
        j0 = int(idx[0])  # candidates ascend, so columns before j0 never matter
        delta = logs[None, j0:] - logs[idx, None]
        np.maximum(delta, 0.0, out=delta)  # clamp sub-cutoff columns (masked below)
        delta *= (1.0 - a)[:, None]
        np.exp(delta, out=delta)
        model = 1.0 - delta  # fitted tail CDF at each sample point
        rel = ranks[None, j0:] - idx[:, None]
        dev = np.maximum(model - rel / mm, (rel + 1.0) / mm - model)
        dev[rel < 0.0] = -np.inf
        ks[s:s + _BLOCK] = dev.max(axis=1)
    return cand, alphas, ks


def _check_sample(x: np.ndarray) -> None:
    if x.size < MIN_SAMPLE:
        raise TooFewValues(f"need at least {MIN_SAMPLE} values, got {x.size}")
    if x[0] <= 0 or not np.all(np.isfinite(x)):
        raise DegenerateSample("sizes must be finite and > 0")
    if x[0] == x[-1]:
        raise DegenerateSample("all sizes equal")


def fit_power_law(sizes) -> PowerLawFit:
    """Fit (x_min, alpha) to a positive sample by MLE + KS minimization."""
    x = np.sort(np.asarray(sizes, dtype=float))
    _check_sample(x)
    cand, alphas, ks = _scan_candidates(x)
    if cand.size == 0:
        raise DegenerateSample("no admissible cutoff (too many ties)")
    best = int(np.argmin(ks))  # first minimum = smallest x_min on ties
    j = int(cand[best])
    return PowerLawFit(
        x_min=float(x[j]),
        alpha=float(alphas[best]),
        ks_distance=float(ks[best]),
        n_tail=int(x.size - j),
    )


def fit_power_law_at(sizes, x_min: float) -> PowerLawFit:
    """MLE alpha and KS distance at a caller-pinned cutoff.

    Used when the cutoff is known a priori (for example, data truncated at
    a known lower bound); no scan is performed.
    """
    x = np.sort(np.asarray(sizes, dtype=float))
    _check_sample(x)
    tail = x[x >= x_min]
    if tail.size < 2 or tail[0] == tail[-1]:
        raise DegenerateSample(f"tail above {x_min} is degenerate")
    logs = np.log(tail / x_min)
    sumlog = float(logs.sum())
    if sumlog <= 0:
        raise DegenerateSample(f"tail above {x_min} carries no log spread")
    m = tail.size
    alpha = 1.0 + m / sumlog
    model = 1.0 - np.exp((1.0 - alpha) * logs)
    ranks = np.arange(m, dtype=float)
    ks = float(np.maximum(model - ranks / m, (ranks + 1.0) / m - model).max())
    return PowerLawFit(x_min=float(x_min), alpha=float(alpha), ks_distance=ks, n_tail=int(m))


def _replicate_rng(seed: int, index: int) -> np.random.Generator:
    # counter-based substreams: adding replicates never reshuffles earlier ones
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, index))))


def goodness_of_fit(
    fit: PowerLawFit, sizes, n_bootstrap: int, seed: int, refit_x_min: bool = True
) -> GofResult:
    """Semi-parametric bootstrap p-value for a fitted power law.

    Replicates are refit the same way the observed fit was made: with the
    cutoff scan when ``refit_x_min`` is true (the default, matching
    fit_power_law) or at the pinned cutoff otherwise (matching
    fit_power_law_at).
    """
    if n_bootstrap < 100:
        raise InvalidBootstrapCount(f"n_bootstrap must be >= 100, got {n_bootstrap}")
    x = np.sort(np.asarray(sizes, dtype=float))
    if x.size == 0:
        raise EmptyInput("empty sample")
    body = x[x < fit.x_min]
    p_tail = fit.n_tail / x.size if body.size else 1.0
    n = x.size
    inv_exp = -1.0 / (fit.alpha - 1.0)
    exceed = 0
    for i in range(n_bootstrap):
        rng = _replicate_rng(seed, i)
        take_tail = rng.random(n) < p_tail
        k = int(take_tail.sum())
        sample = np.empty(n)
        if k:
            u = rng.random(k)
            sample[take_tail] = fit.x_min * (1.0 - u) ** inv_exp
        if k < n:
            picks = rng.integers(0, body.size, size=n - k)
            sample[~take_tail] = body[picks]
        if refit_x_min:
            rep = fit_power_law(sample)
        else:
            rep = fit_power_law_at(sample, fit.x_min)
        if rep.ks_distance >= fit.ks_distance:
            exceed += 1
    p = exceed / n_bootstrap
    return GofResult(p_value=p, n_bootstrap=n_bootstrap, seed=seed, plausible=p > PLAUSIBILITY_P)


def rank_size(sizes):
    """(rank, size) pairs, sizes descending, rank from 1, stable ties."""
    arr = np.asarray(list(sizes), dtype=float)
    if arr.size == 0:
        raise EmptyInput("empty sample")
    order = np.argsort(-arr, kind="stable")
    return [(int(r + 1), float(arr[i])) for r, i in enumerate(order)]


def write_rank_size_csv(pairs, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["rank", "size"])
        for rank, size in pairs:
            w.writerow([rank, repr(size)])


def fit_report(fit: PowerLawFit, gof: GofResult | None) -> dict:
    rep = {
        "x_min": fit.x_min,
        "alpha": fit.alpha,
        "ks": fit.ks_distance,
        "n_tail": fit.n_tail,
    }
    if gof is not None:
        rep.update(
            {"p_value": gof.p_value, "n_bootstrap": gof.n_bootstrap, "seed": gof.seed}
        )
    return rep


def write_fit_report(fit: PowerLawFit, gof: GofResult | None, path) -> None:
    with open(path, "w") as f:
        json.dump(fit_report(fit, gof), f, sort_keys=True, separators=(",", ":"))
        f.write("\n")


def rank_size_svg(pairs, path, title: str = "rank-size") -> None:
    """Minimal deterministic log-log scatter; no plotting dependency."""
    width, height, pad = 480, 360, 48
    xs = np.log10([r for r, _ in pairs])
    ys = np.log10([max(s, 1e-300) for _, s in pairs])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0

    def sx(v):
        return pad + (v - x0) / (x1 - x0) * (width - 2 * pad)

    def sy(v):
        return height - pad - (v - y0) / (y1 - y0) * (height - 2 * pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width // 2}" y="{height - 12}" font-size="12" text-anchor="middle">log10 rank</text>',
        f'<text x="14" y="{height // 2}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {height // 2})">log10 size</text>',
        f'<text x="{width // 2}" y="20" font-size="13" text-anchor="middle">{title}</text>',
    ]
    for vx, vy in zip(xs, ys):
        parts.append(f'<circle cx="{sx(vx):.2f}" cy="{sy(vy):.2f}" r="2" fill="steelblue"/>')
    parts.append("</svg>")
    with open(path, "w") as f:
        f.write("\n".join(parts))
        f.write("\n")
