"""Continuity-criterion modulus statistics over control-adapted dyadic pairs.

M_beta = sup |dA_{s,t}| / w(s,t)^beta, the sup running over the chaining
pair family: for each level h, same-level dyadic point pairs with
w(s,t) <= 2^(1-h) (the control is normalized to w(s,t_end) = 1, so the
statistic is scale-free in w).  Cost is O(h 2^h) pairs, not all-pairs.
"""

import numpy as np

from . import controls as ctrl


def _pair_family(tree, control, h_max, slack=1e-9):
    """Per level h: finest-grid index pairs (i, j) and normalized w values."""
    pts_fine = tree.levels[-1]
    a, b = pts_fine[0], pts_fine[-1]
    total = control.eval(a, b)
    if total <= 0:
        raise ValueError("control vanishes on the whole interval")
    # strictly-increasing hypothesis: w positive on every finest cell
    for i in range(pts_fine.size - 1):
        if control.eval(pts_fine[i], pts_fine[i + 1]) <= 0.0:
            raise ValueError(
                "control is not strictly increasing on the sampled grid"
            )
    fam = []
    for h in range(h_max + 1):
        pts = tree.levels[h]
        stride = 2 ** (tree.depth - h)
        cap = 2.0 ** (1 - h) * (1.0 + slack)
        ii, jj, ww = [], [], []
        for ia in range(pts.size - 1):
            for ib in range(ia + 1, pts.size):
                w = control.eval(pts[ia], pts[ib]) / total
                if w > cap:
                    break
                ii.append(ia * stride)
                jj.append(ib * stride)
                ww.append(w)
        fam.append((np.array(ii, dtype=np.int64), np.array(jj, dtype=np.int64),
                    np.array(ww)))
    return fam


def _level_maxima(tree, values, control, betas, h_max):
    """Running per-path maxima of |dA|/w^beta after each level.

    values: (P, n_pts) or (P, n_pts, k); returns (n_levels+1, B, P).
    """
    v = np.asarray(values, dtype=float)
    if v.ndim == 2:
        v = v[:, :, None]
    n_pts = tree.levels[-1].size
    if v.shape[1] != n_pts:
        raise ValueError(f"values must be sampled at the {n_pts} finest points")
    betas = np.asarray(betas, dtype=float)
    fam = _pair_family(tree, control, h_max)
    out = np.zeros((h_max + 1, betas.size, v.shape[0]))
    running = np.zeros((betas.size, v.shape[0]))
    for h, (ii, jj, ww) in enumerate(fam):
        if ii.size:
            num = np.sqrt(((v[:, jj] - v[:, ii]) ** 2).sum(axis=-1))  # (P, pairs)
            for ib, beta in enumerate(betas):
                cand = (num / ww**beta).max(axis=1)
                running[ib] = np.maximum(running[ib], cand)
        out[h] = running
    return out


def modulus_statistic(tree, values, control, beta, h_max=None):
    """M_beta for a single path sampled at the tree's finest points."""
    h_max = tree.depth if h_max is None else int(h_max)
    if h_max > tree.depth:
        raise ValueError("h_max exceeds the sampled tree depth")
    v = np.asarray(values, dtype=float)
    v = v[None, :] if v.ndim == 1 else v[None, :, :]
    return float(_level_maxima(tree, v, control, [beta], h_max)[-1, 0, 0])


class ModulusReport:
    """Per-beta, per-level modulus statistics of an ensemble."""

    def __init__(self, betas, levels, m, per_path, lm_norms, quantiles, means):
        self.betas = list(betas)
        self.levels = list(levels)
        self.m = m
        self.per_path = per_path      # (B, P) at the deepest level
        self.lm_norms = lm_norms      # (B, n_levels)
        self.quantiles = quantiles    # (B, n_levels, 3): 25/50/75%
        self.means = means            # (B, n_levels)
        self.trend_slopes = np.array(
            [np.polyfit(self.levels, np.log2(r), 1)[0] for r in lm_norms]
        )

    def rows(self):
        out = []
        for ib, beta in enumerate(self.betas):
            for il, h in enumerate(self.levels):
                q25, q50, q75 = self.quantiles[ib, il]
                out.append({
                    "beta": beta, "level": h, "q25": q25, "median": q50,
                    "q75": q75, "mean": self.means[ib, il],
                    "lm_norm": self.lm_norms[ib, il],
                })
        return out


def tail_study(tree, values, control, betas, levels, m=8.0):
    """Empirical L^m norms of M_beta across refinement levels.

    values: (P, n_pts[, k]) ensemble sampled at the finest tree points;
    levels: h_max list (ascending).  Stability of the norm across levels
    estimates whether beta sits below the criterion threshold.
    """
    levels = sorted(int(h) for h in levels)
    if len(values) < 1:
        raise ValueError("need at least one path")
    maxima = _level_maxima(tree, values, control, betas, levels[-1])
    lm = np.zeros((len(betas), len(levels)))
    qs = np.zeros((len(betas), len(levels), 3))
    means = np.zeros((len(betas), len(levels)))
    for il, h in enumerate(levels):
        snap = maxima[h]  # (B, P)
        if np.isinf(m):
            lm[:, il] = snap.max(axis=1)
        else:
            lm[:, il] = (snap**m).mean(axis=1) ** (1.0 / m)
        qs[:, il] = np.quantile(snap, [0.25, 0.5, 0.75], axis=1).T
        means[:, il] = snap.mean(axis=1)
    return ModulusReport(betas, levels, m, maxima[levels[-1]], lm, qs, means)


def sample_on_tree(control, s, t, depth, tol=ctrl.DEFAULT_MIDPOINT_TOL):
    """Convenience: the dyadic tree whose finest points carry the samples."""
    return ctrl.build_dyadic_tree(control, s, t, depth, tol=tol)
