"""Martingale-type and conditional-Doob checks on binary coin trees.

The filtration is the uniform coin-flip tree: level h has 2^h nodes, each
with two equally likely children, so conditional expectations are exact
pairwise averages and every L^m norm is an exact finite sum over leaves.
That removes all Monte Carlo noise from the inequality checks; the only
limit is the 2^N enumeration (N <= 16).
"""

import numpy as np

MAX_DEPTH = 16


def _lp(x, p):
    """l^p norm along the last axis (p = inf gives the max)."""
    a = np.abs(x)
    if np.isinf(p):
        return a.max(axis=-1)
    return (a**p).sum(axis=-1) ** (1.0 / p)


def _lm_mean(vals, m):
    """L^m norm under the uniform probability on the given axis-0 atoms."""
    if np.isinf(m):
        return float(np.max(vals))
    return float(np.mean(vals**m) ** (1.0 / m))


def cond_expectation(values):
    """One level of conditional expectation: parent = mean of its children."""
    v = np.asarray(values, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    if v.shape[0] < 2 or v.shape[0] % 2:
        raise ValueError("need an even number of sibling nodes")
    return 0.5 * (v[0::2] + v[1::2])


class TreeMartingale:
    """Node values per level; levels[h] has shape (2^h, k).

    The martingale property (each parent equals the average of its two
    children) is validated exactly on construction.
    """

    def __init__(self, levels, p=2.0, check=True):
        levels = [np.atleast_2d(np.asarray(l, dtype=float)) for l in levels]
        depth = len(levels) - 1
        if depth < 0 or depth > MAX_DEPTH:
            raise ValueError(f"depth must be in [0, {MAX_DEPTH}] for enumeration")
        k = levels[0].shape[1]
        for h, arr in enumerate(levels):
            if arr.shape != (2**h, k):
                raise ValueError(f"level {h} must have shape ({2**h}, {k})")
        if check:
            for h in range(depth):
                parents = cond_expectation(levels[h + 1])
                if not np.allclose(parents, levels[h], atol=1e-12, rtol=0.0):
                    raise ValueError(f"martingale property fails at level {h}")
        self.levels = levels
        self.depth = depth
        self.k = k
        self.p = float(p)

    @classmethod
    def from_leaves(cls, leaves, p=2.0):
        """Close random leaf data into a martingale by averaging upward."""
        leaves = np.atleast_2d(np.asarray(leaves, dtype=float))
        n = leaves.shape[0]
        if n & (n - 1):
            raise ValueError("leaf count must be a power of two")
        levels = [leaves]
        while levels[0].shape[0] > 1:
            levels.insert(0, cond_expectation(levels[0]))
        return cls(levels, p=p, check=False)

    @property
    def leaves(self):
        return self.levels[-1]

    def increments(self):
        """df_h = f_h - f_{h-1} at level-h resolution, h = 1..depth."""
        out = []
        for h in range(1, self.depth + 1):
            out.append(self.levels[h] - np.repeat(self.levels[h - 1], 2, axis=0))
        return out

    def leaf_increments(self):
        """Increments broadcast to leaf resolution: (depth, 2^depth, k)."""
        n_leaves = 2**self.depth
        out = np.zeros((self.depth, n_leaves, self.k))
        for h, df in enumerate(self.increments(), start=1):
            out[h - 1] = np.repeat(df, n_leaves // df.shape[0], axis=0)
        return out


def type_ratio(mart, p_hat, m):
    """||f_N||_{L_m(V)} / ||(|f_0|^p_hat + sum |df_n|^p_hat)^(1/p_hat)||_{L_m},
    both sides exact over the 2^N leaves."""
    if not m > 1:
        raise ValueError("need m > 1")
    if not p_hat >= 1:
        raise ValueError("need p_hat >= 1")
    p = mart.p
    lhs = _lm_mean(_lp(mart.leaves, p), m)
    acc = np.full(2**mart.depth, _lp(mart.levels[0], p)[0] ** p_hat)
    for df in mart.leaf_increments():
        acc = acc + _lp(df, p) ** p_hat
    rhs = _lm_mean(acc ** (1.0 / p_hat), m)
    return lhs / rhs


def type_study(Ns, p, p_hat, m=2.0, generator="sign", k=None, seed=0):
    """type_ratio across depths with its log-log slope in N."""
    ratios = []
    for i, N in enumerate(Ns):
        if generator == "sign":
            mart = sign_martingale(N, p=p)
        elif generator == "random":
            mart = random_martingale(N, k or 4, seed + i, p=p)
        else:
            raise ValueError(f"unknown generator {generator!r}")
        ratios.append(type_ratio(mart, p_hat, m))
    slope = float(np.polyfit(np.log(Ns), np.log(ratios), 1)[0])
    return {"Ns": list(Ns), "ratios": ratios, "slope": slope}


# -- generators ---------------------------------------------------------------


def sign_martingale(N, p=2.0):
    """f_h = sum_{n<=h} eps_n e_n in l^p(R^N): the extremal sign walk."""
    levels = [np.zeros((1, N))]
    for h in range(1, N + 1):
        parent = np.repeat(levels[-1], 2, axis=0)
        parent[0::2, h - 1] = -1.0
        parent[1::2, h - 1] = 1.0
        levels.append(parent)
    return TreeMartingale(levels, p=p, check=False)


def random_martingale(N, k, seed, p=2.0):
    rng = np.random.default_rng(seed)
    return TreeMartingale.from_leaves(rng.standard_normal((2**N, k)), p=p)


# -- conditional Doob inequality ----------------------------------------------


def _leaf_expand(arr, n_leaves):
    return np.repeat(arr, n_leaves // arr.shape[0], axis=0)


def _validate_seq(ys):
    ys = [np.atleast_2d(np.asarray(y, dtype=float)) for y in ys]
    k = ys[0].shape[1]
    for i, y in enumerate(ys):
        if y.shape != (2**i, k):
            raise ValueError(f"y_{i} must be F_{i}-measurable: shape ({2**i}, {k})")
    if len(ys) - 1 > MAX_DEPTH:
        raise ValueError("sequence too deep for enumeration")
    return ys, len(ys) - 1, k


def _cond_block_lm(leaf_vals, g_level, m):
    """Conditional L_m over the 2^g atoms of the level-g sigma-algebra."""
    atoms = leaf_vals.reshape(2**g_level, -1)
    if np.isinf(m):
        return atoms.max(axis=1)
    return np.mean(atoms**m, axis=1) ** (1.0 / m)


def _doob_parts(ys, p_hat, m, n, g_level, p):
    ys, N, _ = _validate_seq(ys)
    if g_level < 0 or g_level > N:
        raise ValueError("g_level must be a tree level")
    n_leaves = 2**N
    leaf = [_leaf_expand(y, n_leaves) for y in ys]
    total = np.sum(leaf, axis=0)
    lhs = _lm_mean(_cond_block_lm(_lp(total, p), g_level, m), n)
    drift = 0.0
    for i in range(1, N + 1):
        pred = _leaf_expand(cond_expectation(ys[i]), n_leaves)
        drift += _lm_mean(_cond_block_lm(_lp(pred, p), g_level, m), n)
    incr = 0.0
    for y in leaf:
        incr += _lm_mean(_cond_block_lm(_lp(y, p), g_level, m), n) ** p_hat
    return lhs, drift, incr ** (1.0 / p_hat)


def doob_ineq_ratio(ys, p_hat, m, n, g_level, C, p=2.0):
    """LHS / (drift + 2 C increment-sum) for the conditional Doob bound;
    <= 1 means the trial constant C is sufficient for this sequence."""
    lhs, drift, incr = _doob_parts(ys, p_hat, m, n, g_level, p)
    return lhs / (drift + 2.0 * C * incr)


def doob_min_constant(ys, p_hat, m, n, g_level, p=2.0):
    """Smallest C with ratio <= 1; closed form since C enters linearly."""
    lhs, drift, incr = _doob_parts(ys, p_hat, m, n, g_level, p)
    if incr == 0.0:
        return 0.0 if lhs <= drift else np.inf
    return max(0.0, (lhs - drift) / (2.0 * incr))


def doob_split(ys):
    """Exact Doob decomposition at leaf resolution: (martingale diffs,
    predictable parts); their sums satisfy M + J = sum(ys) identically."""
    ys, N, _ = _validate_seq(ys)
    n_leaves = 2**N
    mart, pred = [], []
    for i, y in enumerate(ys):
        yl = _leaf_expand(y, n_leaves)
        if i == 0:
            mart.append(yl)
            pred.append(np.zeros_like(yl))
        else:
            e = _leaf_expand(cond_expectation(y), n_leaves)
            mart.append(yl - e)
            pred.append(e)
    return mart, pred


# -- sequence generators -------------------------------------------------------


def sign_sequence(N):
    """y_0 = 0, y_k = eps_k e_k in R^N: centered coordinate noise."""
    ys = [np.zeros((1, N))]
    for i in range(1, N + 1):
        arr = np.zeros((2**i, N))
        arr[0::2, i - 1] = -1.0
        arr[1::2, i - 1] = 1.0
        ys.append(arr)
    return ys


def drift_noise_sequence(N, k, seed, drift_scale=0.5):
    """Predictable drift plus exactly centered sibling noise."""
    rng = np.random.default_rng(seed)
    ys = [rng.standard_normal((1, k))]
    for i in range(1, N + 1):
        drift = drift_scale * rng.standard_normal((2 ** (i - 1), k))
        z = rng.standard_normal((2 ** (i - 1), k))
        arr = np.repeat(drift, 2, axis=0)
        arr[0::2] += z
        arr[1::2] -= z
        ys.append(arr)
    return ys


def random_sequence(N, k, seed):
    """General adapted sequence: independent values at every node."""
    rng = np.random.default_rng(seed)
    return [rng.standard_normal((2**i, k)) for i in range(N + 1)]
