"""Generic sewing engine: germs, Riemann sums, allocation, rate diagnostics.

A germ assigns a two-parameter value A_{s,t} with A_{s,s} = 0; sewing sums it
over control-adapted dyadic partitions and watches the Cauchy trace.  Values
only need +, - and scalar *, so floats, numpy arrays (including ensembles
with a leading path axis) and grid functions all work; norms are pluggable.
"""

import numpy as np

from . import controls as ctrl


class Germ:
    """Two-parameter family A_{s,t} = fn(ctx, s, t).

    norm maps a value to a float (or an array of per-path floats for
    ensemble contexts).  cond_mean, when present, evaluates E_s A_{s,t}
    exactly under the discrete path model and enables Doob-Meyer splits.
    """

    def __init__(self, name, fn, norm=None, cond_mean=None):
        self.name = name
        self.fn = fn
        self.norm = norm if norm is not None else default_norm
        self.cond_mean = cond_mean

    def __call__(self, ctx, s, t):
        return self.fn(ctx, s, t)


def default_norm(value):
    v = np.asarray(value)
    if v.ndim <= 1:
        return float(np.linalg.norm(np.atleast_1d(v)))
    # leading axis = ensemble paths, remaining axes = the vector value
    return np.sqrt((np.abs(v) ** 2).reshape(v.shape[0], -1).sum(axis=1))


def lp_norm_factory(p):
    def norm(value):
        v = np.atleast_1d(np.asarray(value, dtype=float))
        if p == np.inf:
            return float(np.abs(v).max())
        return float((np.abs(v) ** p).sum() ** (1.0 / p))

    return norm


def delta(germ, ctx, s, u, t):
    """Additivity defect A_{s,t} - A_{s,u} - A_{u,t}."""
    if not s <= u <= t:
        raise ValueError("need s <= u <= t")
    return germ(ctx, s, t) - germ(ctx, s, u) - germ(ctx, u, t)


def riemann_sum(germ, ctx, points):
    """Sum of A over adjacent pairs of the partition."""
    points = ctrl.validate_partition(points)
    if points.size < 2:
        return germ(ctx, points[0], points[0])
    total = germ(ctx, points[0], points[1])
    for i in range(1, points.size - 1):
        total = total + germ(ctx, points[i], points[i + 1])
    return total


class SewResult:
    def __init__(self, value, levels, mesh_w, value_norm, cauchy_diff, nondecaying):
        self.value = value
        self.levels = levels
        self.mesh_w = mesh_w
        self.value_norm = value_norm
        self.cauchy_diff = cauchy_diff
        self.nondecaying = nondecaying

    def trace_rows(self):
        rows = []
        for k, h in enumerate(self.levels):
            rows.append(
                {
                    "level": h,
                    "mesh_w": self.mesh_w[k],
                    "value_norm": self.value_norm[k],
                    "cauchy_diff": self.cauchy_diff[k - 1] if k else float("nan"),
                }
            )
        return rows


def sew(germ, ctx, control, s, t, levels, tol=ctrl.DEFAULT_MIDPOINT_TOL):
    """Riemann sums along nested w-dyadic partitions of [s,t].

    levels: iterable of dyadic levels, increasing.  Returns the finest-level
    value together with the mesh/norm/Cauchy trace; a trace whose increments
    stop decaying is flagged (nondecaying=True), not fatal.
    """
    levels = sorted(set(int(h) for h in levels))
    if not levels or levels[0] < 0:
        raise ValueError("levels must be nonnegative")
    tree = ctrl.build_dyadic_tree(control, s, t, levels[-1], tol=tol)
    values, mesh_w, norms = [], [], []
    for h in levels:
        pts = tree.levels[h]
        values.append(riemann_sum(germ, ctx, pts))
        mesh_w.append(tree.mesh_w(h))
        norms.append(_scalar(germ.norm(values[-1])))
    cauchy = [
        _scalar(germ.norm(values[k + 1] - values[k])) for k in range(len(values) - 1)
    ]
    nondecaying = False
    if len(cauchy) >= 2 and cauchy[0] > 0:
        nondecaying = cauchy[-1] >= cauchy[0]
    return SewResult(values[-1], levels, mesh_w, norms, cauchy, nondecaying)


def _scalar(x):
    x = np.asarray(x, dtype=float)
    return float(np.sqrt(np.mean(x**2))) if x.ndim else float(x)


class AllocationTerm:
    """One interaction term R^h_i of the dyadic allocation."""

    __slots__ = ("level", "index", "s1", "s2", "s3", "s4", "value")

    def __init__(self, level, index, s1, s2, s3, s4, value):
        self.level = level
        self.index = index
        self.s1 = s1
        self.s2 = s2
        self.s3 = s3
        self.s4 = s4
        self.value = value

    def __repr__(self):
        return (
            f"AllocationTerm(h={self.level}, i={self.index}, "
            f"pts=({self.s1}, {self.s2}, {self.s3}, {self.s4}))"
        )


def allocate(germ, ctx, points, control, tol=ctrl.DEFAULT_MIDPOINT_TOL, max_depth=64):
    """Distribute a partition's points over the w-dyadic tree of its span.

    Returns the list of nonzero interaction terms R^h_i; each is
    A_{s1,s2} + A_{s2,s3} + A_{s3,s4} - A_{s1,s4} for the extreme points
    s1 <= s2 of the left child bucket and s3 <= s4 of the right one, and the
    terms reproduce the splitting identity exactly:

        sum_i A_{t_i, t_{i+1}} - A_{t_0, t_N} = sum_{h,i} R^h_i.

    Buckets are P cap [d_i, d_{i+1}) except the rightmost bucket per level,
    which is closed.  Recursion stops when every bucket holds <= 1 point.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 1 or pts.size < 2:
        raise ValueError("need at least two partition points")
    if np.any(np.diff(pts) <= 0):
        raise ValueError("points must be strictly increasing")
    terms = []

    def visit(bucket, a, b, h, i):
        # bucket holds the points of P falling in this dyadic cell; interior
        # boundaries are half-open on the right by construction (a point at
        # an interior d goes to the cell starting at d), the global right
        # endpoint stays in the last cell.
        if bucket.size <= 1:
            return
        if h >= max_depth:
            raise RuntimeError("allocation exceeded max depth; degenerate control?")
        u = control.midpoint(a, b, tol=tol)
        if not a < u < b:
            u = 0.5 * (a + b)  # flat stretch: split by time to keep progressing
        left = bucket[bucket < u]
        right = bucket[bucket >= u]
        # two singleton halves telescope to zero identically; skip them
        if left.size and right.size and left.size + right.size > 2:
            s1, s2 = left[0], left[-1]
            s3, s4 = right[0], right[-1]
            val = None
            for x, y, sign in ((s1, s2, 1), (s2, s3, 1), (s3, s4, 1), (s1, s4, -1)):
                if x == y:
                    continue
                a_xy = germ(ctx, x, y)
                piece = a_xy if sign > 0 else -a_xy
                val = piece if val is None else val + piece
            if val is not None:
                terms.append(AllocationTerm(h, i, s1, s2, s3, s4, val))
        visit(left, a, u, h + 1, 2 * i)
        visit(right, u, b, h + 1, 2 * i + 1)

    visit(pts, pts[0], pts[-1], 0, 0)
    return terms


def allocation_levels_bound(points):
    """Crude depth bound: buckets are singletons once dyadic cells separate
    the closest pair, so levels beyond this contribute nothing."""
    pts = np.asarray(points, dtype=float)
    gap = np.min(np.diff(pts))
    span = pts[-1] - pts[0]
    return int(np.ceil(np.log2(max(span / gap, 2.0)))) + 2


def doob_meyer_sums(germ, ctx, points, cond_mean=None):
    """Split the Riemann sum into predictable and martingale parts.

    J = sum E_{t_i} A_{t_i,t_{i+1}};  M = sum (A - E_{t_i} A);
    M + J equals riemann_sum term by term.
    """
    oracle = cond_mean if cond_mean is not None else germ.cond_mean
    if oracle is None:
        raise ValueError("no conditional-mean oracle available for this germ")
    points = ctrl.validate_partition(points)
    if points.size < 2:
        z = germ(ctx, points[0], points[0])
        return z, z
    mart = None
    pred = None
    for i in range(points.size - 1):
        a = germ(ctx, points[i], points[i + 1])
        e = oracle(ctx, points[i], points[i + 1])
        m = a - e
        mart = m if mart is None else mart + m
        pred = e if pred is None else pred + e
    return mart, pred


class GermBounds:
    """Validated inputs of the a-priori rate: |E_s dA| <= g1 * w^(1+e1) and
    the centered part <= g2 * w^(1/p_hat + e2)."""

    def __init__(self, gamma1, gamma2, eps1, eps2, p_hat):
        if gamma1 < 0 or gamma2 < 0:
            raise ValueError("need nonnegative gamma1, gamma2")
        if eps1 <= 0 or eps2 <= 0:
            raise ValueError("need eps1, eps2 > 0")
        if not 1.0 < p_hat <= 2.0:
            raise ValueError("need p_hat in (1, 2]")
        self.gamma1 = gamma1
        self.gamma2 = gamma2
        self.eps1 = eps1
        self.eps2 = eps2
        self.p_hat = p_hat


def rate_bound(bounds, mesh_w, w_total, C=1.0):
    """Upper rate envelope C*(g1*mesh^e1*w + g2*mesh^e2*w^(1/p_hat)).

    C is caller-supplied: the source constant is non-explicit, so only
    empirical constants are ever reported against this shape.
    """
    if mesh_w < 0 or w_total < 0:
        raise ValueError("mesh and w must be nonnegative")
    drift = bounds.gamma1 * mesh_w**bounds.eps1 * w_total
    mart = bounds.gamma2 * mesh_w**bounds.eps2 * w_total ** (1.0 / bounds.p_hat)
    return C * (drift + mart)


class StudyResult:
    def __init__(self, levels, mesh_w, rms_error, slope, intercept, degenerate):
        self.levels = levels
        self.mesh_w = mesh_w
        self.rms_error = rms_error
        self.slope = slope
        self.intercept = intercept
        self.degenerate = degenerate


def convergence_study(germ, ctxs, control, reference, s, t, levels,
                      tol=ctrl.DEFAULT_MIDPOINT_TOL):
    """RMS error of Riemann sums against per-context references, with the
    log-log slope in the w-mesh.

    ctxs: list of contexts (each may itself be an ensemble whose norm
    returns per-path values).  reference: callable ctx -> exact value.
    Needs >= 3 levels; identically-zero errors are flagged degenerate and
    carry slope None.
    """
    levels = sorted(set(int(h) for h in levels))
    if len(levels) < 3:
        raise ValueError("need at least 3 levels for a slope")
    tree = ctrl.build_dyadic_tree(control, s, t, levels[-1], tol=tol)
    refs = [reference(ctx) for ctx in ctxs]
    mesh_w, rms = [], []
    scale = 0.0
    for ctx, ref in zip(ctxs, refs):
        scale = max(scale, float(np.max(np.atleast_1d(germ.norm(ref)))))
    for h in levels:
        pts = tree.levels[h]
        errs = []
        for ctx, ref in zip(ctxs, refs):
            diff = riemann_sum(germ, ctx, pts) - ref
            errs.append(np.atleast_1d(germ.norm(diff)))
        rms.append(float(np.sqrt(np.mean(np.concatenate(errs) ** 2))))
        mesh_w.append(tree.mesh_w(h))
    degenerate = all(r <= 1e-14 * max(scale, 1.0) for r in rms)
    if degenerate:
        return StudyResult(levels, mesh_w, rms, None, None, True)
    slope, intercept = np.polyfit(np.log(mesh_w), np.log(rms), 1)
    return StudyResult(levels, mesh_w, rms, float(slope), float(intercept), False)


def uniqueness_probe(remainder, ctxs, control, s, t, levels, norm=None,
                     tol=ctrl.DEFAULT_MIDPOINT_TOL):
    """Riemann sums of a small two-parameter remainder along the dyadic
    schedule; returns per-level RMS norms and whether they decay to zero,
    which is the uniqueness test for candidate sewn limits."""
    levels = sorted(set(int(h) for h in levels))
    norm = norm if norm is not None else default_norm
    tree = ctrl.build_dyadic_tree(control, s, t, levels[-1], tol=tol)
    g = Germ("remainder", remainder, norm=norm)
    out = []
    for h in levels:
        pts = tree.levels[h]
        vals = [np.atleast_1d(norm(riemann_sum(g, ctx, pts))) for ctx in ctxs]
        out.append(float(np.sqrt(np.mean(np.concatenate(vals) ** 2))))
    decays = out[-1] < 0.5 * max(out[0], 1e-300) or out[-1] < 1e-14
    return {"levels": levels, "rms": out, "decays": decays}


# -- built-in germs ---------------------------------------------------------


def young_germ(f, g):
    """A_{s,t} = f(s) * (g(t) - g(s)) for deterministic paths f, g."""
    return Germ("young", lambda ctx, s, t: f(s) * (g(t) - g(s)))


def zero_germ():
    return Germ("zero", lambda ctx, s, t: 0.0)


def ito_germ():
    """A_{s,t} = B_s (B_t - B_s); exact predictable part via the path model."""

    def fn(p, s, t):
        bs = p.b(s)
        return bs * (p.b(t) - bs)

    def cm(p, s, t):
        bs = p.b(s)
        return bs * (p.cond_mean(s, t) - bs)

    return Germ("ito", fn, cond_mean=cm)


def fbm_square_germ():
    """A_{s,t} = B_t^2 - B_s^2 with the exact discrete-model oracle
    E_s A = (E_s B_t)^2 + Var_s(B_t) - B_s^2."""

    def fn(p, s, t):
        return p.b(t) ** 2 - p.b(s) ** 2

    def cm(p, s, t):
        cmu = p.cond_mean(s, t)
        return cmu**2 + p.model.rho_discrete(s, t) - p.b(s) ** 2

    return Germ("fbm_square", fn, cond_mean=cm)


def increment_germ():
    def fn(p, s, t):
        return p.b(t) - p.b(s)

    def cm(p, s, t):
        return p.cond_mean(s, t) - p.b(s)

    return Germ("increment", fn, cond_mean=cm)


def table_germ(points, table):
    """Germ from tabulated values A[i,j] over the given points (diag 0)."""
    points = np.asarray(points, dtype=float)
    table = np.asarray(table)
    index = {float(t): i for i, t in enumerate(points)}

    def fn(ctx, s, t):
        i, j = index[float(s)], index[float(t)]
        return table[i, j]

    return Germ("table", fn)
