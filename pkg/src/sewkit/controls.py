"""Controls and control-adapted dyadic partitions.

A control w(s,t) is continuous, nonnegative, vanishes on the diagonal and is
superadditive: w(s,u) + w(u,t) <= w(s,t) for s <= u <= t.  Partition points
are refined at w-midpoints, so that the dyadic points of level h satisfy
w(d_i, d_{i+1}) <= 2^{-h} w(s,t), which is what every rate statement in the
sewing engine is phrased against.
"""

import math

import numpy as np

DEFAULT_MIDPOINT_TOL = 1e-12


class Control:
    """Base class; subclasses implement eval(s, t) on their domain."""

    kind = "abstract"

    def eval(self, s, t):
        raise NotImplementedError

    def __call__(self, s, t):
        return self.eval(s, t)

    def midpoint(self, s, t, tol=DEFAULT_MIDPOINT_TOL):
        """Leftmost u in [s,t] with w(s,u) >= w(s,t)/2, found by bisection.

        Resolved to within tol*(t-s) in time.  Subclasses with a closed form
        override this.  On an exact flat (w(s,t) == 0) the arithmetic
        midpoint is returned so that refinement always makes progress.
        """
        if not t > s:
            raise ValueError("midpoint requires s < t")
        total = self.eval(s, t)
        if total <= 0.0:
            return 0.5 * (s + t)
        target = 0.5 * total
        lo, hi = s, t
        # ulp floor: below float spacing the bracket cannot shrink further
        tol_t = max(tol * (t - s), 4.0 * np.spacing(max(abs(s), abs(t), 1e-12)))
        for _ in range(128):
            if hi - lo <= tol_t:
                break
            mid = 0.5 * (lo + hi)
            if self.eval(s, mid) >= target:
                hi = mid
            else:
                lo = mid
        return hi

    def to_dict(self):
        raise NotImplementedError


class LinearControl(Control):
    """w(s,t) = t - s."""

    kind = "linear"

    def eval(self, s, t):
        if t < s:
            raise ValueError("control requires s <= t")
        return t - s

    def midpoint(self, s, t, tol=DEFAULT_MIDPOINT_TOL):
        if not t > s:
            raise ValueError("midpoint requires s < t")
        return 0.5 * (s + t)

    def to_dict(self):
        return {"kind": "linear"}


class PowerControl(Control):
    """w(s,t) = c * (t-s)**kappa with kappa >= 1 (superadditive by convexity)."""

    kind = "power"

    def __init__(self, c=1.0, kappa=1.0):
        if c <= 0:
            raise ValueError("power control needs c > 0")
        if kappa < 1.0:
            raise ValueError("power control needs kappa >= 1 for superadditivity")
        self.c = float(c)
        self.kappa = float(kappa)

    def eval(self, s, t):
        if t < s:
            raise ValueError("control requires s <= t")
        return self.c * (t - s) ** self.kappa

    def midpoint(self, s, t, tol=DEFAULT_MIDPOINT_TOL):
        # (u-s)^kappa = (t-s)^kappa / 2
        if not t > s:
            raise ValueError("midpoint requires s < t")
        return s + (t - s) * 2.0 ** (-1.0 / self.kappa)

    def to_dict(self):
        return {"kind": "power", "c": self.c, "kappa": self.kappa}


class BesovDataControl(Control):
    """Control carried by a time profile of data norms.

    w(s,t) = [ (int_s^t a_r^theta dr)^(1/theta) * (t-s)^(1-H*gamma-1/theta) ]^(1/(1-H*gamma))

    with a_r >= 0 the profile values (piecewise linear integrand a_r^theta
    between samples, so the data integral is exactly additive).  theta=inf is
    accepted and replaces the integral factor by sup_{[s,t]} a_r.
    Superadditivity holds because w is a product of two controls with
    exponents summing to one; this needs 1 - H*gamma >= 1/theta.
    """

    kind = "besov_data"

    def __init__(self, theta, H, gamma, times, values):
        if not 0.0 < H < 1.0:
            raise ValueError("need 0 < H < 1")
        if gamma <= 0.0:
            raise ValueError("need gamma > 0")
        one_m = 1.0 - H * gamma
        inv_theta = 0.0 if math.isinf(theta) else 1.0 / theta
        if not math.isinf(theta) and theta < 1.0:
            raise ValueError("need theta >= 1")
        if one_m <= 0.0 or one_m < inv_theta - 1e-15:
            raise ValueError(
                "besov_data control needs 1 - H*gamma >= 1/theta > 0 "
                f"(got 1-H*gamma={one_m}, 1/theta={inv_theta})"
            )
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape or times.size < 2:
            raise ValueError("profile needs matching 1-d times/values, >= 2 samples")
        if np.any(np.diff(times) <= 0):
            raise ValueError("profile times must be strictly increasing")
        if np.any(values < 0):
            raise ValueError("profile values must be nonnegative")
        self.theta = float(theta)
        self.H = float(H)
        self.gamma = float(gamma)
        self.times = times
        self.values = values
        self._time_expo = (one_m - inv_theta) / one_m
        self._data_expo = inv_theta / one_m
        if not math.isinf(theta):
            integrand = values**theta
            seg = 0.5 * (integrand[1:] + integrand[:-1]) * np.diff(times)
            self._cum = np.concatenate([[0.0], np.cumsum(seg)])
            self._integrand = integrand

    def _cum_at(self, t):
        # exact piecewise-quadratic cumulative of the piecewise-linear integrand
        times = self.times
        i = int(np.searchsorted(times, t, side="right")) - 1
        i = min(max(i, 0), times.size - 2)
        dt = t - times[i]
        h = times[i + 1] - times[i]
        f0 = self._integrand[i]
        f1 = self._integrand[i + 1]
        return self._cum[i] + f0 * dt + 0.5 * (f1 - f0) * dt * dt / h

    def _sup_at(self, s, t):
        times, values = self.times, self.values
        lo = int(np.searchsorted(times, s, side="left"))
        hi = int(np.searchsorted(times, t, side="right"))
        m = max(float(np.interp(s, times, values)), float(np.interp(t, times, values)))
        if lo < hi:
            m = max(m, float(values[lo:hi].max()))
        return m

    def eval(self, s, t):
        if t < s:
            raise ValueError("control requires s <= t")
        if s < self.times[0] - 1e-12 or t > self.times[-1] + 1e-12:
            raise ValueError("interval outside the profile domain")
        if t == s:
            return 0.0
        if math.isinf(self.theta):
            data = self._sup_at(s, t) ** (1.0 / (1.0 - self.H * self.gamma))
            return data * (t - s)
        data = max(self._cum_at(t) - self._cum_at(s), 0.0)
        return data**self._data_expo * (t - s) ** self._time_expo

    def to_dict(self):
        return {
            "kind": "besov_data",
            "theta": self.theta,
            "H": self.H,
            "gamma": self.gamma,
            "times": self.times.tolist(),
            "values": self.values.tolist(),
        }


class TabulatedControl(Control):
    """Control given by values on a square time grid, bilinearly interpolated.

    table[i, j] approximates w(grid[i], grid[j]) for j >= i.  Superadditivity
    is re-verified on construction over triples of the tabulation grid (the
    nodes carry the exact values); the report is kept on the instance.
    Between nodes, bilinear interpolation of a curved control can overshoot
    superadditivity by O(h^2 * curvature) near the diagonal, which is why the
    guarantee is stated on the grid.
    """

    kind = "tabulated"

    def __init__(self, grid, table, check=True, rel_tol=1e-9):
        grid = np.asarray(grid, dtype=float)
        table = np.asarray(table, dtype=float)
        if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing, >= 2 points")
        if table.shape != (grid.size, grid.size):
            raise ValueError("table must be square over the grid")
        iu = np.triu_indices(grid.size)
        if np.any(table[iu] < -1e-15):
            raise ValueError("control values must be nonnegative")
        if np.any(np.abs(np.diag(table)) > 1e-15):
            raise ValueError("control must vanish on the diagonal")
        self.grid = grid
        self.table = table
        self.superadditivity_report = None
        if check:
            sub = grid
            if grid.size > 48:  # keep the exhaustive triple check O(48^3)
                idx = np.unique(np.linspace(0, grid.size - 1, 48).round().astype(int))
                sub = grid[idx]
            rep = check_superadditive(self, sub, rel_tol=rel_tol)
            self.superadditivity_report = rep
            if not rep["ok"]:
                raise ValueError(
                    "tabulated values are not superadditive on the grid "
                    f"(max relative violation {rep['max_violation']:.3e})"
                )

    def eval(self, s, t):
        if t < s:
            raise ValueError("control requires s <= t")
        g = self.grid
        if s < g[0] - 1e-12 or t > g[-1] + 1e-12:
            raise ValueError("interval outside the tabulated domain")
        i = min(max(int(np.searchsorted(g, s, side="right")) - 1, 0), g.size - 2)
        j = min(max(int(np.searchsorted(g, t, side="right")) - 1, 0), g.size - 2)
        fs = (s - g[i]) / (g[i + 1] - g[i])
        ft = (t - g[j]) / (g[j + 1] - g[j])
        w = (
            self.table[i, j] * (1 - fs) * (1 - ft)
            + self.table[i + 1, j] * fs * (1 - ft)
            + self.table[i, j + 1] * (1 - fs) * ft
            + self.table[i + 1, j + 1] * fs * ft
        )
        return max(w, 0.0)

    @classmethod
    def from_control(cls, control, grid):
        grid = np.asarray(grid, dtype=float)
        n = grid.size
        table = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                table[i, j] = control.eval(grid[i], grid[j])
        return cls(grid, table)

    def to_dict(self):
        return {
            "kind": "tabulated",
            "grid": self.grid.tolist(),
            "table": self.table.tolist(),
        }


_KINDS = {
    "linear": LinearControl,
    "power": PowerControl,
    "besov_data": BesovDataControl,
    "tabulated": TabulatedControl,
}


def control_from_dict(d):
    """Inverse of Control.to_dict, for JSON round trips and CLI configs."""
    d = dict(d)
    kind = d.pop("kind", None)
    if kind == "linear":
        return LinearControl()
    if kind == "power":
        return PowerControl(**d)
    if kind == "besov_data":
        return BesovDataControl(**d)
    if kind == "tabulated":
        return TabulatedControl(np.asarray(d["grid"]), np.asarray(d["table"]))
    raise ValueError(f"unknown control kind: {kind!r}")


def w_midpoint(control, s, t, tol=DEFAULT_MIDPOINT_TOL):
    """Leftmost u with w(s,u) >= w(s,t)/2; see Control.midpoint."""
    return control.midpoint(s, t, tol=tol)


def dyadic_points(control, s, t, level, tol=DEFAULT_MIDPOINT_TOL):
    """w-dyadic points of [s,t] at the given level (2**level + 1 values).

    Level 0 is {s, t}; each refinement keeps the previous points at even
    slots and inserts the w-midpoint of every interval at the odd slots, so
    adjacent points satisfy w(d_i, d_{i+1}) <= 2**(-level) * w(s,t).
    """
    return build_dyadic_tree(control, s, t, level, tol=tol).levels[-1]


class DyadicTree:
    """All dyadic levels 0..h of an interval, nested by construction."""

    def __init__(self, control, s, t, levels):
        self.control = control
        self.s = s
        self.t = t
        self.levels = levels

    @property
    def depth(self):
        return len(self.levels) - 1

    def mesh_w(self, level):
        pts = self.levels[level]
        return mesh(self.control, pts)


def build_dyadic_tree(control, s, t, h_max, tol=DEFAULT_MIDPOINT_TOL):
    if t <= s:
        raise ValueError("need s < t")
    if h_max < 0:
        raise ValueError("need h_max >= 0")
    levels = [np.array([s, t], dtype=float)]
    for _ in range(h_max):
        prev = levels[-1]
        nxt = np.empty(2 * prev.size - 1, dtype=float)
        nxt[::2] = prev
        for i in range(prev.size - 1):
            a, b = prev[i], prev[i + 1]
            u = control.midpoint(a, b, tol=tol)
            if not a < u < b:
                u = 0.5 * (a + b)  # flat stretch of w: split by time instead
            nxt[2 * i + 1] = u
        levels.append(nxt)
    return DyadicTree(control, s, t, levels)


def mesh(control, points):
    """|pi|_w = max w(u,v) over adjacent pairs of the partition."""
    points = np.asarray(points, dtype=float)
    validate_partition(points)
    if points.size < 2:
        return 0.0
    return max(control.eval(points[i], points[i + 1]) for i in range(points.size - 1))


def validate_partition(points):
    points = np.asarray(points, dtype=float)
    if points.ndim != 1 or points.size < 1:
        raise ValueError("partition must be a nonempty 1-d point set")
    if np.any(np.diff(points) < 0):
        raise ValueError("partition points must be nondecreasing")
    return points


def check_superadditive(control, grid, rel_tol=1e-12, abs_tol=None):
    """Exhaustive superadditivity check over all triples of a time grid.

    Returns a report dict with the worst relative violation of
    w(s,u) + w(u,t) <= w(s,t).  abs_tol (default rel_tol * w(full span))
    guards the comparison for near-diagonal triples where w ~ 0.
    """
    grid = np.sort(np.asarray(grid, dtype=float))
    n = grid.size
    if n < 3:
        raise ValueError("need at least 3 grid points")
    if abs_tol is None:
        abs_tol = rel_tol * max(control.eval(grid[0], grid[-1]), 1e-300)
    worst = 0.0
    worst_triple = None
    count = 0
    for i in range(n - 2):
        for k in range(i + 2, n):
            w_ik = control.eval(grid[i], grid[k])
            for j in range(i + 1, k):
                count += 1
                gap = control.eval(grid[i], grid[j]) + control.eval(grid[j], grid[k]) - w_ik
                viol = gap / max(w_ik, abs_tol)
                if viol > worst:
                    worst = viol
                    worst_triple = (grid[i], grid[j], grid[k])
    return {
        "ok": worst <= rel_tol,
        "max_violation": worst,
        "worst_triple": worst_triple,
        "n_triples": count,
        "rel_tol": rel_tol,
    }
