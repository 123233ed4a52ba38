"""Fractional Brownian motion via the Mandelbrot-Van Ness window.

B_v = int_{-inf}^v [(v-r)_+^(H-1/2) - (-r)_+^(H-1/2)] dW_r, discretized on a
uniform cell grid covering [-M_past, T].  The kernel's integrable singularity
is handled by exact per-cell integration of the power antiderivatives, and
the driving increments are kept, so conditional means given the time-u past
are exact linear functionals of the stored noise:

    E_u B_v = sum_{cells right edge <= u} c_cell(v) dW_cell / dt.

The residual B_v - E_u B_v then involves only cells in (u, v], with variance
converging to rho(u,v) = (v-u)^(2H) / (2H) as the grid refines.  H = 1/2
reduces exactly to a standard Brownian motion (the past coefficients vanish),
which the model exploits as a fast path.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

_GRID_SNAP = 1e-6  # relative cell tolerance when matching times to the grid


def rho(H, u, v):
    """Conditional-variance profile (v-u)^(2H) / (2H) for u <= v.

    Vectorized in either argument."""
    gap = np.asarray(v) - np.asarray(u)
    if np.any(gap < 0):
        raise ValueError("need u <= v")
    out = gap ** (2.0 * H) / (2.0 * H)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class FbmParams:
    """H: Hurst index, d: coordinates, T: horizon, m_past: window length,
    n_grid: total time steps on [-m_past, T] (the window is rounded to a
    whole number of cells)."""

    H: float
    d: int = 1
    T: float = 1.0
    m_past: float = 8.0
    n_grid: int = 1152

    def __post_init__(self):
        if not 0.0 < self.H < 1.0:
            raise ValueError("need 0 < H < 1")
        if self.d < 1:
            raise ValueError("need d >= 1")
        if self.T <= 0 or self.m_past <= 0:
            raise ValueError("need T > 0 and m_past > 0")
        if self.n_grid < 4:
            raise ValueError("need n_grid >= 4")


class FbmModel:
    """Grid, kernel table and sampling for one parameter set."""

    def __init__(self, params):
        self.params = params
        self.is_bm = params.H == 0.5
        if self.is_bm:
            # Markov: no past window, the whole budget covers [0, T]
            n_fut, n_past = params.n_grid, 0
        else:
            n_fut = int(round(params.n_grid * params.T / (params.T + params.m_past)))
            n_fut = max(n_fut, 1)
            n_past = params.n_grid - n_fut
        dt = params.T / n_fut
        if not self.is_bm:
            if n_past < 1:
                raise ValueError("window misconfigured: no past cells")
            if dt >= n_past * dt + 1e-300 or n_past * dt <= dt:
                raise ValueError(
                    "grid step >= effective past window; increase n_grid or m_past"
                )
        self._init_counts(params.H, params.d, params.T, n_fut, 0 if self.is_bm else n_past, dt)

    @classmethod
    def from_counts(cls, H, d, T, n_fut, n_past):
        self = object.__new__(cls)
        dt = T / n_fut
        self.params = FbmParams(H=H, d=d, T=T, m_past=max(n_past, 1) * dt,
                                n_grid=n_fut + n_past)
        self.is_bm = H == 0.5
        self._init_counts(H, d, T, n_fut, 0 if self.is_bm else n_past, dt)
        return self

    def _init_counts(self, H, d, T, n_fut, n_past, dt):
        self.H = H
        self.d = d
        self.T = T
        self.n_fut = n_fut
        self.n_past = n_past
        self.dt = dt
        self.n_cells = n_fut + n_past
        self.m_past_eff = n_past * dt
        self.times = dt * np.arange(n_fut + 1)
        self.edges = dt * np.arange(-n_past, n_fut + 1)
        if self.is_bm:
            self.coeff = None
        else:
            self.coeff = self._kernel_table()

    def _kernel_table(self):
        """Normalized coefficients Cn[cell, time]: B = dW @ Cn.

        Cell integrals of (v-r)^(H-1/2) - (-r)_+^(H-1/2) in closed form,
        divided by dt (left-point density convention for the noise).
        """
        e = self.H + 0.5
        a = self.edges[:-1]  # cell left edges
        b = self.edges[1:]  # cell right edges
        A, B = a[:, None], b[:, None]
        V = self.times[None, :]
        # moving part: int over [a, min(b,v)] of (v-r)^(H-1/2) dr, 0 if a >= v
        lo = np.maximum(V - np.minimum(B, V), 0.0)
        hi = np.maximum(V - A, 0.0)
        mov = np.where(A >= V, 0.0, (hi**e - lo**e) / e)
        # pinned part: cells entirely left of 0 subtract int (-r)^(H-1/2) dr
        na = np.maximum(-a, 0.0)
        nb = np.maximum(-b, 0.0)
        pin = np.where(b <= 0.0, (na**e - nb**e) / e, 0.0)
        return (mov - pin[:, None]) / self.dt

    # -- grid helpers ------------------------------------------------------

    def time_index(self, t):
        idx = int(round(t / self.dt))
        if idx < 0 or idx > self.n_fut or abs(t - idx * self.dt) > _GRID_SNAP * self.dt:
            raise ValueError(f"time {t} is not on the simulation grid")
        return idx

    def past_cells(self, u):
        """Number of cells whose right edge is <= u (u on the grid)."""
        return self.n_past + self.time_index(u)

    # -- sampling ----------------------------------------------------------

    def _draw(self, seed, index, count):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))
        return rng.standard_normal((count, self.d, self.n_cells)) * np.sqrt(self.dt)

    def sample(self, seed, index=0):
        dw = self._draw(seed, index, 1)[0]
        return FbmPath(self, dw, self._values(dw[None])[0])

    def sample_batch(self, seed, count, start=0, keep_dw=True, times=None,
                     cond_pairs=None, chunk=2048):
        """Ensemble with per-path counter-derived streams (path i is identical
        no matter how the batch is chunked or distributed).

        times: optional subset of grid times at which values are kept.
        cond_pairs: optional (u, v) list; E_u B_v is precomputed per pair so
        that dW can be dropped (keep_dw=False) for large ensembles.
        """
        t_idx = (np.arange(self.n_fut + 1) if times is None
                 else np.array([self.time_index(t) for t in times]))
        pairs = [] if cond_pairs is None else [
            (self.past_cells(u), self.time_index(v)) for (u, v) in cond_pairs
        ]
        vals = np.empty((count, self.d, t_idx.size))
        cond = np.empty((count, self.d, len(pairs))) if pairs else None
        dws = np.empty((count, self.d, self.n_cells)) if keep_dw else None
        for lo in range(0, count, chunk):
            hi = min(lo + chunk, count)
            dw = np.empty((hi - lo, self.d, self.n_cells))
            for i in range(lo, hi):
                dw[i - lo] = self._draw(seed, start + i, 1)[0]
            vals[lo:hi] = self._values(dw, t_idx)
            for k, (jcut, vcol) in enumerate(pairs):
                cond[lo:hi, :, k] = self._cond(dw, jcut, vcol)
            if keep_dw:
                dws[lo:hi] = dw
        return FbmEnsemble(self, dws, t_idx, vals, pairs, cond)

    def _values(self, dw, t_idx=None):
        if self.is_bm:
            b = np.concatenate(
                [np.zeros(dw.shape[:-1] + (1,)), np.cumsum(dw, axis=-1)], axis=-1
            )
            return b if t_idx is None else b[..., t_idx]
        cn = self.coeff if t_idx is None else self.coeff[:, t_idx]
        return dw @ cn

    def _cond(self, dw, jcut, vcol):
        if self.is_bm:
            return np.sum(dw[..., :jcut], axis=-1)
        return dw[..., :jcut] @ self.coeff[:jcut, vcol]

    # -- conditional structure --------------------------------------------

    def cond_mean(self, dw, u, v):
        """E_u B_v for increments dw (..., n_cells); u, v grid times, u <= v."""
        if v < u:
            raise ValueError("need u <= v")
        jcut = self.past_cells(u)
        vcol = self.time_index(v)
        if self.is_bm:
            return np.sum(dw[..., :jcut], axis=-1)
        return dw[..., :jcut] @ self.coeff[:jcut, vcol]

    def cond_mean_block(self, dw, u, v_indices):
        """E_u B_v for every grid index in v_indices (vectorized in v)."""
        jcut = self.past_cells(u)
        if self.is_bm:
            bu = np.sum(dw[..., :jcut], axis=-1)
            return np.repeat(bu[..., None], len(v_indices), axis=-1)
        return dw[..., :jcut] @ self.coeff[:jcut, v_indices]

    def rho_discrete(self, u, v):
        """Model conditional variance of B_v given the time-u past."""
        if self.is_bm:
            self.time_index(u), self.time_index(v)
            return v - u
        jcut = self.past_cells(u)
        vcol = self.time_index(v)
        col = self.coeff[jcut : self.n_past + vcol, vcol]
        return float(col @ col) * self.dt

    def variance(self, t):
        """Model Var(B_t) (exact for the discrete window)."""
        if self.is_bm:
            self.time_index(t)
            return float(t)
        col = self.coeff[:, self.time_index(t)]
        return float(col @ col) * self.dt

    def coarsen_counts(self, factor):
        if self.n_fut % factor or self.n_past % factor:
            raise ValueError("cell counts must be divisible by the factor")
        return FbmModel.from_counts(self.H, self.d, self.T,
                                    self.n_fut // factor, self.n_past // factor)


class FbmPath:
    """One realization: grid values plus the driving increments."""

    def __init__(self, model, dw, values):
        self.model = model
        self.dw = dw
        self.values = values  # (d, n_times)

    def b(self, t):
        v = self.values[:, self.model.time_index(t)]
        return float(v[0]) if self.model.d == 1 else v

    def cond_mean(self, u, v):
        out = self.model.cond_mean(self.dw, u, v)
        return float(out[0]) if self.model.d == 1 else out

    def coarsen(self, factor):
        coarse = self.model.coarsen_counts(factor)
        dw = self.dw.reshape(self.model.d, coarse.n_cells, factor).sum(axis=-1)
        return FbmPath(coarse, dw, coarse._values(dw[None])[0])


class FbmEnsemble:
    """Batch of paths; values (P, d, n_times) at the retained grid indices."""

    def __init__(self, model, dw, t_idx, values, cond_pairs, cond_values):
        self.model = model
        self.dw = dw
        self.t_idx = t_idx
        self.values = values
        self._cond_pairs = cond_pairs
        self._cond_values = cond_values
        self._col_of = {int(j): k for k, j in enumerate(t_idx)}

    def __len__(self):
        return self.values.shape[0]

    def b(self, t):
        col = self._col_of.get(self.model.time_index(t))
        if col is None:
            raise ValueError(f"time {t} was not retained in this ensemble")
        v = self.values[:, :, col]
        return v[:, 0] if self.model.d == 1 else v

    def cond_mean(self, u, v):
        if self.dw is not None:
            out = self.model.cond_mean(self.dw, u, v)
            return out[:, 0] if self.model.d == 1 else out
        key = (self.model.past_cells(u), self.model.time_index(v))
        for k, pair in enumerate(self._cond_pairs):
            if pair == key:
                out = self._cond_values[:, :, k]
                return out[:, 0] if self.model.d == 1 else out
        raise ValueError("conditional pair not precomputed and dW not kept")

    def path(self, i):
        if self.dw is None or self.t_idx.size != self.model.n_fut + 1:
            raise ValueError("full per-path views need keep_dw=True and all times")
        return FbmPath(self.model, self.dw[i], self.values[i])


@lru_cache(maxsize=8)
def _cached_model(params):
    return FbmModel(params)


def model_for(params):
    """Shared FbmModel per parameter set (kernel table built once)."""
    return _cached_model(params)


def simulate(params, seed):
    """One path with the counter-based stream of index 0 under this seed."""
    return model_for(params).sample(seed)


def conditional_mean(path, u, v):
    """E_u B_v from the path's stored increments; grid times only."""
    return path.cond_mean(u, v)
