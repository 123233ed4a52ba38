"""Hot numeric kernels: numba-jitted with a pure-numpy fallback.

The expensive inner loops of the package are phase/heat accumulations of
the form

    out[f] += weight[c] * exp(-rho[c]*|xi_f|^2/2 + i*<xi_f, shift_c>)

summed over time cells c for every retained frequency f.  They run millions
of iterations in the functional experiments, so they carry @njit kernels.
Set SEWKIT_NO_NUMBA=1 (any non-empty value) to force the numpy path; the two
paths agree to float roundoff and are timed side by side by
benchmarks/bench_kernels.py and the besov-bench CLI experiment.
"""

import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

_CHUNK = 128  # cells per block in the numpy fallback, keeps temporaries small


def numba_enabled():
    """True when the jitted kernels are used by the dispatch wrappers."""
    return HAS_NUMBA and not os.environ.get("SEWKIT_NO_NUMBA")


def heat_phase_sum_1d_numpy(xi, rho, shift, weight, out=None):
    """sum_c weight[c]*exp(-rho[c]*xi**2/2 + 1j*xi*shift[c]) -> (F,) complex.

    xi : (F,) frequencies; rho, shift, weight : (C,) per-cell arrays.
    """
    if out is None:
        out = np.zeros(xi.shape[0], dtype=np.complex128)
    xi_sq = xi * xi
    C = rho.shape[0]
    for lo in range(0, C, _CHUNK):
        hi = min(lo + _CHUNK, C)
        ex = np.exp(
            -0.5 * rho[lo:hi, None] * xi_sq[None, :]
            + 1j * shift[lo:hi, None] * xi[None, :]
        )
        out += weight[lo:hi] @ ex
    return out


def heat_phase_sum_2d_numpy(xi1, xi2, rho, shift1, shift2, weight, out=None):
    """2-d variant; xi1, xi2 are the flattened frequency coordinates."""
    if out is None:
        out = np.zeros(xi1.shape[0], dtype=np.complex128)
    xi_sq = xi1 * xi1 + xi2 * xi2
    C = rho.shape[0]
    for lo in range(0, C, _CHUNK):
        hi = min(lo + _CHUNK, C)
        ex = np.exp(
            -0.5 * rho[lo:hi, None] * xi_sq[None, :]
            + 1j
            * (
                shift1[lo:hi, None] * xi1[None, :]
                + shift2[lo:hi, None] * xi2[None, :]
            )
        )
        out += weight[lo:hi] @ ex
    return out


if HAS_NUMBA:

    @njit(cache=True)
    def _heat_phase_sum_1d_jit(xi, rho, shift, weight, out):
        C = rho.shape[0]
        F = xi.shape[0]
        for c in range(C):
            w = weight[c]
            r = -0.5 * rho[c]
            s = shift[c]
            for f in range(F):
                out[f] += w * np.exp(complex(r * xi[f] * xi[f], s * xi[f]))
        return out

    @njit(cache=True)
    def _heat_phase_sum_2d_jit(xi1, xi2, rho, shift1, shift2, weight, out):
        C = rho.shape[0]
        F = xi1.shape[0]
        for c in range(C):
            w = weight[c]
            r = -0.5 * rho[c]
            s1 = shift1[c]
            s2 = shift2[c]
            for f in range(F):
                q = xi1[f] * xi1[f] + xi2[f] * xi2[f]
                out[f] += w * np.exp(complex(r * q, s1 * xi1[f] + s2 * xi2[f]))
        return out

    def heat_phase_sum_1d_numba(xi, rho, shift, weight, out=None):
        if out is None:
            out = np.zeros(xi.shape[0], dtype=np.complex128)
        return _heat_phase_sum_1d_jit(xi, rho, shift, weight, out)

    def heat_phase_sum_2d_numba(xi1, xi2, rho, shift1, shift2, weight, out=None):
        if out is None:
            out = np.zeros(xi1.shape[0], dtype=np.complex128)
        return _heat_phase_sum_2d_jit(xi1, xi2, rho, shift1, shift2, weight, out)

else:  # pragma: no cover
    heat_phase_sum_1d_numba = None
    heat_phase_sum_2d_numba = None


def _c64(*arrays):
    return [np.ascontiguousarray(a, dtype=np.float64) for a in arrays]


def heat_phase_sum_1d(xi, rho, shift, weight, out=None):
    """Dispatching wrapper; see heat_phase_sum_1d_numpy for the contract."""
    xi, rho, shift, weight = _c64(xi, rho, shift, weight)
    if numba_enabled():
        return heat_phase_sum_1d_numba(xi, rho, shift, weight, out)
    return heat_phase_sum_1d_numpy(xi, rho, shift, weight, out)


def heat_phase_sum_2d(xi1, xi2, rho, shift1, shift2, weight, out=None):
    xi1, xi2, rho, shift1, shift2, weight = _c64(
        xi1, xi2, rho, shift1, shift2, weight
    )
    if numba_enabled():
        return heat_phase_sum_2d_numba(xi1, xi2, rho, shift1, shift2, weight, out)
    return heat_phase_sum_2d_numpy(xi1, xi2, rho, shift1, shift2, weight, out)
