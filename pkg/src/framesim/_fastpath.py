"""Fused RK4 kernels (numba) for the hot integration loops.

The generic scipy path in :mod:`framesim.lindblad` is the reference
implementation; these kernels compute the identical arithmetic with
preallocated buffers.  Row-parallel loops have no cross-row reductions, so
results are bitwise independent of the thread count.  Disable with
FRAMESIM_NO_NUMBA=1.
"""

from __future__ import annotations

import os

import numpy as np

HAVE_NUMBA = False
if not os.environ.get("FRAMESIM_NO_NUMBA"):
    try:
        from numba import njit, prange

        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover
        pass

if HAVE_NUMBA:

    @njit(cache=True, parallel=True, fastmath=True)
    def _csr_dense(data, indices, indptr, x, out):
        n = out.shape[0]
        m = x.shape[1]
        for i in prange(n):
            for j in range(m):
                out[i, j] = 0.0 + 0.0j
            for kk in range(indptr[i], indptr[i + 1]):
                v = data[kk]
                k = indices[kk]
                for j in range(m):
                    out[i, j] += v * x[k, j]

    @njit(cache=True, parallel=True, fastmath=True)
    def _rhs(hd, hi, hp, l1d, l1i, l1p, r1, l2d, l2i, l2p, r2, x, out, w1, w2):
        # out = -i (Hx - (Hx)^H) + sum_k r_k L_k x L_k^H   (x Hermitian)
        n = x.shape[0]
        _csr_dense(hd, hi, hp, x, w1)
        for i in prange(n):
            for j in range(n):
                out[i, j] = -1j * (w1[i, j] - np.conj(w1[j, i]))
        if r1 != 0.0:
            _csr_dense(l1d, l1i, l1p, x, w1)
            for i in prange(n):
                for j in range(n):
                    w2[i, j] = np.conj(w1[j, i])
            _csr_dense(l1d, l1i, l1p, w2, w1)
            for i in prange(n):
                for j in range(n):
                    out[i, j] += r1 * w1[i, j]
        if r2 != 0.0:
            _csr_dense(l2d, l2i, l2p, x, w1)
            for i in prange(n):
                for j in range(n):
                    w2[i, j] = np.conj(w1[j, i])
            _csr_dense(l2d, l2i, l2p, w2, w1)
            for i in prange(n):
                for j in range(n):
                    out[i, j] += r2 * w1[i, j]

    @njit(cache=True, parallel=True, fastmath=True)
    def rk4_span(hd, hi, hp, l1d, l1i, l1p, r1, l2d, l2i, l2p, r2,
                 rho, dt, n_steps, trace_tol):
        """Propagate n_steps in place; returns the failing step or -1."""
        n = rho.shape[0]
        k = np.empty_like(rho)
        x = np.empty_like(rho)
        acc = np.empty_like(rho)
        w1 = np.empty_like(rho)
        w2 = np.empty_like(rho)
        tr0 = 0.0
        for i in range(n):
            tr0 += rho[i, i].real
        for s in range(n_steps):
            _rhs(hd, hi, hp, l1d, l1i, l1p, r1, l2d, l2i, l2p, r2,
                 rho, k, w1, w2)
            for i in prange(n):
                for j in range(n):
                    acc[i, j] = k[i, j]
                    x[i, j] = rho[i, j] + 0.5 * dt * k[i, j]
            _rhs(hd, hi, hp, l1d, l1i, l1p, r1, l2d, l2i, l2p, r2,
                 x, k, w1, w2)
            for i in prange(n):
                for j in range(n):
                    acc[i, j] += 2.0 * k[i, j]
                    x[i, j] = rho[i, j] + 0.5 * dt * k[i, j]
            _rhs(hd, hi, hp, l1d, l1i, l1p, r1, l2d, l2i, l2p, r2,
                 x, k, w1, w2)
            for i in prange(n):
                for j in range(n):
                    acc[i, j] += 2.0 * k[i, j]
                    x[i, j] = rho[i, j] + dt * k[i, j]
            _rhs(hd, hi, hp, l1d, l1i, l1p, r1, l2d, l2i, l2p, r2,
                 x, k, w1, w2)
            for i in prange(n):
                for j in range(n):
                    rho[i, j] += (dt / 6.0) * (acc[i, j] + k[i, j])
            tr = 0.0
            for i in range(n):
                tr += rho[i, i].real
            if not (abs(tr - tr0) <= trace_tol):
                return s
        return -1

    @njit(cache=True, parallel=True, fastmath=True)
    def rk4_step_td(d1, d2, d3, hi, hp, rho, dt, k, x, acc, w1):
        """One RK4 step of the closed system with H sampled at the stages."""
        n = rho.shape[0]
        _csr_dense(d1, hi, hp, rho, w1)
        for i in prange(n):
            for j in range(n):
                k[i, j] = -1j * (w1[i, j] - np.conj(w1[j, i]))
                acc[i, j] = k[i, j]
                x[i, j] = rho[i, j] + 0.5 * dt * k[i, j]
        _csr_dense(d2, hi, hp, x, w1)
        for i in prange(n):
            for j in range(n):
                k[i, j] = -1j * (w1[i, j] - np.conj(w1[j, i]))
                acc[i, j] += 2.0 * k[i, j]
                x[i, j] = rho[i, j] + 0.5 * dt * k[i, j]
        _csr_dense(d2, hi, hp, x, w1)
        for i in prange(n):
            for j in range(n):
                k[i, j] = -1j * (w1[i, j] - np.conj(w1[j, i]))
                acc[i, j] += 2.0 * k[i, j]
                x[i, j] = rho[i, j] + dt * k[i, j]
        _csr_dense(d3, hi, hp, x, w1)
        for i in prange(n):
            for j in range(n):
                rho[i, j] += (dt / 6.0) * (acc[i, j] - 1j * (w1[i, j] - np.conj(w1[j, i])))
