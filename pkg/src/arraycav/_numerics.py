"""Shared numerical helpers: quadrature nodes, lattice FFT convolutions, ODE driver."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import solve_ivp


@lru_cache(maxsize=32)
def gauss_legendre(n):
    """Cached Gauss-Legendre nodes and weights on [-1, 1]."""
    x, w = leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gl_interval(lo, hi, n):
    """Gauss-Legendre nodes/weights mapped to [lo, hi]."""
    x, w = gauss_legendre(n)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def smoothstep(x):
    """C^3 taper: 1 for x <= 0, 0 for x >= 1, degree-7 smoothstep in between.

    Used as a radial window on truncated lattice sums; the smoothness order
    sets the algebraic suppression of the boundary error against oscillatory
    summands.
    """
    x = np.clip(x, 0.0, 1.0)
    return 1.0 - x**4 * (35.0 - 84.0 * x + 70.0 * x**2 - 20.0 * x**3)


def displacement_grid(n_side, a):
    """All pairwise displacements of an n_side^2 lattice: (2n-1, 2n-1) meshes of dx, dy."""
    d = np.arange(-(n_side - 1), n_side)
    dx, dy = np.meshgrid(d * a, d * a, indexing="ij")
    return dx, dy


def toeplitz_from_table(table, n_side):
    """Materialize the dense N x N matrix T[n, m] = table[i_n - i_m, j_n - j_m].

    ``table`` has shape (2*n_side-1, 2*n_side-1) indexed by displacement
    offset + (n_side-1).  Memory is O(N^2); intended for n_side <= 64.
    """
    ii, jj = np.meshgrid(np.arange(n_side), np.arange(n_side), indexing="ij")
    ii = ii.ravel()
    jj = jj.ravel()
    di = ii[:, None] - ii[None, :] + (n_side - 1)
    dj = jj[:, None] - jj[None, :] + (n_side - 1)
    return table[di, dj]


def open_convolve(table, field):
    """(T f)_p = sum_m table(r_p - r_m) f_m on an n x n lattice, via zero-padded FFT.

    ``table`` is the (2n-1, 2n-1) displacement table, ``field`` an (n, n) grid.
    Exact up to FFT round-off; never materializes the N x N matrix.
    """
    n = field.shape[0]
    nf = 1 << (2 * n - 2).bit_length()
    tf = np.fft.fft2(table, s=(nf, nf))
    ff = np.fft.fft2(field, s=(nf, nf))
    conv = np.fft.ifft2(tf * ff)[n - 1 : 2 * n - 1, n - 1 : 2 * n - 1]
    if np.iscomplexobj(table) or np.iscomplexobj(field):
        return conv
    return conv.real


def cyclic_weight_apply(weights, field):
    """y_p = sum_n f_n (1/N) sum_k W_k e^{i k (r_n - r_p)} over the lattice's own k grid.

    ``weights`` lives on the n x n FFT frequency grid (numpy fftfreq order).
    This is the exact discrete-Brillouin-zone convolution; the kernel is
    n-periodic by construction.
    """
    return np.fft.fft2(weights * np.fft.ifft2(field))


def integrate_linear(rhs, y0, t_final, dt_out, rtol=1e-9, atol=None, method="RK45"):
    """Drive solve_ivp with dense complex state, sampling every dt_out.

    Returns (times, states) with states[i] the state at times[i]; deterministic
    for identical inputs and step controls.
    """
    y0 = np.asarray(y0, dtype=complex)
    if atol is None:
        atol = rtol * 1e-2
    n_out = max(2, int(round(t_final / dt_out)) + 1)
    t_eval = np.linspace(0.0, t_final, n_out)
    sol = solve_ivp(rhs, (0.0, t_final), y0, method=method, t_eval=t_eval,
                    rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(f"integrator failed: {sol.message}")
    return sol.t, sol.y.T.copy()
