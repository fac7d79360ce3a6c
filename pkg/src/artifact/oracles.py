"""Independent reference computations used to cross-check the phase solvers.

Nothing here shares code paths with the Prufer integrators: the matrices
take the potential or the density from the tabulated warping solution, and
the Bessel zero comes from the power series.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal

from .eigen import ModelSpace, potential_values


def bessel_j0_series(x: float, terms: int = 60) -> float:
    total, term = 0.0, 1.0
    q = -(x * x) / 4.0
    for k in range(terms):
        total += term
        term *= q / ((k + 1) * (k + 1))
    return total


def bessel_j0_first_zero(tol: float = 1e-15) -> float:
    lo, hi = 2.0, 3.0          # J0(2) > 0 > J0(3)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if bessel_j0_series(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def graded_grid(eps: float, L: float, N: int) -> np.ndarray:
    """N interior nodes plus endpoints: geometric near eps, uniform in the bulk."""
    x_c = min(1.0, eps + 0.25 * (L - eps))
    n_geo = N // 4 if x_c > 2 * eps else 0
    parts = []
    if n_geo:
        parts.append(np.geomspace(eps, x_c, n_geo + 1)[:-1])
    parts.append(np.linspace(x_c if n_geo else eps, L, N + 2 - n_geo))
    return np.concatenate(parts)


def schrodinger_matrix(x: np.ndarray, v: np.ndarray):
    """Symmetric tridiagonal (diag, offdiag) for -u'' + v u with Dirichlet ends.

    Three-point stiffness with lumped mass on a nonuniform mesh, symmetrised by
    the square root of the mass.
    """
    h = np.diff(x)
    mass = 0.5 * (h[:-1] + h[1:])
    diag = (1.0 / h[:-1] + 1.0 / h[1:]) / mass + v[1:-1]
    off = -1.0 / (h[1:-1] * np.sqrt(mass[:-1] * mass[1:]))
    return diag, off


def fd_eigenvalues(m: ModelSpace, L: float, eps_origin: float, N: int = 6000,
                   upper: float | None = None) -> np.ndarray:
    x = graded_grid(eps_origin, L, N)
    v = np.empty_like(x)
    v[1:-1] = potential_values(m, x[1:-1])
    d, e = schrodinger_matrix(x, v)
    if upper is None:
        return eigvalsh_tridiagonal(d, e)
    return eigvalsh_tridiagonal(d, e, select="v", select_range=(-np.inf, upper))


def fd_count(m: ModelSpace, L: float, E: float, eps_origin: float, N: int = 6000) -> int:
    return int(np.count_nonzero(fd_eigenvalues(m, L, eps_origin, N, upper=E) < E))


def weighted_form_eigenvalues(m: ModelSpace, L: float, N: int = 4000, k: int = 3) -> np.ndarray:
    """Lowest k eigenvalues of -(J^{n-1} h')' / J^{n-1} on [0, L], h(L) = 0.

    Finite volumes on a uniform mesh; the density vanishes at the centre so no
    boundary condition is imposed there.
    """
    r = np.linspace(0.0, L, N + 1)
    dr = r[1] - r[0]
    a = m.n - 1
    mid = 0.5 * (r[:-1] + r[1:])
    log_p = a * m.warping.log_j_at(mid)
    # control volume of node i is [r_i - dr/2, r_i + dr/2] (just [0, dr/2] at the centre)
    lo_e = np.concatenate([[0.0], mid[:-1]])
    hi_e = mid
    log_ref = log_p.max()
    vols = np.zeros(N)
    for xg, wg in zip(*np.polynomial.legendre.leggauss(6)):
        t = 0.5 * (lo_e + hi_e) + 0.5 * (hi_e - lo_e) * xg
        vols += 0.5 * (hi_e - lo_e) * wg * np.exp(a * m.warping.log_j_at(t) - log_ref)
    p = np.exp(log_p - log_ref) / dr
    diag = p.copy()          # flux to the right neighbour; node N carries h = 0
    diag[1:] += p[:-1]
    off = -p[:-1]
    s = 1.0 / np.sqrt(vols)
    return eigvalsh_tridiagonal(diag * s * s, off * s[:-1] * s[1:], select="i",
                                select_range=(0, k - 1))
