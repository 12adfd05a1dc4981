"""Linear stability of stationary profiles: ``lambda^2 chi = chi'' - V''(u*) chi``.

All profiles here are even or odd, so ``V''(u*)`` is even and the operator
commutes with ``x -> -x``.  The eigenproblem is solved separately on the
even and odd subspaces: edge modes near ``+-x_s`` are degenerate to far
below machine precision, and without the split the solver returns
arbitrary left/right mixtures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import CubicSpline
from scipy.linalg import eigh

from .grid import Grid, StencilOperator
from .model import SimParams, potential_d2u
from .stationary import StationaryProfile, newton_solve, solve_kink, stationary_kak

TOL_ZERO = 1e-8

_PARITY_OF_KIND = {"ground": "even", "kink_antikink": "even", "kink": "odd", "antikink": "odd"}


class EigenSolverError(RuntimeError):
    pass


@dataclass
class SpectrumResult:
    grid: Grid
    mu: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns, orthonormal for l2_inner
    parity: np.ndarray  # +1 even, -1 odd
    profile: np.ndarray
    omega: float
    tol_zero: float = TOL_ZERO

    @property
    def lambda_pairs(self) -> np.ndarray:
        """``(k, 2)`` complex array of ``(+sqrt(mu), -sqrt(mu))``."""
        root = np.sqrt(self.mu.astype(complex))
        return np.stack([root, -root], axis=1)

    @property
    def n_unstable(self) -> int:
        return int(np.sum(self.mu > self.tol_zero))

    @property
    def max_real_lambda(self) -> float:
        return float(np.max(np.sqrt(np.clip(self.mu, 0.0, None))))

    def spectral_plane(self) -> np.ndarray:
        """All eigenvalues as ``(Re lambda, Im lambda)`` rows, both signs."""
        lam = self.lambda_pairs.ravel()
        return np.column_stack([lam.real, lam.imag])

    def unstable_rates(self) -> np.ndarray:
        return np.sqrt(self.mu[self.mu > self.tol_zero])


def trapezoid_weights(n: int) -> np.ndarray:
    w = np.ones(n)
    w[0] = w[-1] = 0.5
    return w


def l2_inner(f, g, grid: Grid) -> float:
    """Trapezoid inner product, the one the eigenvectors are orthonormal in."""
    return float(grid.dx * np.sum(trapezoid_weights(grid.n) * f * g))


def linearization_matrix(u: np.ndarray, grid: Grid, omega: float) -> sp.csr_matrix:
    """``L = D2 - diag(V''(u))`` before symmetrisation."""
    op = StencilOperator(grid)
    return (op.matrix - sp.diags(potential_d2u(u, grid.nodes, omega))).tocsr()


def _parity_basis(m: int, parity: int) -> sp.csr_matrix:
    """Orthonormal (Euclidean) basis of even (+1) or odd (-1) grid vectors."""
    n = 2 * m + 1
    r = 1.0 / np.sqrt(2.0)
    j = np.arange(1, m + 1)
    if parity > 0:
        rows = np.concatenate([[m], m + j, m - j])
        cols = np.concatenate([[0], j, j])
        vals = np.concatenate([[1.0], np.full(m, r), np.full(m, r)])
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, m + 1))
    rows = np.concatenate([m + j, m - j])
    cols = np.concatenate([j - 1, j - 1])
    vals = np.concatenate([np.full(m, r), np.full(m, -r)])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, m))


def _coarsen(profile: StationaryProfile, spectral_dx: float, tol: float, max_iter: int):
    grid = profile.grid
    if spectral_dx < grid.dx * (1 - 1e-12):
        raise ValueError("spectral_dx must not be finer than the profile grid")
    coarse = Grid.symmetric(grid.x_max, spectral_dx)
    if abs(coarse.x_max - grid.x_max) > 1e-9:
        raise ValueError("spectral_dx must divide the domain half-width")
    stride = spectral_dx / grid.dx
    if abs(stride - round(stride)) < 1e-9:
        s = int(round(stride))
        k = np.arange(-coarse.m, coarse.m + 1) * s + grid.m
        seed = profile.u[k]
    else:
        seed = CubicSpline(grid.nodes, profile.u)(coarse.nodes)
    if coarse.m == grid.m:
        return profile.u.copy(), coarse
    parity = _PARITY_OF_KIND.get(profile.kind)
    u, _, _ = newton_solve(seed, coarse, profile.omega, tol, max_iter, parity=parity)
    return u, coarse


def linearization_spectrum(profile: StationaryProfile, spectral_dx: float | None = 0.04,
                           tol_zero: float = TOL_ZERO, polish_tol: float = 1e-10,
                           max_iter: int = 50) -> SpectrumResult:
    """Spectrum of the linearisation about ``profile``.

    The profile is restricted to the ``spectral_dx`` grid and re-converged
    there, so the operator is linearised about an exact discrete solution.
    """
    if spectral_dx is None:
        spectral_dx = profile.grid.dx
    u, grid = _coarsen(profile, spectral_dx, polish_tol, max_iter)
    L = linearization_matrix(u, grid, profile.omega)
    # The mirror edge closure is self-adjoint for trapezoid weights, so a
    # diagonal similarity makes L exactly symmetric without changing mu.
    sw = np.sqrt(trapezoid_weights(grid.n))
    L = sp.diags(sw) @ L @ sp.diags(1.0 / sw)
    L = 0.5 * (L + L.T)
    mus, vecs, pars = [], [], []
    for parity in (1, -1):
        B = _parity_basis(grid.m, parity)
        block = (B.T @ L @ B).toarray()
        try:
            w, y = eigh(block)
        except np.linalg.LinAlgError as exc:
            raise EigenSolverError(str(exc)) from exc
        mus.append(w)
        vecs.append(B @ y)
        pars.append(np.full(w.size, parity))
    mu = np.concatenate(mus)
    V = np.concatenate(vecs, axis=1) / (sw[:, None] * np.sqrt(grid.dx))
    par = np.concatenate(pars)
    order = np.argsort(-mu, kind="stable")
    return SpectrumResult(grid, mu[order], V[:, order], par[order], u, profile.omega, tol_zero)


def stationary_kak_spectrum(params: SimParams, spectral_dx: float = 0.04) -> SpectrumResult:
    return linearization_spectrum(stationary_kak(params).profile, spectral_dx)


def kink_spectrum(params: SimParams, spectral_dx: float = 0.04) -> SpectrumResult:
    return linearization_spectrum(solve_kink(params), spectral_dx)


def extract_chi1(kink_spectrum: SpectrumResult, parity: str | None = "odd",
                 mode_index: int = 0, x_ref: float | None = None) -> np.ndarray:
    """Lowest-frequency oscillatory mode of the kink linearisation.

    Picks the ``mode_index``-th largest strictly negative ``mu`` among modes
    of the requested parity.  ``parity="odd"`` is the default because only an
    odd ``chi_1`` makes the pair ansatz ``chi_1(x+X) - chi_1(x-X)`` even.
    Sign: positive at the node nearest ``x_ref`` (default ``+x_s``).
    """
    s = kink_spectrum
    mask = s.mu < -s.tol_zero
    if parity is not None:
        mask &= s.parity == (1 if parity == "even" else -1)
    idx = np.nonzero(mask)[0]
    if idx.size <= mode_index:
        raise ValueError("no negative eigenvalue of the requested parity")
    chi = s.eigenvectors[:, idx[mode_index]].copy()
    x = s.grid.nodes
    if x_ref is None:
        x_ref = 2.0 / s.omega if s.omega > 0 else 0.0
    k = int(np.argmin(np.abs(x - x_ref)))
    ref = chi[k]
    if abs(ref) < 1e-6 * np.max(np.abs(chi)):
        pos = x > 0
        ref = chi[pos][np.argmax(np.abs(chi[pos]))]
    if ref < 0:
        chi = -chi
    return chi / np.sqrt(l2_inner(chi, chi, s.grid))


def chi1_frequency(kink_spectrum: SpectrumResult, parity: str | None = "odd",
                   mode_index: int = 0) -> float:
    s = kink_spectrum
    mask = s.mu < -s.tol_zero
    if parity is not None:
        mask &= s.parity == (1 if parity == "even" else -1)
    return float(np.sqrt(-s.mu[np.nonzero(mask)[0][mode_index]]))
