"""Membership oracles for the primal cone ``K``, its dual, and the Toeplitz cones.

``C`` is the cone of parameters with ``T(u)`` positive semidefinite and its
dual ``C*`` is the set of finite autocorrelation sequences. Membership in
``C*`` is decided by sampling the sequence's Fourier transform on an FFT grid
and polishing the lowest sampled minima with a few Newton steps, since the
true minimum can sit between grid points. The tolerance is relative to
``max(1, Z(0))``.
"""

from dataclasses import dataclass

import numpy as np

from . import toeplitz

DEFAULT_TOL = 1e-9
REFINE_CANDIDATES = 16
REFINE_STEPS = 6


@dataclass
class PrimalPoint:
    v: float
    x: np.ndarray
    u: np.ndarray

    def as_vector(self):
        """Real stacking ``(v, Re x, Im x, u)`` used for distances between points."""
        return np.concatenate([[self.v], self.x.real, self.x.imag, self.u])


@dataclass
class DualPoint:
    rho: float
    s: np.ndarray
    z: np.ndarray


def inner(lam, mu):
    """``<lambda, mu> = rho v + Re(s^H x) + z^T u``."""
    return float(lam.rho * mu.v + np.real(np.vdot(lam.s, mu.x)) + lam.z @ mu.u)


def default_grid_size(n):
    return 16 * toeplitz.next_pow2(n)


def _spectrum_coeffs(z):
    zc = toeplitz.complexify(z)
    coeffs = 2.0 * zc
    coeffs[0] = zc[0].real
    return coeffs


def spectrum(z, grid_size=None):
    """Samples of ``Z(w) = z_C[0] + 2 sum_k Re(z_C[k] exp(-i w k))`` on ``2 pi p / grid_size``."""
    coeffs = _spectrum_coeffs(z)
    n = coeffs.size
    grid_size = default_grid_size(n) if grid_size is None else grid_size
    if grid_size < 2 * n - 1:
        raise ValueError(f"grid_size must be >= 2N-1 = {2 * n - 1}")
    return np.fft.fft(coeffs, grid_size).real


def _polish_minima(coeffs, samples, count=REFINE_CANDIDATES, steps=REFINE_STEPS):
    """Lowest value of ``Z`` found by Newton steps started at the lowest sampled local minima."""
    L = samples.size
    local = np.flatnonzero((samples <= np.roll(samples, 1)) & (samples <= np.roll(samples, -1)))
    if local.size == 0:
        return float(samples.min())
    local = local[np.argsort(samples[local])[:count]]
    k = np.arange(coeffs.size)
    spacing = 2 * np.pi / L
    omega = 2 * np.pi * local / L
    best = samples[local]
    for _ in range(steps):
        e = np.exp(-1j * np.outer(omega, k))
        d1 = np.real(e @ (-1j * k * coeffs))
        d2 = np.real(e @ (-(k ** 2) * coeffs))
        step = np.where(d2 > 0, -d1 / np.where(d2 > 0, d2, 1.0), 0.0)
        omega = omega + np.clip(step, -spacing, spacing)
        vals = np.real(np.exp(-1j * np.outer(omega, k)) @ coeffs)
        best = np.minimum(best, vals)
    return float(min(best.min(), samples.min()))


def spectrum_min(z, grid_size=None, refine=True):
    """Minimum of ``Z``; sampled, then polished off-grid unless ``refine`` is false."""
    samples = spectrum(z, grid_size)
    if not refine:
        return float(samples.min())
    return _polish_minima(_spectrum_coeffs(z), samples)


def autocorrelation(q):
    """Real parameter vector of the finite autocorrelation sequence generated by ``q``."""
    q = np.asarray(q, dtype=complex)
    zc = toeplitz.xcorr(np.conj(q), np.conj(q))
    return toeplitz.realify(zc)


def in_dual_autocorr(z, tol=DEFAULT_TOL, grid_size=None):
    """Test for ``z`` in ``C*`` through the (polished) minimum of its spectrum."""
    samples = spectrum(z, grid_size)
    scale = max(1.0, samples[0])
    if samples.min() < -tol * scale:
        return False
    return bool(_polish_minima(_spectrum_coeffs(z), samples) >= -tol * scale)


def in_primal_cone(u, strict=True, tol=DEFAULT_TOL):
    """``u`` in ``int C`` (pivot test) or, non-strictly, in ``C`` (dense eigenvalues)."""
    if strict:
        return toeplitz.factorize(u) is not None
    eig = np.linalg.eigvalsh(toeplitz.build_dense(u))
    return bool(eig.min() >= -tol * max(1.0, abs(eig).max()))


def dual_certificate(lam):
    """``c(lambda) = z - T*(s s^H) / (4 rho)``, the vector that must lie in ``C*``."""
    return lam.z - toeplitz.rank1_adjoint(lam.s) / (4.0 * lam.rho)


def in_dual_cone(lam, tol=DEFAULT_TOL, grid_size=None):
    if lam.rho < 0:
        return False
    if lam.rho == 0:
        return bool(not np.any(lam.s)) and in_dual_autocorr(lam.z, tol, grid_size)
    return in_dual_autocorr(dual_certificate(lam), tol, grid_size)


def _schur(fact, mu):
    """``(T^{-1} x, v - x^H T^{-1} x)`` with one step of iterative refinement on the solve.

    Near the boundary of ``C`` the Schur complement is a small difference of
    large numbers, so the extra accuracy of the refined solve matters.
    """
    xi = toeplitz.solve(fact, mu.x)
    xi = xi + toeplitz.solve(fact, mu.x - toeplitz.matvec(mu.u, xi))
    return xi, mu.v - np.real(np.vdot(mu.x, xi))


def in_primal_cone_K(mu, strict=True, tol=DEFAULT_TOL):
    if strict:
        fact = toeplitz.factorize(mu.u)
        if fact is None:
            return False
        return bool(_schur(fact, mu)[1] > 0)
    n = mu.x.size
    M = np.empty((n + 1, n + 1), dtype=complex)
    M[:n, :n] = toeplitz.build_dense(mu.u)
    M[:n, n] = mu.x
    M[n, :n] = np.conj(mu.x)
    M[n, n] = mu.v
    eig = np.linalg.eigvalsh(M)
    return bool(eig.min() >= -tol * max(1.0, abs(eig).max()))


def barrier(mu):
    """``F(mu) = -log|T(u)| - log(v - x^H T^{-1}(u) x)``; ``inf`` outside ``int K``."""
    fact = toeplitz.factorize(mu.u)
    if fact is None:
        return np.inf
    schur = _schur(fact, mu)[1]
    if not schur > 0:
        return np.inf
    return -toeplitz.logdet(fact) - np.log(schur)


def neg_barrier_gradient(mu):
    """``-grad F(mu)`` as a dual point; requires ``mu`` in ``int K``."""
    fact = toeplitz.factorize(mu.u)
    if fact is None:
        raise ValueError("mu is not in the interior of K")
    xi, schur = _schur(fact, mu)
    if not schur > 0:
        raise ValueError("mu is not in the interior of K")
    z = toeplitz.trace_of_inverse_diagonals(fact) + toeplitz.rank1_adjoint(xi) / schur
    return DualPoint(rho=1.0 / schur, s=-2.0 * xi / schur, z=z)
