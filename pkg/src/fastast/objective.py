"""Barrier objective ``h_t(u) = g(u) + G(u) / t`` and its derivatives.

``g(u) = tau w^T u + tau y^H (T(u) + tau I)^{-1} y`` and ``G(u) = -log|T(u)|``.
Both only need factorizations of ``T(u)`` and ``T(u) + tau I``; these are
computed once per point and cached on an :class:`ObjectivePoint`.
"""

from functools import cached_property

import numpy as np
import scipy.fft as sfft

from . import toeplitz


class NotPositiveDefinite(ValueError):
    """Raised when an objective quantity is requested outside ``int C``."""


def ast_weight(n):
    """``w = 2 e_0``, the weight that turns the conic program into AST."""
    w = np.zeros(2 * n - 1)
    w[0] = 2.0
    return w


def diag_scaling(n):
    """Relative weights ``(1, (N-1)/2N, ..., 1/2N, (N-1)/2N, ..., 1/2N)``."""
    tail = np.arange(n - 1, 0, -1) / (2.0 * n)
    return np.concatenate([[1.0], tail, tail])


def _basis_products(phi):
    """Columns ``T(e_m) phi`` for all ``m = 0..2N-2``."""
    n = phi.size
    out = np.zeros((n, 2 * n - 1), dtype=complex)
    out[:, 0] = 2.0 * phi
    for k in range(1, n):
        down = np.zeros(n, dtype=complex)
        up = np.zeros(n, dtype=complex)
        down[k:] = phi[:n - k]
        up[:n - k] = phi[k:]
        out[:, k] = down + up
        out[:, n - 1 + k] = -1j * down + 1j * up
    return out


class ObjectivePoint:
    """Cached evaluation of the objective pieces at one ``u`` in ``int C``."""

    def __init__(self, ctx, u, fact, fact_tau):
        self.ctx = ctx
        self.u = u
        self.fact = fact
        self.fact_tau = fact_tau
        self.phi = toeplitz.solve(fact_tau, ctx.y)
        tau = ctx.tau
        self.g = float(tau * ctx.w @ u + tau * np.real(np.vdot(ctx.y, self.phi)))
        self.G = -toeplitz.logdet(fact)

    def h(self, t):
        return self.g + self.G / t

    @cached_property
    def grad_g(self):
        return self.ctx.tau * (self.ctx.w - toeplitz.rank1_adjoint(self.phi))

    @cached_property
    def grad_G(self):
        return -toeplitz.trace_of_inverse_diagonals(self.fact)

    def gradient(self, t):
        return self.grad_g + self.grad_G / t

    @cached_property
    def hess_first_g(self):
        tau_phi = toeplitz.solve(self.fact_tau, self.phi)
        return float(8.0 * self.ctx.tau * np.real(np.vdot(self.phi, tau_phi)))

    @cached_property
    def hess_first_G(self):
        return 4.0 * toeplitz.trace_inv_sq(self.fact)

    def hessian_first_entry(self, t):
        return self.hess_first_g + self.hess_first_G / t

    def hessian_diag_approx(self, t):
        return diag_scaling(self.phi.size) * self.hessian_first_entry(t)

    @cached_property
    def hess_g(self):
        phi = self.phi
        n = phi.size
        d = toeplitz.solve(self.fact_tau, _basis_products(phi))
        nfft = toeplitz.fft_size(n)
        # sum of the correlations of (d_m, phi) and (phi, d_m), sharing one inverse FFT
        fd = sfft.fft(d, nfft, axis=0, workers=-1)
        fp = sfft.fft(phi, nfft)[:, None]
        beta = np.conj(sfft.ifft(np.conj(fd) * fp + np.conj(fp) * fd, axis=0, workers=-1)[:n])
        H = self.ctx.tau * np.vstack([2.0 * beta[:1].real, 2.0 * beta[1:].real, 2.0 * beta[1:].imag])
        return (H + H.T) / 2

    @cached_property
    def hess_G(self):
        if self.fact.chol is None:
            raise ValueError("full barrier Hessian needs the Cholesky columns; factorize with want_cholesky")
        n = self.fact.n
        nfft = toeplitz.fft_size(n)
        R = self.fact.chol / np.sqrt(self.fact.pivots)[None, :]
        S = sfft.fft(R, nfft, axis=0, workers=-1)
        Z = S @ S.conj().T
        M = (Z * np.conj(Z)).real
        scale = 2.0 / nfft ** 2
        FM = sfft.fft(M, axis=0, workers=-1)[:n]
        A = scale * sfft.fft(FM, axis=1, workers=-1)[:, :n]
        B = scale * nfft * sfft.ifft(FM, axis=1, workers=-1)[:, :n]
        cross = (A - B).imag[:, 1:]
        H = np.block([[(A + B).real, cross],
                      [cross.T, (B - A).real[1:, 1:]]])
        return (H + H.T) / 2

    def hessian_full(self, t):
        return self.hess_g + self.hess_G / t


class ObjectiveContext:
    """Problem data ``(y, tau, w)`` plus a small cache of evaluated points."""

    def __init__(self, y, tau, w=None, cache_size=4):
        self.y = np.asarray(y, dtype=complex)
        self.n = self.y.size
        if tau <= 0:
            raise ValueError("tau must be positive")
        self.tau = float(tau)
        self.w = ast_weight(self.n) if w is None else np.asarray(w, dtype=float)
        if self.w.size != 2 * self.n - 1:
            raise ValueError("w must have length 2N-1")
        self._cache = {}
        self._cache_size = cache_size

    def try_at(self, u, want_cholesky=False):
        """Point at ``u`` or ``None`` when ``u`` is not in ``int C``."""
        u = np.asarray(u, dtype=float)
        key = u.tobytes()
        pt = self._cache.get(key)
        if pt is not None and (pt.fact.chol is not None or not want_cholesky):
            return pt
        fact = toeplitz.factorize(u, want_cholesky)
        if fact is None:
            return None
        shifted = u.copy()
        shifted[0] += self.tau / 2
        fact_tau = toeplitz.factorize(shifted)
        if fact_tau is None:
            return None
        pt = ObjectivePoint(self, u, fact, fact_tau)
        if len(self._cache) >= self._cache_size:
            self._cache.pop(next(iter(self._cache)))
        self._cache[key] = pt
        return pt

    def at(self, u, want_cholesky=False):
        pt = self.try_at(u, want_cholesky)
        if pt is None:
            raise NotPositiveDefinite("u is not in the interior of C")
        return pt

    def eval(self, u, t):
        """``(h_t(u), g(u), G(u))``."""
        pt = self.at(u)
        return pt.h(t), pt.g, pt.G

    def gradient(self, u, t):
        return self.at(u).gradient(t)

    def gradient_parts(self, u):
        pt = self.at(u)
        return pt.grad_g, pt.grad_G

    def hessian_full(self, u, t):
        return self.at(u, want_cholesky=True).hessian_full(t)

    def hessian_first_entry(self, u, t):
        return self.at(u).hessian_first_entry(t)

    def hessian_diag_approx(self, u, t):
        return self.at(u).hessian_diag_approx(t)
