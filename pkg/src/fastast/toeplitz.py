"""Hermitian Toeplitz algebra for the real parameterization ``T(u)``.

A real vector ``u`` of length ``2N-1`` defines the Hermitian Toeplitz matrix
whose first row is ``(2 u_0, u_1 + i u_N, ..., u_{N-1} + i u_{2N-2})``.
Everything in this module is built around the Levinson-Durbin recursion and
the Gohberg-Semencul representation of ``T(u)^{-1}``; products with Toeplitz
matrices are carried out as circular convolutions of length ``fft_size(N)``.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.fft as sfft


def fft_size(n):
    """Smallest power of two that is ``>= 2n - 1``."""
    target = max(2 * n - 1, 1)
    return 1 << (target - 1).bit_length()


def next_pow2(n):
    return 1 << max(int(n) - 1, 0).bit_length()


def param_size(u):
    """Return ``N`` for a parameter vector of length ``2N-1``."""
    m = np.shape(u)[0]
    if m % 2 != 1:
        raise ValueError(f"parameter vector must have odd length 2N-1, got {m}")
    return (m + 1) // 2


def complexify(u):
    """The complex form ``u_C = (u_0, u_1 + i u_N, ..., u_{N-1} + i u_{2N-2})``."""
    u = np.asarray(u, dtype=float)
    n = param_size(u)
    uc = np.empty(n, dtype=complex)
    uc[0] = u[0]
    uc[1:] = u[1:n] + 1j * u[n:]
    return uc


def realify(uc):
    """Inverse of :func:`complexify`; the imaginary part of ``uc[0]`` is dropped."""
    uc = np.asarray(uc, dtype=complex)
    return np.concatenate([[uc[0].real], uc[1:].real, uc[1:].imag])


def first_row(u):
    row = complexify(u)
    row[0] = 2.0 * row[0].real
    return row


def build_dense(u):
    """Dense ``T(u)``. Meant for small ``N`` and for checking the fast paths."""
    row = first_row(u)
    n = row.size
    idx = np.arange(n)
    offset = idx[None, :] - idx[:, None]
    upper = row[np.abs(offset)]
    return np.where(offset >= 0, upper, np.conj(upper))


def pack_diagonal_sums(beta):
    """Map upper-diagonal sums ``beta_0..beta_{N-1}`` to the real adjoint vector."""
    beta = np.asarray(beta)
    return np.concatenate([[2.0 * beta[0].real], 2.0 * beta[1:].real, 2.0 * beta[1:].imag])


def adjoint(B):
    """``T*(B)``, so that ``trace(T(u) B) = adjoint(B) @ u`` for Hermitian ``B``."""
    B = np.asarray(B)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {B.shape}")
    n = B.shape[0]
    beta = np.array([np.trace(B, offset=k) for k in range(n)])
    return pack_diagonal_sums(beta)


def xcorr(a, b, nfft=None):
    """``c_n = sum_k a_k conj(b_{k+n})`` for ``n = 0..N-1``, along axis 0."""
    a = np.asarray(a)
    b = np.asarray(b)
    n = a.shape[0]
    nfft = fft_size(n) if nfft is None else nfft
    fa = sfft.fft(a, nfft, axis=0, workers=-1)
    fb = sfft.fft(b, nfft, axis=0, workers=-1)
    return np.conj(sfft.ifft(np.conj(fa) * fb, axis=0, workers=-1)[:n])


def rank1_adjoint(phi):
    """``T*(phi phi^H)`` through one FFT autocorrelation."""
    phi = np.asarray(phi, dtype=complex)
    return pack_diagonal_sums(xcorr(phi, phi))


def _embedding(col, row, nfft):
    """FFT of the circulant that embeds the Toeplitz matrix with given column/row."""
    n = col.shape[0]
    c = np.zeros(nfft, dtype=complex)
    c[:n] = col
    if n > 1:
        c[nfft - n + 1:] = row[:0:-1]
    return sfft.fft(c)


def _apply(spectrum, b, n):
    nfft = spectrum.shape[0]
    fb = sfft.fft(b, nfft, axis=0, workers=-1)
    if b.ndim == 2:
        return sfft.ifft(spectrum[:, None] * fb, axis=0, workers=-1)[:n]
    return sfft.ifft(spectrum * fb)[:n]


def matvec(u, b):
    """``T(u) @ b`` via circulant embedding; ``b`` may hold vectors as columns."""
    row = first_row(u)
    b = np.asarray(b)
    n = row.size
    if b.shape[0] != n:
        raise ValueError(f"dimension mismatch: T is {n}x{n}, b has {b.shape[0]} rows")
    spectrum = _embedding(np.conj(row), row, fft_size(n))
    return _apply(spectrum, b, n)


@dataclass
class ToeplitzFactorization:
    """Levinson-Durbin output for a positive definite ``T(u)``.

    ``pivots[n]`` is the n-th Schur complement (so ``log|T| = sum log pivots``),
    ``gs_coeffs`` solves ``T a = pivots[-1] e_{N-1}`` with ``a[-1] = 1`` and
    generates the Gohberg-Semencul factors, and ``chol`` (when requested) is
    the unit upper triangular ``P`` with ``T^{-1} = P diag(1/pivots) P^H``.
    """

    pivots: np.ndarray
    gs_coeffs: np.ndarray
    chol: Optional[np.ndarray] = None
    _spectra: dict = field(default=None, repr=False, compare=False)

    @property
    def n(self):
        return self.pivots.size

    def spectra(self):
        if self._spectra is None:
            a = self.gs_coeffs
            n = a.size
            nfft = fft_size(n)
            zero = np.zeros(n, dtype=complex)
            u_col = zero.copy()
            u_col[0] = a[-1]
            u_row = a[::-1]
            v_col = np.concatenate([[0.0], a[:-1]])
            self._spectra = {
                "U": _embedding(u_col, u_row, nfft),
                "UH": _embedding(np.conj(u_row), np.conj(u_col), nfft),
                "V": _embedding(v_col, zero, nfft),
                "VH": _embedding(zero, np.conj(v_col), nfft),
            }
        return self._spectra


def factorize(u, want_cholesky=False):
    """Levinson-Durbin factorization of ``T(u)``.

    Returns ``None`` as soon as a pivot is not strictly positive, i.e. exactly
    when ``T(u)`` is not positive definite. That outcome is routine (the line
    search probes infeasible points) and is therefore not an exception.
    """
    t = first_row(u)
    n = t.size
    d = t[0].real
    if not d > 0.0:
        return None
    pivots = np.empty(n)
    pivots[0] = d
    chol = None
    if want_cholesky:
        chol = np.zeros((n, n), dtype=complex)
        chol[0, 0] = 1.0
    f = np.ones(1, dtype=complex)  # forward predictor: T_n f = d e_0
    b = f
    tc = np.conj(t)
    for k in range(1, n):
        eps = np.dot(tc[k:0:-1], f)
        refl = -eps / d
        f = np.append(f, 0.0)
        f[1:] += refl * b
        d = d * (1.0 - (refl.real ** 2 + refl.imag ** 2))
        if not d > 0.0:
            return None
        pivots[k] = d
        b = np.conj(f[::-1])  # backward predictor: T_n b = d e_n
        if chol is not None:
            chol[:k + 1, k] = b
    return ToeplitzFactorization(pivots=pivots, gs_coeffs=b.copy(), chol=chol)


def solve(fact, b):
    """``T^{-1} b`` from four FFT-based triangular Toeplitz products."""
    b = np.asarray(b, dtype=complex)
    n = fact.n
    if b.shape[0] != n:
        raise ValueError(f"dimension mismatch: T is {n}x{n}, b has {b.shape[0]} rows")
    sp = fact.spectra()
    first = _apply(sp["UH"], _apply(sp["U"], b, n), n)
    second = _apply(sp["V"], _apply(sp["VH"], b, n), n)
    return (first - second) / fact.pivots[-1]


def logdet(fact):
    return float(np.sum(np.log(fact.pivots)))


def trace_of_inverse_diagonals(fact):
    """``T*(T^{-1})`` from two correlations of the Gohberg-Semencul coefficients."""
    a = fact.gs_coeffs
    n = a.size
    k = np.arange(n)
    beta = ((k - n + 2) * xcorr(a, a) + 2.0 * xcorr(k * a, a)) / fact.pivots[-1]
    return pack_diagonal_sums(beta)


def _inverse_diagonals(fact):
    """Upper diagonals of ``T^{-1}``; entry ``[n][m]`` is ``(T^{-1})_{m, m+n}``."""
    a = fact.gs_coeffs
    n = a.size
    rev = a[::-1]
    shifted = np.concatenate([[0.0], a[:-1]])
    diags = []
    for lag in range(n):
        length = n - lag
        half = (length + 1) // 2
        terms = (np.conj(rev[:half]) * rev[lag:lag + half]
                 - shifted[:half] * np.conj(shifted[lag:lag + half]))
        wedge = np.cumsum(terms) / fact.pivots[-1]
        # persymmetry: (T^{-1})_{m,m+n} = (T^{-1})_{N-1-n-m, N-1-m}
        diag = np.empty(length, dtype=complex)
        diag[:half] = wedge
        diag[half:] = wedge[:length - half][::-1]
        diags.append(diag)
    return diags


def explicit_inverse(fact):
    """Dense ``T^{-1}`` formed along its diagonals in ``O(N^2)``."""
    n = fact.n
    out = np.empty((n, n), dtype=complex)
    idx = np.arange(n)
    for lag, diag in enumerate(_inverse_diagonals(fact)):
        rows = idx[:n - lag]
        out[rows, rows + lag] = diag
        out[rows + lag, rows] = np.conj(diag)
    return out


def trace_inv_sq(fact):
    """``trace(T^{-1} T^{-1}) = sum |T^{-1}_{nm}|^2``."""
    diags = _inverse_diagonals(fact)
    total = np.sum(np.abs(diags[0]) ** 2)
    for diag in diags[1:]:
        total += 2.0 * np.sum(np.abs(diag) ** 2)
    return float(total)
