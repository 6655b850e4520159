"""Line spectral estimation on top of the AST solver.

Frequencies are read off the dual polynomial ``Q(w) = a(w)^H (y - x*) / tau``
(peaks where ``|Q|`` touches one), coefficients are re-fitted by least squares
on the estimated frequencies, and estimates are scored against ground truth
with an optimal frequency assignment.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import toeplitz

PEAK_EPS = 1e-3
REFINE_STEPS = 5
DUPLICATE_TOL = 1e-6


@dataclass
class LineSpectralProblem:
    y: np.ndarray
    frequencies: np.ndarray
    coefficients: np.ndarray
    sigma2: float
    seed: Optional[int] = None

    @property
    def n(self):
        return self.y.size

    @property
    def k(self):
        return self.frequencies.size

    @property
    def x(self):
        return steering(self.frequencies, self.n) @ self.coefficients


@dataclass
class LineSpectralEstimate:
    frequencies: np.ndarray
    coefficients: np.ndarray
    x: np.ndarray

    @property
    def k(self):
        return self.frequencies.size


@dataclass
class Metrics:
    nmse: float
    success: bool
    freq_mse: Optional[float] = None


def steering(omega, n):
    """Matrix whose columns are ``a(w)`` with ``a(w)_m = exp(i m w)``."""
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    return np.exp(1j * np.outer(np.arange(n), omega))


def select_tau(n, sigma):
    logn = np.log(n)
    return sigma * (logn + 1) / logn * np.sqrt(n * logn + n * np.log(4 * np.pi * logn))


def wrap_distance(a, b):
    """Distance on the circle ``[0, 2 pi)``; broadcasts."""
    d = np.mod(np.asarray(a) - np.asarray(b), 2 * np.pi)
    return np.minimum(d, 2 * np.pi - d)


def dual_polynomial(x_star, y, tau, grid_size=None):
    """``(grid, Q(grid))`` with ``grid = 2 pi p / grid_size``."""
    resid = (np.asarray(y) - np.asarray(x_star)) / tau
    n = resid.size
    grid_size = 32 * toeplitz.next_pow2(n) if grid_size is None else grid_size
    grid = 2 * np.pi * np.arange(grid_size) / grid_size
    return grid, np.fft.fft(resid, grid_size)


def _refine(omega, resid, steps):
    """Newton steps on ``|Q(w)|^2`` toward the nearby maximum."""
    m = np.arange(resid.size)
    spacing = 2 * np.pi / (8 * resid.size)
    for _ in range(steps):
        e = np.exp(-1j * m * omega)
        q = np.sum(resid * e)
        dq = np.sum(-1j * m * resid * e)
        d2q = np.sum(-(m ** 2) * resid * e)
        grad = 2 * np.real(np.conj(q) * dq)
        curv = 2 * (abs(dq) ** 2 + np.real(np.conj(q) * d2q))
        if not curv < 0:
            break
        step = np.clip(-grad / curv, -spacing, spacing)
        omega = omega + step
        if abs(step) < 1e-14:
            break
    return np.mod(omega, 2 * np.pi), abs(np.sum(resid * np.exp(-1j * m * omega)))


def extract_frequencies(x_star, y, tau, grid_size=None, eps_peak=PEAK_EPS, steps=REFINE_STEPS):
    """Frequencies where the dual polynomial has a local peak with ``|Q| >= 1 - eps_peak``."""
    grid, q = dual_polynomial(x_star, y, tau, grid_size)
    mag = np.abs(q)
    peaks = np.flatnonzero((mag >= np.roll(mag, 1)) & (mag > np.roll(mag, -1))
                           & (mag >= 1 - 10 * eps_peak))
    resid = (np.asarray(y) - np.asarray(x_star)) / tau
    found = []
    for p in peaks:
        omega, height = _refine(grid[p], resid, steps)
        if height >= 1 - eps_peak:
            found.append(omega)
    return _collapse(np.sort(np.asarray(found, dtype=float)))


def _collapse(omega, tol=DUPLICATE_TOL):
    """Drop frequencies closer than ``tol`` (circularly) to an already kept one."""
    kept = []
    for w in np.sort(omega):
        if not kept or np.all(wrap_distance(w, np.asarray(kept)) >= tol):
            kept.append(w)
    return np.asarray(kept, dtype=float)


def debias(y, omega):
    """Least-squares coefficients on the steering vectors of ``omega``."""
    y = np.asarray(y, dtype=complex)
    omega = _collapse(np.asarray(omega, dtype=float))
    if omega.size == 0:
        return np.zeros(0, dtype=complex), np.zeros_like(y), omega
    A = steering(omega, y.size)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return coef, A @ coef, omega


def estimate(x_star, y, tau, **kwargs):
    omega = extract_frequencies(x_star, y, tau, **kwargs)
    coef, xhat, omega = debias(y, omega)
    return LineSpectralEstimate(frequencies=omega, coefficients=coef, x=xhat)


def oracle_estimate(problem):
    coef, xhat, omega = debias(problem.y, problem.frequencies)
    return LineSpectralEstimate(frequencies=omega, coefficients=coef, x=xhat)


def match_frequencies(est, true):
    """Optimal assignment minimizing the total squared wrap-around error.

    Returns index arrays ``(i_est, i_true)``.
    """
    est = np.asarray(est, dtype=float)
    true = np.asarray(true, dtype=float)
    cost = wrap_distance(est[:, None], true[None, :]) ** 2
    return linear_sum_assignment(cost)


def nmse(xhat, x):
    energy = np.real(np.vdot(x, x))
    if energy == 0:
        return float("nan")
    r = np.asarray(xhat) - np.asarray(x)
    return float(np.real(np.vdot(r, r)) / energy)


def metrics(estimate, problem):
    """NMSE of the reconstruction plus frequency recovery success and conditional MSE."""
    n = problem.n
    err = nmse(estimate.x, problem.x)
    if estimate.k != problem.k:
        return Metrics(nmse=err, success=False)
    if problem.k == 0:
        return Metrics(nmse=err, success=True, freq_mse=0.0)
    i_est, i_true = match_frequencies(estimate.frequencies, problem.frequencies)
    order = np.argsort(i_true)  # sum in ground-truth order so permuting the estimate changes nothing
    i_est, i_true = i_est[order], i_true[order]
    dist = wrap_distance(estimate.frequencies[i_est], problem.frequencies[i_true])
    if np.any(dist > np.pi / n):
        return Metrics(nmse=err, success=False)
    return Metrics(nmse=err, success=True, freq_mse=float(np.mean(dist ** 2)))
