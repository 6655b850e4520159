"""Dense reference computations used to check the structured fast paths.

These are deliberately naive (explicit loops, dense inverses, explicit shift
matrices) and share no code with the fast kernels apart from trivial index
conventions. They are exported so every module's tests can use them.
"""

import numpy as np


def toeplitz_entrywise(u):
    """``T(u)`` assembled entry by entry from the complex parameterization."""
    u = np.asarray(u, dtype=float)
    n = (u.size + 1) // 2
    T = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            k = abs(j - i)
            if k == 0:
                val = 2.0 * u[0]
            else:
                val = u[k] + 1j * u[n - 1 + k]
            T[i, j] = val if j >= i else np.conj(val)
    return T


def basis_matrix(n, idx):
    """``T(e_idx)`` built from explicit shift matrices ``E + E^H``."""
    shift = np.eye(n, k=-1)
    if idx == 0:
        E = np.eye(n, dtype=complex)
    elif idx < n:
        E = np.linalg.matrix_power(shift, idx).astype(complex)
    else:
        E = -1j * np.linalg.matrix_power(shift, idx - n + 1)
    return E + E.conj().T


def adjoint_loop(B):
    """``T*(B)`` by explicit diagonal sums."""
    B = np.asarray(B)
    n = B.shape[0]
    beta = np.zeros(n, dtype=complex)
    for k in range(n):
        for m in range(n - k):
            beta[k] += B[m, m + k]
    return np.concatenate([[2 * beta[0].real], 2 * beta[1:].real, 2 * beta[1:].imag])


def random_hermitian(n, rng):
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (A + A.conj().T) / 2


def random_pd_param(n, rng, loading=0.1, n_atoms=None):
    """A parameter ``u`` with ``T(u) = sum_k p_k a_k a_k^H + loading * scale * I``."""
    n_atoms = n if n_atoms is None else n_atoms
    omega = rng.uniform(0, 2 * np.pi, n_atoms)
    power = rng.exponential(1.0, n_atoms)
    lags = np.arange(n)
    uc = (power[None, :] * np.exp(1j * np.outer(lags, omega))).sum(axis=1)
    uc[0] = uc[0].real * (1.0 + loading)
    u = np.concatenate([[uc[0].real / 2], uc[1:].real, uc[1:].imag])
    return u


def dense_objective(u, y, tau, t, w=None):
    """``(h, g, G)`` of the barrier objective with dense algebra."""
    u = np.asarray(u, dtype=float)
    n = (u.size + 1) // 2
    w = _default_w(n) if w is None else w
    T = toeplitz_entrywise(u)
    Ttau = T + tau * np.eye(n)
    g = tau * w @ u + tau * np.real(np.conj(y) @ np.linalg.solve(Ttau, y))
    sign, ld = np.linalg.slogdet(T)
    if sign.real <= 0 or np.min(np.linalg.eigvalsh(T)) <= 0:
        raise ValueError("T(u) is not positive definite")
    G = -ld
    return g + G / t, g, G


def dense_gradient(u, y, tau, t, w=None):
    """Gradient of ``h_t`` from the trace formulas with dense inverses."""
    u = np.asarray(u, dtype=float)
    n = (u.size + 1) // 2
    w = _default_w(n) if w is None else w
    T = toeplitz_entrywise(u)
    Ti = np.linalg.inv(T)
    phi = np.linalg.solve(T + tau * np.eye(n), y)
    grad_g = np.array([tau * w[k] - tau * np.real(np.conj(phi) @ basis_matrix(n, k) @ phi)
                       for k in range(2 * n - 1)])
    grad_G = np.array([-np.real(np.trace(Ti @ basis_matrix(n, k))) for k in range(2 * n - 1)])
    return grad_g + grad_G / t


def dense_hessians(u, y, tau):
    """``(hess_g, hess_G)`` from the entrywise trace formulas with explicit ``E_n``."""
    u = np.asarray(u, dtype=float)
    n = (u.size + 1) // 2
    T = toeplitz_entrywise(u)
    Ti = np.linalg.inv(T)
    Ttau_i = np.linalg.inv(T + tau * np.eye(n))
    phi = Ttau_i @ y
    m = 2 * n - 1
    basis = [basis_matrix(n, k) for k in range(m)]
    Hg = np.empty((m, m))
    HG = np.empty((m, m))
    for i in range(m):
        for j in range(m):
            Hg[i, j] = 2 * tau * np.real(np.conj(phi) @ basis[i] @ Ttau_i @ basis[j] @ phi)
            HG[i, j] = np.real(np.trace(Ti @ basis[i] @ Ti @ basis[j]))
    return Hg, HG


def finite_difference_gradient(fun, u, step):
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    for k in range(u.size):
        e = np.zeros_like(u)
        e[k] = step
        out[k] = (fun(u + e) - fun(u - e)) / (2 * step)
    return out


def finite_difference_jacobian(fun, u, step):
    u = np.asarray(u, dtype=float)
    cols = []
    for k in range(u.size):
        e = np.zeros_like(u)
        e[k] = step
        cols.append((fun(u + e) - fun(u - e)) / (2 * step))
    return np.column_stack(cols)


def _default_w(n):
    w = np.zeros(2 * n - 1)
    w[0] = 2.0
    return w
