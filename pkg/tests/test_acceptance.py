"""Acceptance criteria, one test each, at the stated tolerances.

Every test prints a single ``[PASS]``/``[FAIL]`` line with the measured
numbers (visible even when pytest captures output). Run on its own with

    pytest tests/test_acceptance.py -v
"""

import sys
import time

import numpy as np
import pytest

from fastast import cones, harness, lse, solver, toeplitz
from fastast.cones import DualPoint, PrimalPoint
from fastast.objective import ObjectiveContext
from fastast.oracles import (adjoint_loop, finite_difference_gradient, finite_difference_jacobian,
                             random_hermitian, random_pd_param, toeplitz_entrywise)
from fastast.solver import SolverConfig


@pytest.fixture
def report(capsys):
    def emit(criterion, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}")
        assert ok, detail
    return emit


def rel(a, b):
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / max(np.linalg.norm(b), 1e-300))


def tau_for(pr):
    return lse.select_tau(pr.n, np.sqrt(pr.sigma2))


def test_criterion_1_toeplitz_kernels(report):
    rng = np.random.default_rng(1)
    worst = {}
    for n in [4, 8, 16, 32, 64]:
        for _ in range(200):
            u = random_pd_param(n, rng)
            T = toeplitz_entrywise(u)
            dense_inv = np.linalg.inv(T)
            fact = toeplitz.factorize(u, want_cholesky=True)
            b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            B = random_hermitian(n, rng)
            phi = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            errs = {
                "solve": rel(toeplitz.solve(fact, b), np.linalg.solve(T, b)),
                "cholesky": rel(fact.chol @ np.diag(1 / fact.pivots) @ fact.chol.conj().T, dense_inv),
                "logdet": abs(toeplitz.logdet(fact) - np.linalg.slogdet(T)[1])
                / max(1.0, abs(np.linalg.slogdet(T)[1])),
                "adjoint": rel(toeplitz.adjoint(B), adjoint_loop(B)),
                "trace_identity": abs(np.trace(T @ B).real - toeplitz.adjoint(B) @ u)
                / max(1.0, np.abs(toeplitz.adjoint(B)) @ np.abs(u)),
                "rank1_adjoint": rel(toeplitz.rank1_adjoint(phi), adjoint_loop(np.outer(phi, phi.conj()))),
                "inverse_diagonals": rel(toeplitz.trace_of_inverse_diagonals(fact), adjoint_loop(dense_inv)),
                "explicit_inverse": rel(toeplitz.explicit_inverse(fact), dense_inv),
                "trace_inv_sq": abs(toeplitz.trace_inv_sq(fact) - np.sum(np.abs(dense_inv) ** 2))
                / np.sum(np.abs(dense_inv) ** 2),
            }
            for key, val in errs.items():
                worst[key] = max(worst.get(key, 0.0), val)
    ok = max(worst.values()) <= 1e-9
    report(1, ok, "1000 instances, max rel. error " + ", ".join(f"{k}={v:.1e}" for k, v in worst.items())
           + " (limit 1e-9)")


def test_criterion_2_derivatives(report):
    rng = np.random.default_rng(2)
    g_err = h_err = h00_err = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 17))
        y = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        ctx = ObjectiveContext(y, rng.uniform(0.2, 3.0))
        u = random_pd_param(n, rng)
        t = 10 ** rng.uniform(0, 3)
        step = 1e-6 * np.linalg.norm(u)
        grad = ctx.gradient(u, t)
        H = ctx.hessian_full(u, t)
        g_err = max(g_err, rel(finite_difference_gradient(lambda v: ctx.eval(v, t)[0], u, step), grad))
        h_err = max(h_err, rel(finite_difference_jacobian(lambda v: ctx.gradient(v, t), u, step), H))
        h00_err = max(h00_err, abs(ctx.hessian_first_entry(u, t) - H[0, 0]) / abs(H[0, 0]))
    ok = g_err <= 1e-5 and h_err <= 1e-5 and h00_err <= 1e-9
    report(2, ok, f"50 points N<=16: gradient FD rel {g_err:.1e}, Hessian FD rel {h_err:.1e} (limit 1e-5); "
                  f"first entry vs full {h00_err:.1e} (limit 1e-9)")


def test_criterion_3_central_path(report):
    n = 16
    gap_err = resid = grad_res = 0.0
    for seed in range(5):
        pr = harness.generate_problem(n, 2, 20.0, seed)
        tau = tau_for(pr)
        ctx = ObjectiveContext(pr.y, tau)
        u = solver.initialize(ctx, 10.0).point.u
        for t in [10.0, 1e3, 1e5]:
            pt = solver.center(ctx, u, t, tol=1e-10)
            u = pt.u
            grad_res = max(grad_res, solver.gradient_residual(pt, t))
            mu = solver.recover_primal(pt, t)
            lam = solver.recover_dual(mu.x, pr.y, tau, ctx.w)
            gap_err = max(gap_err, abs(cones.inner(lam, mu) * t / (n + 1) - 1))
            # central path: t * lambda = -grad F(mu)
            nb = cones.neg_barrier_gradient(mu)
            lhs = np.concatenate([[t * lam.rho], t * lam.s.real, t * lam.s.imag, t * lam.z])
            rhs = np.concatenate([[nb.rho], nb.s.real, nb.s.imag, nb.z])
            resid = max(resid, rel(lhs, rhs))
    ok = gap_err <= 1e-8 and resid <= 1e-6 and grad_res <= 1e-10
    report(3, ok, f"N=16, t in {{1e1,1e3,1e5}}, 5 instances: <lambda,mu> vs (N+1)/t rel {gap_err:.1e} (limit 1e-8), "
                  f"central-path residual {resid:.1e} (limit 1e-6); reached gradient residual {grad_res:.1e} "
                  f"(target 1e-10)")


def regression_corpus():
    for n in [16, 32, 64]:
        for snr in [10.0, 20.0, 30.0]:
            for seed in range(3):
                yield harness.generate_problem(n, max(1, round(n / 10)), snr, 100 + seed)


def test_criterion_4_solver_bracket(report):
    violations = []
    count = 0
    for pr in regression_corpus():
        tau = tau_for(pr)
        for variant in ["newton", "lbfgs"]:
            cfg = SolverConfig.for_variant(variant)
            res = solver.solve(pr.y, tau, config=cfg)
            count += 1
            if not res.status.converged or res.gap > max(cfg.eps_abs, cfg.eps_rel * res.f_obj):
                violations.append((pr.n, pr.seed, variant, res.status.value, res.gap))
    worst = 0.0
    for seed in range(10):
        pr = harness.generate_problem(32, 3, 20.0, 200 + seed)
        tau = tau_for(pr)
        fn = solver.solve(pr.y, tau, config=SolverConfig.newton()).f_obj
        fl = solver.solve(pr.y, tau, config=SolverConfig.lbfgs()).f_obj
        loose = SolverConfig.lbfgs()
        allowed = max(loose.eps_abs, loose.eps_rel * fn, 1e-4 * fn)
        worst = max(worst, abs(fn - fl) / allowed)
    ok = not violations and worst <= 1.0
    report(4, ok, f"{count} corpus solves, {len(violations)} bracket violations {violations[:3]}; "
                  f"N=32 Newton vs L-BFGS objective difference at most {worst:.2f} of the allowance")


def test_criterion_5_convergence(report):
    newton_iters, lbfgs_iters, failures = [], [], []
    for seed in range(10):
        pr = harness.generate_problem(64, 6, 20.0, seed)
        tau = tau_for(pr)
        rn = solver.solve(pr.y, tau, config=SolverConfig.newton(eps_abs=0.0, eps_rel=1e-7, max_iters=50))
        rl = solver.solve(pr.y, tau, config=SolverConfig.lbfgs(eps_abs=0.0, eps_rel=1e-4, max_iters=400))
        newton_iters.append(rn.iterations)
        lbfgs_iters.append(rl.iterations)
        if not rn.gap <= 1e-7 * rn.f_obj:
            failures.append(("newton", seed, rn.status.value, rn.gap / rn.f_obj))
        if not rl.gap <= 1e-4 * rl.f_obj:
            failures.append(("lbfgs", seed, rl.status.value, rl.gap / rl.f_obj))
    ok = not failures
    report(5, ok, f"N=64, K=6, 20 dB, 10 instances: Newton reached gap<=1e-7 f in {min(newton_iters)}-"
                  f"{max(newton_iters)} iterations (limit 50); L-BFGS reached gap<=1e-4 f in "
                  f"{min(lbfgs_iters)}-{max(lbfgs_iters)} iterations (limit 400); failures {failures}")


def test_criterion_6_estimation_accuracy(report):
    summary = []
    ok = True
    for variant in ["newton", "lbfgs"]:
        cfg = harness.ExperimentConfig(mode="sweep-SNR", n=[64], snr_db=[10.0, 20.0, 30.0], k=6, trials=20,
                                       seed=0, variant=variant)
        records = harness.run_trials(cfg)
        for snr in cfg.snr_db:
            rows = [r for r in records if r.snr_db == snr]
            ratio = np.mean([r.nmse for r in rows]) / np.mean([r.oracle_nmse for r in rows])
            success = np.mean([r.success for r in rows])
            summary.append(f"{variant} {snr:g} dB: NMSE/oracle {ratio:.2f}, success {success:.0%}")
            if snr in (20.0, 30.0) and not ratio <= 3.0:
                ok = False
            if snr == 20.0 and not success >= 0.5:
                ok = False
    report(6, ok, "N=64, K=6, 20 trials: " + "; ".join(summary)
                  + " (limits: ratio <= 3 at 20/30 dB, success >= 50% at 20 dB)")


def test_criterion_7_scaling(report):
    sizes = [64, 128, 256, 512]
    slopes = {}
    medians = {}
    for variant, limit in [("lbfgs", 2.6), ("newton", 3.4)]:
        cfg = harness.ExperimentConfig(mode="sweep-N", n=sizes, snr_db=[20.0], trials=5, seed=0, variant=variant)
        records = harness.run_trials(cfg)
        med = [np.median([r.wall_ms for r in records if r.n == n]) for n in sizes]
        slopes[variant] = (np.polyfit(np.log(sizes), np.log(med), 1)[0], limit)
        medians[variant] = med
    ok = all(s <= lim for s, lim in slopes.values())
    detail = "; ".join(f"{v} slope {s:.2f} (limit {lim}), median ms {[round(m) for m in medians[v]]}"
                       for v, (s, lim) in slopes.items())
    report(7, ok, "N in {64,128,256,512}, 5 trials: " + detail)


def _unit(mu_or_lam):
    if isinstance(mu_or_lam, PrimalPoint):
        scale = np.linalg.norm(mu_or_lam.as_vector())
        return PrimalPoint(mu_or_lam.v / scale, mu_or_lam.x / scale, mu_or_lam.u / scale)
    lam = mu_or_lam
    scale = np.linalg.norm(np.concatenate([[lam.rho], lam.s.real, lam.s.imag, lam.z]))
    return DualPoint(lam.rho / scale, lam.s / scale, lam.z / scale)


def _random_primal(n, rng):
    """Points of K, including boundary ones (singular T(u), zero Schur complement)."""
    boundary = rng.random() < 0.5
    u = random_pd_param(n, rng, loading=0.0 if boundary else 0.1, n_atoms=int(rng.integers(1, n + 1)))
    T = toeplitz_entrywise(u)
    coef = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x = T @ coef  # x in the range of T(u)
    v = np.real(np.vdot(coef, x)) * (1.0 if boundary else 1.0 + rng.exponential(1.0))
    return PrimalPoint(v=v, x=x, u=u)


def _complementary_primal(lam, rng):
    """A single-atom boundary point of K placed where the dual certificate is smallest.

    For ``T(u) = p a a^H`` and ``x = beta a`` the pairing is minimized over
    ``beta`` at ``p Z_c(w) / 2``, so it is as close to zero as the certificate
    spectrum allows.
    """
    n = lam.s.size
    c = cones.dual_certificate(lam)
    grid = 2 * np.pi * np.arange(1 << 14) / (1 << 14)
    w = grid[np.argmin(cones.spectrum(c, grid.size))]
    p = rng.exponential(1.0)
    a = np.exp(1j * w * np.arange(n))
    uc = p * np.exp(-1j * w * np.arange(n))
    u = np.concatenate([[p / 2], uc[1:].real, uc[1:].imag])
    beta = -p * np.vdot(a, lam.s) / (2 * lam.rho)
    return PrimalPoint(v=abs(beta) ** 2 / p, x=beta * a, u=u)


def _random_dual(n, rng):
    rho = rng.exponential(1.0) if rng.random() < 0.9 else 0.0
    s = rng.standard_normal(n) + 1j * rng.standard_normal(n) if rho > 0 else np.zeros(n, complex)
    c = cones.autocorrelation(rng.standard_normal(n) + 1j * rng.standard_normal(n))
    # push some certificates across the boundary of C* so the oracle has to decide
    c[0] += rng.uniform(-0.05, 0.02) * c[0]
    z = c + (toeplitz.rank1_adjoint(s) / (4 * rho) if rho > 0 else 0.0)
    return DualPoint(rho=rho, s=s, z=z)


def test_criterion_8_cone_oracles(report):
    rng = np.random.default_rng(8)
    pairs = rejected = 0
    worst_pair = np.inf
    while pairs < 10_000:
        n = int(rng.integers(1, 17))
        lam = _random_dual(n, rng)
        if not cones.in_dual_cone(lam):
            rejected += 1
            continue
        stress = lam.rho > 0 and rng.random() < 0.3
        mu = _complementary_primal(lam, rng) if stress else _random_primal(n, rng)
        assert cones.in_primal_cone_K(mu, strict=False, tol=1e-9)
        worst_pair = min(worst_pair, cones.inner(_unit(lam), _unit(mu)))
        pairs += 1
    autocorr_ok = sum(cones.in_dual_autocorr(cones.autocorrelation(
        rng.standard_normal(n) + 1j * rng.standard_normal(n))) for n in rng.integers(1, 33, 1000))
    theta_err = 0.0
    interior = 0
    for _ in range(100):
        n = int(rng.integers(1, 17))
        u = random_pd_param(n, rng)
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        v = np.real(np.vdot(x, np.linalg.solve(toeplitz_entrywise(u), x))) + rng.exponential(1.0)
        mu = PrimalPoint(v=v, x=x, u=u)
        lam = cones.neg_barrier_gradient(mu)
        theta_err = max(theta_err, abs(cones.inner(lam, mu) / (n + 1) - 1))
        interior += lam.rho > 0 and cones.spectrum_min(cones.dual_certificate(lam)) > 0
    ok = worst_pair >= -1e-8 and autocorr_ok == 1000 and theta_err <= 1e-8 and interior == 100
    report(8, ok, f"{pairs} accepted pairs ({rejected} candidates rejected): min <lambda,mu> {worst_pair:.1e} "
                  f"(limit -1e-8); autocorrelations accepted {autocorr_ok}/1000; "
                  f"<-grad F, mu> vs N+1 rel {theta_err:.1e}; -grad F in int K* {interior}/100")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
