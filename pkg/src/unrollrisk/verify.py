"""Registered oracle batteries behind the `verify` CLI subcommand.

Each suite re-derives a family of results by an independent route (Monte
Carlo sampling, multistart numeric minimization, constructive spectral
closure, finite differences) and reports per-check deviations. These are
fast spot-check versions of the batteries the test suite runs in full.
"""

from __future__ import annotations

import numpy as np

from .estimators import Regularizer, UnrollConfig, bilevel_estimator, unroll_estimator
from .experiment import unrolled_loss_and_grads
from .expressivity import membership_bilevel, membership_unrolling, rho
from .model import KIND_CONST, KIND_IID, ModelParams, make_rng
from .optimal import unrolling_optimal
from .oracles import minimize_risk_over_regularizer
from .risk import mc_risk, true_risk


def _random_params(rng, n: int | None = None, kind: str | None = None) -> ModelParams:
    n = n or int(rng.integers(1, 7))
    kind = kind or (KIND_CONST if rng.random() < 0.5 else KIND_IID)
    mu, theta, sigma = rng.uniform(0.2, 1.5, size=3)
    return ModelParams(n=n, mu=float(mu), theta2=float(theta) ** 2,
                       sigma2=float(sigma) ** 2, kind=kind)


def suite_mc_risk(seed: int, cases: int = 50, samples: int = 200_000) -> dict:
    """Monte Carlo risk vs. closed form; >= 47/50 must land within 3 SE."""
    rng = make_rng(seed)
    checks = []
    hits = 0
    for i in range(cases):
        params = _random_params(rng)
        t = rng.normal(0.0, 1.0, size=(params.n, params.n)) / max(1, params.n)
        closed = true_risk(t, params).value
        est = mc_risk(t, params, samples, seed * 7919 + i)
        dev = abs(est.mean - closed)
        ok = dev <= 3.0 * est.std_error
        hits += ok
        checks.append({"name": f"mc-{i}", "passed": bool(ok),
                       "deviation": dev, "std_error": est.std_error})
    return {"suite": "mc-risk", "seed": seed, "passed": hits >= cases - 3,
            "hits": hits, "cases": cases, "checks": checks}


def suite_unrolling_optimal_small(seed: int) -> dict:
    """Closed-form best unrolling risk vs. multistart numeric minimization."""
    rng = make_rng(seed)
    checks = []
    all_ok = True
    for n in (1, 2, 3):
        for k in range(1, n + 1):
            for depth in (1, 2, 3):
                params = _random_params(rng, n=n)
                omega = 0.9
                target = unrolling_optimal(params, k, depth, omega).risk
                found, _ = minimize_risk_over_regularizer(
                    params, k, "unroll", depth=depth, omega=omega,
                    restarts=12, seed=seed + 13 * n + k)
                rel = abs(found - target) / max(target, 1e-300)
                ok = rel <= 1e-4
                all_ok &= ok
                checks.append({"name": f"n{n}-k{k}-N{depth}-{params.kind}",
                               "passed": bool(ok), "deviation": rel})
    return {"suite": "unrolling-optimal-small", "seed": seed,
            "passed": bool(all_ok), "checks": checks}


def suite_membership_closure(seed: int, cases: int = 50) -> dict:
    """Constructively built estimators must pass their own membership test."""
    rng = make_rng(seed)
    checks = []
    all_ok = True
    for i in range(cases):
        n = int(rng.integers(1, 10))
        k = int(rng.integers(1, n + 1))
        reg = Regularizer(rng.normal(0.0, 1.0, size=(k, n)))
        depth = int(rng.integers(1, 9))
        omega = float(rng.uniform(0.05, 1.95))
        if rng.random() < 0.5:
            verdict = membership_bilevel(bilevel_estimator(reg), k)
            name = f"bilevel-{i}"
        else:
            est = unroll_estimator(reg, UnrollConfig(depth=depth, omega=omega))
            verdict = membership_unrolling(est, k, depth, omega)
            name = f"unroll-N{depth}-{i}"
        all_ok &= verdict.member
        checks.append({"name": name, "passed": bool(verdict.member),
                       "failures": verdict.failures})
    # a few adversarial rejections
    bad = membership_bilevel(-np.eye(3), k=3)
    checks.append({"name": "adversarial-negative", "passed": not bad.member,
                   "failures": bad.failures})
    all_ok &= not bad.member
    over = membership_unrolling(np.diag([rho(2, 0.5) + 0.3, rho(2, 0.5)]), 1, 2, 0.5)
    checks.append({"name": "adversarial-above-rho", "passed": not over.member,
                   "failures": over.failures})
    all_ok &= not over.member
    return {"suite": "membership-closure", "seed": seed, "passed": bool(all_ok),
            "checks": checks}


def suite_gradient_check(seed: int, cases: int = 10) -> dict:
    """Reverse-accumulated training gradients vs. central finite differences."""
    rng = make_rng(seed)
    checks = []
    all_ok = True
    step = 1e-5
    for i in range(cases):
        n = int(rng.integers(1, 6))
        k = int(rng.integers(1, n + 1))
        depth = int(rng.integers(1, 5))
        omega = float(rng.uniform(0.1, 1.5))
        m = int(rng.integers(2, 6))
        r = rng.normal(0.0, 0.7, size=(k, n))
        x = rng.normal(0.0, 1.0, size=(m, n))
        y = rng.normal(0.0, 1.0, size=(m, n))
        _, grad_r, grad_w = unrolled_loss_and_grads(r, omega, depth, x, y)
        fd_r = np.zeros_like(r)
        for a in range(k):
            for b in range(n):
                bump = np.zeros_like(r)
                bump[a, b] = step
                up, _, _ = unrolled_loss_and_grads(r + bump, omega, depth, x, y)
                dn, _, _ = unrolled_loss_and_grads(r - bump, omega, depth, x, y)
                fd_r[a, b] = (up - dn) / (2 * step)
        up, _, _ = unrolled_loss_and_grads(r, omega + step, depth, x, y)
        dn, _, _ = unrolled_loss_and_grads(r, omega - step, depth, x, y)
        fd_w = (up - dn) / (2 * step)
        scale = max(np.max(np.abs(fd_r)), abs(fd_w), 1e-8)
        rel = max(np.max(np.abs(grad_r - fd_r)), abs(grad_w - fd_w)) / scale
        ok = rel <= 1e-5
        all_ok &= ok
        checks.append({"name": f"grad-{i}", "passed": bool(ok), "deviation": rel})
    return {"suite": "gradient-check", "seed": seed, "passed": bool(all_ok),
            "checks": checks}


SUITES = {
    "mc-risk": suite_mc_risk,
    "unrolling-optimal-small": suite_unrolling_optimal_small,
    "membership-closure": suite_membership_closure,
    "gradient-check": suite_gradient_check,
}


def run_suite(name: str, seed: int) -> dict:
    if name == "all":
        reports = [SUITES[s](seed) for s in SUITES]
        return {"suite": "all", "seed": seed,
                "passed": all(r["passed"] for r in reports), "suites": reports}
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; registered: {sorted(SUITES)} + ['all']")
    return SUITES[name](seed)
