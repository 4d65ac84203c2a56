"""Numeric oracles: minimize the true risk directly over regularizers.

These deliberately avoid the closed-form optimal placements: the risk is
evaluated through the estimator constructors and minimized over the raw
k x n matrix entries from random restarts. Gradients come from an adjoint
pass through the estimator recursion (their correctness is checked against
finite differences elsewhere); a literal derivative-free variant is kept
for use as a slower, fully independent cross-check.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize

from .estimators import LinearEstimator, Regularizer, UnrollConfig, bilevel_estimator, unroll_estimator
from .model import KIND_CONST, ModelParams, make_rng
from .risk import true_risk

_START_SCALES = (0.25, 0.5, 1.0, 2.0, 4.0)


def _risk_weights(params: ModelParams) -> tuple[float, float, float]:
    # E(T) = a/2 ||(T-I)1||^2 + b/2 ||T-I||_F^2 + c/2 ||T||_F^2
    if params.kind == KIND_CONST:
        return params.mu**2 + params.theta2, 0.0, params.sigma2
    return params.mu**2, params.theta2, params.sigma2


def _risk_and_grad_wrt_t(t: np.ndarray, params: ModelParams) -> tuple[float, np.ndarray]:
    a, b, c = _risk_weights(params)
    n = params.n
    eye = np.eye(n)
    res = t - eye
    ones = np.ones(n)
    r1 = res @ ones
    value = 0.5 * a * float(r1 @ r1) + 0.5 * b * float(np.sum(res * res)) + 0.5 * c * float(np.sum(t * t))
    grad = a * np.outer(r1, ones) + b * res + c * t
    return value, grad


def unroll_risk_value_grad(r: np.ndarray, params: ModelParams, depth: int, omega: float) -> tuple[float, np.ndarray]:
    """Risk of the depth-N unrolled estimator and its gradient w.r.t. R.

    Forward: T_{j+1} = W T_j + omega*I with W = I - omega*(I + R^T R);
    reverse accumulation propagates dE/dT back through the recursion.
    """
    n = params.n
    s = r.T @ r
    w = np.eye(n) - omega * (np.eye(n) + s)
    iterates = [np.zeros((n, n))]
    for _ in range(depth):
        iterates.append(w @ iterates[-1] + omega * np.eye(n))
    value, g = _risk_and_grad_wrt_t(iterates[-1], params)
    g_w = np.zeros((n, n))
    for t_prev in reversed(iterates[:-1]):
        g_w += g @ t_prev.T
        g = w.T @ g
    g_s = -omega * g_w
    return value, r @ (g_s + g_s.T)


def bilevel_risk_value_grad(r: np.ndarray, params: ModelParams) -> tuple[float, np.ndarray]:
    """Risk of the exact solution operator and its gradient w.r.t. R."""
    n = params.n
    s = r.T @ r
    t = np.linalg.inv(np.eye(n) + s)
    value, g_t = _risk_and_grad_wrt_t(t, params)
    g_s = -t @ g_t @ t
    return value, r @ (g_s + g_s.T)


def risk_of_regularizer(r: np.ndarray, params: ModelParams, family: str,
                        depth: int | None = None, omega: float | None = None) -> float:
    """Plain risk evaluation through the estimator constructors (no adjoint)."""
    reg = Regularizer(r)
    if family == "bilevel":
        est: LinearEstimator = bilevel_estimator(reg)
    elif family == "unroll":
        est = unroll_estimator(reg, UnrollConfig(depth=depth, omega=omega))
    else:
        raise ValueError(f"unknown family {family!r}")
    return true_risk(est, params).value


def minimize_risk_over_regularizer(
    params: ModelParams,
    k: int,
    family: str,
    depth: int | None = None,
    omega: float | None = None,
    restarts: int = 20,
    seed: int = 0,
    use_gradient: bool = True,
    maxiter: int = 400,
    entry_bound: float | None = None,
) -> tuple[float, np.ndarray]:
    """Multistart minimization of the true risk over R in R^{k x n}.

    Restarts draw Gaussian matrices over a cycle of scales so both the
    small-entry and large-entry optima (the steep odd-depth wells) are
    reachable. With use_gradient=False the optimizer falls back to
    finite-difference gradients. entry_bound boxes |R_ij|, which keeps
    float64 risk evaluations faithful when an infimum sits at R -> inf.
    """
    if family not in ("unroll", "bilevel"):
        raise ValueError(f"unknown family {family!r}")
    n = params.n
    rng = make_rng(seed)

    if use_gradient:
        if family == "unroll":
            def objective(x):
                v, g = unroll_risk_value_grad(x.reshape(k, n), params, depth, omega)
                return v, g.ravel()
        else:
            def objective(x):
                v, g = bilevel_risk_value_grad(x.reshape(k, n), params)
                return v, g.ravel()
        jac = True
    else:
        def objective(x):
            return risk_of_regularizer(x.reshape(k, n), params, family, depth, omega)
        jac = None

    bounds = None if entry_bound is None else [(-entry_bound, entry_bound)] * (k * n)
    best_val = np.inf
    best_r = np.zeros((k, n))
    for i in range(restarts):
        scale = _START_SCALES[i % len(_START_SCALES)]
        x0 = rng.normal(0.0, scale, size=k * n)
        if entry_bound is not None:
            x0 = np.clip(x0, -entry_bound, entry_bound)
        res = minimize(objective, x0, jac=jac, method="L-BFGS-B", bounds=bounds,
                       options={"maxiter": maxiter, "ftol": 1e-16, "gtol": 1e-12})
        if res.fun < best_val:
            best_val = float(res.fun)
            best_r = res.x.reshape(k, n).copy()
    return best_val, best_r
