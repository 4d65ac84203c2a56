"""Closed-form best risks, best estimators, and optimal stepsizes.

Each estimator class (unconstrained linear, bilevel, depth-N unrolling) has
an exact best risk under both data models. The optima place eigenvalues on
an orthonormal frame whose first vector is aligned with the all-ones
direction; shrinkage levels are combined with the unrolling ceiling rho
(even depth) or floor c (odd depth) through min/max. Reports carry the
branch taken and every constant used, so sweep output is self-describing.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .estimators import LinearEstimator
from .expressivity import c_constant, rho
from .model import KIND_CONST, ModelParams
from .risk import true_risk

OMEGA_EPS = 1e-6
_OMEGA_GOLDEN_TOL = 1e-10
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def shrinkage_constants(params: ModelParams) -> tuple[float, float, float]:
    """(C1, C2, C3): optimal unconstrained shrinkage per eigen-direction.

    C1 = n(mu^2+theta^2)/(n(mu^2+theta^2)+sigma^2) for the ones direction
    under the constant model, C2 = (n mu^2+theta^2)/(n mu^2+theta^2+sigma^2)
    for the ones direction under iid, C3 = theta^2/(theta^2+sigma^2) for
    directions orthogonal to ones under iid.
    """
    n, mu2, t2, s2 = params.n, params.mu**2, params.theta2, params.sigma2
    c1 = n * (mu2 + t2) / (n * (mu2 + t2) + s2)
    c2 = (n * mu2 + t2) / (n * mu2 + t2 + s2)
    c3 = t2 / (t2 + s2)
    return c1, c2, c3


def frame_aligned_with_ones(n: int) -> np.ndarray:
    """Orthonormal columns, the first being 1/sqrt(n), via a Householder reflection."""
    if n == 1:
        return np.eye(1)
    u = np.zeros(n)
    u[0] = 1.0
    u -= np.ones(n) / math.sqrt(n)
    u /= np.linalg.norm(u)
    return np.eye(n) - 2.0 * np.outer(u, u)


def _estimator_from_placement(eigenvalues) -> LinearEstimator:
    """Build T with the given spectrum; first eigenvalue sits on 1/sqrt(n)."""
    evals = np.asarray(eigenvalues, dtype=float)
    h = frame_aligned_with_ones(evals.size)
    t = (h * evals) @ h.T
    return LinearEstimator(0.5 * (t + t.T))


@dataclass(frozen=True)
class OptimalRiskReport:
    """Best risk of a class, whether it is attained, and how it was assembled."""

    risk: float
    attained: bool
    branch: str
    constants: dict = field(default_factory=dict)
    estimator: LinearEstimator | None = None

    def as_dict(self) -> dict:
        return {"risk": self.risk, "attained": self.attained, "branch": self.branch,
                "constants": dict(self.constants)}

    def to_json(self) -> str:
        return json.dumps(self.as_dict())


@dataclass(frozen=True)
class OptimalOmegaReport:
    """Optimal stepsizes (a 1 +/- beta pair or a closed interval) and their risk."""

    omegas: tuple[float, ...]
    interval: bool
    risk: float
    method: str
    branch: str

    def as_dict(self) -> dict:
        return {"omegas": list(self.omegas), "interval": self.interval,
                "risk": self.risk, "method": self.method, "branch": self.branch}

    def to_json(self) -> str:
        return json.dumps(self.as_dict())


def best_linear(params: ModelParams) -> OptimalRiskReport:
    """Best unconstrained linear estimator and its risk.

    Constant model: a damped averaging matrix proportional to the all-ones
    rank-one. Iid model: a convex combination of the identity and that
    damped average.
    """
    n, mu2, t2, s2 = params.n, params.mu**2, params.theta2, params.sigma2
    c1, c2, c3 = shrinkage_constants(params)
    ones = np.ones((n, n))
    if params.kind == KIND_CONST:
        t = (mu2 + t2) / (n * (mu2 + t2) + s2) * ones
        risk = 0.5 * s2 * c1
    else:
        # the map's ones-direction eigenvalue is exactly C2, the rest C3,
        # so the minimal risk collapses to per-direction shrinkage values
        t = c3 * np.eye(n) + (s2 / (t2 + s2)) * (mu2 / (n * mu2 + t2 + s2)) * ones
        risk = 0.5 * s2 * (c2 + (n - 1) * c3)
    return OptimalRiskReport(
        risk=risk, attained=True, branch=f"{params.kind}/linear",
        constants={"C1": c1, "C2": c2, "C3": c3},
        estimator=LinearEstimator(t),
    )


def bilevel_optimal(params: ModelParams, k: int) -> OptimalRiskReport:
    """Best risk over bilevel estimators with a k-row regularizer.

    Constant model: a strict infimum, never attained (report carries no
    estimator). Iid model: attained, with eigenvalue C3 on k directions
    orthogonal to ones (k < n) or C3 on n-1 such directions and C2 on the
    ones direction (k = n); at theta2 = 0 the required regularizer diverges
    and the report degrades to a non-attained infimum.
    """
    if not 1 <= k <= params.n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={params.n}")
    n, s2 = params.n, params.sigma2
    c1, c2, c3 = shrinkage_constants(params)
    constants = {"C1": c1, "C2": c2, "C3": c3}
    case = "k<n" if k < n else "k=n"
    if params.kind == KIND_CONST:
        risk = 0.5 * s2 * (n - k) if k < n else 0.5 * s2 * c1
        return OptimalRiskReport(risk=risk, attained=False,
                                 branch=f"const/bilevel/{case}", constants=constants)
    if k < n:
        risk = 0.5 * s2 * (k * c3 + (n - k))
        placement = [1.0] + [c3] * k + [1.0] * (n - k - 1)
        constructible = params.theta2 > 0
    else:
        risk = 0.5 * s2 * (c2 + (n - 1) * c3)
        placement = [c2] + [c3] * (n - 1)
        constructible = params.theta2 > 0 or n == 1
    return OptimalRiskReport(
        risk=risk, attained=constructible, branch=f"iid/bilevel/{case}",
        constants=constants,
        estimator=_estimator_from_placement(placement) if constructible else None,
    )


def _pick_min(candidate: float, ceiling: float) -> tuple[float, str]:
    # first listed wins ties: the shrinkage constant
    return (candidate, "C") if candidate <= ceiling else (ceiling, "rho")


def _pick_max(candidate: float, floor: float) -> tuple[float, str]:
    return (candidate, "C") if candidate >= floor else (floor, "c")


def unrolling_optimal(params: ModelParams, k: int, depth: int, omega: float) -> OptimalRiskReport:
    """Best risk over depth-N unrolling estimators with stepsize omega.

    Dispatches on (model kind, parity of N, k < n vs k = n); the odd-depth
    and the iid even-depth k < n branches carry an inner two-way minimum
    over where the ones-aligned eigenvalue goes, recorded in the branch
    string. Depth 1 is degenerate: the transfer function is constant, the
    class is the single matrix omega*I, and the risk is evaluated there.
    """
    if not 1 <= k <= params.n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={params.n}")
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    if not 0.0 < omega < 2.0:
        raise ValueError(f"omega must be in (0, 2), got {omega}")
    n, mu2, t2, s2 = params.n, params.mu**2, params.theta2, params.sigma2
    c1, c2, c3 = shrinkage_constants(params)
    rho_val = rho(depth, omega)
    constants = {"C1": c1, "C2": c2, "C3": c3, "rho": rho_val}

    if depth == 1:
        est = LinearEstimator(omega * np.eye(n))
        constants["c"] = omega
        return OptimalRiskReport(
            risk=true_risk(est, params).value, attained=True,
            branch=f"{params.kind}/depth-1", constants=constants, estimator=est)

    parity = "even" if depth % 2 == 0 else "odd"
    case = "k<n" if k < n else "k=n"
    kind = params.kind

    if parity == "even":
        c1m, c1m_src = _pick_min(c1, rho_val)
        c2m, c2m_src = _pick_min(c2, rho_val)
        c3m, c3m_src = _pick_min(c3, rho_val)
        constants.update({"C1_min": c1m, "C1_min_active": c1m_src,
                          "C2_min": c2m, "C2_min_active": c2m_src,
                          "C3_min": c3m, "C3_min_active": c3m_src})
        if kind == KIND_CONST:
            if k < n:
                risk = 0.5 * (mu2 + t2) * n * (rho_val - 1) ** 2 + 0.5 * s2 * (n - k) * rho_val**2
                placement = [rho_val] + [0.0] * k + [rho_val] * (n - k - 1)
                branch = f"const/even/{case}"
            else:
                risk = 0.5 * (mu2 + t2) * n * (c1m - 1) ** 2 + 0.5 * s2 * c1m**2
                placement = [c1m] + [0.0] * (n - 1)
                branch = f"const/even/{case}"
        else:
            if k < n:
                common = (0.5 * mu2 * n * (rho_val - 1) ** 2
                          + 0.5 * t2 * (k - 1) * (c3m - 1) ** 2
                          + 0.5 * t2 * (n - k) * (rho_val - 1) ** 2
                          + 0.5 * s2 * (k - 1) * c3m**2
                          + 0.5 * s2 * (n - k) * rho_val**2)
                inner_a = 0.5 * t2 * (rho_val - 1) ** 2 + 0.5 * s2 * rho_val**2
                inner_b = 0.5 * t2 * (c3m - 1) ** 2 + 0.5 * s2 * c3m**2
                if inner_a <= inner_b:
                    risk = common + inner_a
                    placement = [rho_val] + [c3m] * (k - 1) + [rho_val] * (n - k)
                    branch = f"iid/even/{case}/mean-optimized"
                else:
                    risk = common + inner_b
                    placement = [rho_val] + [c3m] * k + [rho_val] * (n - k - 1)
                    branch = f"iid/even/{case}/mean-at-rho"
            else:
                risk = (0.5 * mu2 * n * (c2m - 1) ** 2 + 0.5 * t2 * (c2m - 1) ** 2
                        + 0.5 * t2 * (n - 1) * (c3m - 1) ** 2
                        + 0.5 * s2 * c2m**2 + 0.5 * s2 * (n - 1) * c3m**2)
                placement = [c2m] + [c3m] * (n - 1)
                branch = f"iid/even/{case}"
    else:
        c_val = c_constant(depth, omega).value
        constants["c"] = c_val
        c1M, c1M_src = _pick_max(c1, c_val)
        c2M, c2M_src = _pick_max(c2, c_val)
        c3M, c3M_src = _pick_max(c3, c_val)
        constants.update({"C1_max": c1M, "C1_max_active": c1M_src,
                          "C2_max": c2M, "C2_max_active": c2M_src,
                          "C3_max": c3M, "C3_max_active": c3M_src})
        if kind == KIND_CONST:
            if k < n:
                common = 0.5 * s2 * ((k - 1) * c_val**2 + (n - k) * rho_val**2)
                inner_a = 0.5 * (mu2 + t2) * n * (c1M - 1) ** 2 + 0.5 * s2 * c1M**2
                inner_b = 0.5 * (mu2 + t2) * n * (rho_val - 1) ** 2 + 0.5 * s2 * c_val**2
                if inner_a <= inner_b:
                    risk = common + inner_a
                    placement = [c1M] + [c_val] * (k - 1) + [rho_val] * (n - k)
                    branch = f"const/odd/{case}/mean-optimized"
                else:
                    risk = common + inner_b
                    placement = [rho_val] + [c_val] * k + [rho_val] * (n - k - 1)
                    branch = f"const/odd/{case}/mean-at-rho"
            else:
                risk = (0.5 * (mu2 + t2) * n * (c1M - 1) ** 2 + 0.5 * s2 * c1M**2
                        + 0.5 * s2 * (n - 1) * c_val**2)
                placement = [c1M] + [c_val] * (n - 1)
                branch = f"const/odd/{case}"
        else:
            if k < n:
                common = (0.5 * t2 * (k - 1) * (c3M - 1) ** 2
                          + 0.5 * t2 * (n - k) * (rho_val - 1) ** 2
                          + 0.5 * s2 * (k - 1) * c3M**2
                          + 0.5 * s2 * (n - k) * rho_val**2)
                inner_a = (0.5 * mu2 * n * (c2M - 1) ** 2 + 0.5 * t2 * (c2M - 1) ** 2
                           + 0.5 * s2 * c2M**2)
                inner_b = (0.5 * mu2 * n * (rho_val - 1) ** 2
                           + 0.5 * t2 * (c3M - 1) ** 2 + 0.5 * s2 * c3M**2)
                if inner_a <= inner_b:
                    risk = common + inner_a
                    placement = [c2M] + [c3M] * (k - 1) + [rho_val] * (n - k)
                    branch = f"iid/odd/{case}/mean-optimized"
                else:
                    risk = common + inner_b
                    placement = [rho_val] + [c3M] * k + [rho_val] * (n - k - 1)
                    branch = f"iid/odd/{case}/mean-at-rho"
            else:
                risk = (0.5 * mu2 * n * (c2M - 1) ** 2 + 0.5 * t2 * (c2M - 1) ** 2
                        + 0.5 * t2 * (n - 1) * (c3M - 1) ** 2
                        + 0.5 * s2 * c2M**2 + 0.5 * s2 * (n - 1) * c3M**2)
                placement = [c2M] + [c3M] * (n - 1)
                branch = f"iid/odd/{case}"

    return OptimalRiskReport(risk=risk, attained=True, branch=branch,
                             constants=constants,
                             estimator=_estimator_from_placement(placement))


def _golden_omega(fun, lo: float, hi: float) -> tuple[float, float]:
    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    fc, fd = fun(c), fun(d)
    while d - c > _OMEGA_GOLDEN_TOL:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - _INV_PHI * (hi - lo)
            fc = fun(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INV_PHI * (hi - lo)
            fd = fun(d)
    w = 0.5 * (lo + hi)
    return w, fun(w)


def optimal_omega(params: ModelParams, k: int, depth: int) -> OptimalOmegaReport:
    """Stepsize(s) minimizing the best unrolling risk at fixed depth.

    Even depth has closed forms: a 1 +/- beta pair for k < n, a closed
    interval of equally good stepsizes for k = n; the optimized risk does
    not depend on the (even) depth. Odd depth is minimized numerically on
    [1e-6, 2 - 1e-6] (coarse grid bracket, then golden section), with the
    spectral floor recomputed at every candidate stepsize.
    """
    if not 1 <= k <= params.n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={params.n}")
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    n, mu2, t2, s2 = params.n, params.mu**2, params.theta2, params.sigma2
    if depth % 2 == 0:
        if params.kind == KIND_CONST:
            if k < n:
                beta = (s2 * (n - k) / (n * (mu2 + t2) + s2 * (n - k))) ** (1.0 / depth)
                risk = 0.5 * n * (n - k) * (mu2 + t2) * s2 / (n * (mu2 + t2) + (n - k) * s2)
                return OptimalOmegaReport(omegas=(1.0 - beta, 1.0 + beta), interval=False,
                                          risk=risk, method="closed-form",
                                          branch="const/even/k<n")
            beta = (s2 / (n * (mu2 + t2) + s2)) ** (1.0 / depth)
            risk = 0.5 * n * (mu2 + t2) * s2 / (n * (mu2 + t2) + s2)
            return OptimalOmegaReport(omegas=(1.0 - beta, 1.0 + beta), interval=True,
                                      risk=risk, method="closed-form",
                                      branch="const/even/k=n")
        if k < n:
            denom = mu2 * n + t2 * (n - k) + s2 * (n - k)
            beta = (s2 * (n - k) / denom) ** (1.0 / depth)
            risk = (0.5 * k * t2 * s2 / (t2 + s2)
                    + 0.5 * s2 * (n - k) * (mu2 * n + t2 * (n - k)) / denom)
            return OptimalOmegaReport(omegas=(1.0 - beta, 1.0 + beta), interval=False,
                                      risk=risk, method="closed-form",
                                      branch="iid/even/k<n")
        beta = (s2 / (mu2 * n + t2 + s2)) ** (1.0 / depth)
        c2 = (n * mu2 + t2) / (n * mu2 + t2 + s2)
        c3 = t2 / (t2 + s2)
        # on the interval the shrinkage levels are unconstrained, so the
        # optimized risk is the best-linear one, sigma^2/2*(C2 + (n-1)*C3)
        risk = 0.5 * s2 * (c2 + (n - 1) * c3)
        return OptimalOmegaReport(omegas=(1.0 - beta, 1.0 + beta), interval=True,
                                  risk=risk, method="closed-form",
                                  branch="iid/even/k=n")

    def objective(w: float) -> float:
        return unrolling_optimal(params, k, depth, w).risk

    grid = np.linspace(OMEGA_EPS, 2.0 - OMEGA_EPS, 2001)
    vals = np.array([objective(w) for w in grid])
    i = int(np.argmin(vals))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    w_star, risk = _golden_omega(objective, lo, hi)
    case = "k<n" if k < params.n else "k=n"
    return OptimalOmegaReport(omegas=(w_star,), interval=False, risk=risk,
                              method="numeric", branch=f"{params.kind}/odd/{case}")


def lp_vertex_min(a: np.ndarray, c: np.ndarray) -> tuple[int, np.ndarray]:
    """Vertex solution of min sum(s_j c_j) s.t. sum(s_j) = ||a||^2, 0 <= s_j <= ||a||^2.

    Returns the 0-based argmin index of c (smallest index on ties) and the
    vertex ||a||^2 * e_{j*}. Requires nonnegative costs.
    """
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    if a.shape != c.shape or a.ndim != 1:
        raise ValueError("a and c must be vectors of the same length")
    if np.any(c < 0):
        raise ValueError("costs must be >= 0")
    j_star = int(np.argmin(c))
    s_star = np.zeros_like(c)
    s_star[j_star] = float(a @ a)
    return j_star, s_star


def scalar_landscape(depth: int, omega: float, params: ModelParams, r_grid) -> np.ndarray:
    """Risk of the scalar unrolled estimator T(r) = f(r^2) over a grid of r.

    Only defined for n = 1, where the constant and iid risks coincide:
    (mu^2 + theta^2)/2 * (T-1)^2 + sigma^2/2 * T^2.
    """
    if params.n != 1:
        raise ValueError(f"the scalar landscape needs n=1, got n={params.n}")
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    r = np.asarray(r_grid, dtype=float)
    s = r * r
    t = (1.0 - (1.0 - omega * (1.0 + s)) ** depth) / (1.0 + s)
    mu2 = params.mu**2
    return 0.5 * (mu2 + params.theta2) * (t - 1.0) ** 2 + 0.5 * params.sigma2 * t * t


def grid_local_minima(values) -> list[int]:
    """Indices of strict local minima on a sampled curve, boundaries included."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return list(range(v.size))
    minima = []
    if v[0] < v[1]:
        minima.append(0)
    for i in range(1, v.size - 1):
        if v[i] < v[i - 1] and v[i] < v[i + 1]:
            minima.append(i)
    if v[-1] < v[-2]:
        minima.append(v.size - 1)
    return minima
