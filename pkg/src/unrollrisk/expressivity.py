"""Spectral reach of the two estimator families.

The scalar transfer function maps an eigenvalue s of the regularizer Gram
matrix to the corresponding eigenvalue of the depth-N unrolled estimator.
Everything here is about its range: the ceiling rho for even depth, the
floor c for odd depth (numeric, with certified analytic bounds), and
spectral membership tests for the bilevel and unrolling estimator sets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0

BRANCH_BOUNDS = "bounds"
BRANCH_ELSE = "else"


def transfer_f(s, depth: int, omega: float):
    """Eigenvalue map of depth-N unrolled gradient descent.

    f(s) = (1 - (1 - omega*(1+s))**N) / (1+s), applied elementwise.
    Accepts a scalar or array of nonnegative spectrum values.
    """
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0):
        raise ValueError("spectrum values must be >= 0")
    out = (1.0 - (1.0 - omega * (1.0 + s_arr)) ** depth) / (1.0 + s_arr)
    return out if s_arr.ndim else float(out)


def rho(depth: int, omega: float) -> float:
    """rho = 1 - (1-omega)**N, the transfer value at zero spectrum."""
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    return 1.0 - (1.0 - omega) ** depth


def hn_bounds(depth: int) -> tuple[float, float]:
    """Analytic (lower, upper) bounds on min_r (1 - r**N)/(1 - r), N odd.

    a_N = 1/2 + 1/(N+1) (tight for N=3), b_N = 1/2 + (1/N)(1+ln(N)/2)/(2-ln(N)/N).
    """
    if depth % 2 == 0:
        raise ValueError(f"depth must be odd, got {depth}")
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    a = 0.5 + 1.0 / (depth + 1)
    ln = math.log(depth)
    b = 0.5 + (1.0 / depth) * (1.0 + ln / 2.0) / (2.0 - ln / depth)
    return a, b


def _h_poly(r: np.ndarray, depth: int) -> np.ndarray:
    """(1 - r**N)/(1 - r) with the limit value N at r = 1."""
    r = np.asarray(r, dtype=float)
    out = np.full_like(r, float(depth))
    away = np.abs(1.0 - r) > 1e-12
    out[away] = (1.0 - r[away] ** depth) / (1.0 - r[away])
    return out


def _golden_min(fun, a: float, b: float, tol: float) -> tuple[float, float]:
    """Golden-section search for a bracketed minimum; returns (x, fun(x))."""
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = fun(c), fun(d)
    while d - c > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = fun(d)
    x = 0.5 * (a + b)
    return x, fun(x)


@dataclass(frozen=True)
class CnBounds:
    """The odd-depth spectral floor c with its certification.

    branch "bounds": value is the numeric interior minimum of the transfer
    function, certified inside [omega*a_N, omega*b_N]. branch "else": the
    transfer function is nondecreasing from zero spectrum and
    value = rho exactly (lower = upper = value).
    """

    lower: float
    upper: float
    branch: str
    value: float


_C_GRID_POINTS = 10_000
_C_R_MAX = 50.0
_C_GOLDEN_TOL = 1e-12


def c_constant(depth: int, omega: float) -> CnBounds:
    """Spectral floor of odd-depth unrolling estimators.

    The regime is decided by the sign of the transfer function's slope at
    zero spectrum, f'(0) = ((N-1)*omega + 1)*(1-omega)**(N-1) - 1. When it
    is >= 0 the function is nondecreasing and the floor is rho. When it is
    negative there is an interior minimum; it is located by substituting
    r = 1 - omega*(1+s) and minimizing omega*(1-r**N)/(1-r) over
    r in [-50, 1-omega] (coarse grid, then golden-section refinement).
    """
    if depth % 2 == 0:
        raise ValueError(f"depth must be odd, got {depth}")
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    if not 0.0 < omega < 2.0:
        raise ValueError(f"omega must be in (0, 2), got {omega}")
    rho_val = rho(depth, omega)
    slope_test = ((depth - 1) * omega + 1.0) * (1.0 - omega) ** (depth - 1)
    if slope_test >= 1.0:
        return CnBounds(lower=rho_val, upper=rho_val, branch=BRANCH_ELSE, value=rho_val)
    grid = np.linspace(-_C_R_MAX, 1.0 - omega, _C_GRID_POINTS)
    vals = omega * _h_poly(grid, depth)
    i = int(np.argmin(vals))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    _, value = _golden_min(
        lambda r: omega * float(_h_poly(np.array([r]), depth)[0]), lo, hi, _C_GOLDEN_TOL
    )
    a, b = hn_bounds(depth)
    return CnBounds(lower=omega * a, upper=omega * b, branch=BRANCH_BOUNDS, value=value)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Orthonormal eigenvectors (columns) with eigenvalues in descending order."""

    eigenvectors: np.ndarray
    eigenvalues: np.ndarray


def _as_matrix(t) -> np.ndarray:
    """Accept a LinearEstimator or a plain square array."""
    m = np.asarray(getattr(t, "t", t), dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m


def sym_eig(t, tol: float = 1e-9) -> SpectralDecomposition:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Rejects matrices whose asymmetry exceeds tol relative to the Frobenius
    norm. The returned factors satisfy ||V^T V - I||_F <= 1e-10 and
    reconstruct the input to 1e-9 relative.
    """
    m = _as_matrix(t)
    scale = max(1.0, float(np.linalg.norm(m)))
    if np.linalg.norm(m - m.T) > tol * scale:
        raise ValueError("matrix is not symmetric")
    w, v = np.linalg.eigh(0.5 * (m + m.T))
    order = np.argsort(w)[::-1]
    return SpectralDecomposition(eigenvectors=v[:, order], eigenvalues=w[order])


@dataclass(frozen=True)
class MembershipVerdict:
    """Outcome of a spectral membership test; failures name the violated conditions."""

    member: bool
    failures: list[str] = field(default_factory=list)
    tolerance: float = 0.0


def _close(value: float, target: float, tol: float) -> bool:
    return abs(value - target) <= tol * max(1.0, abs(target))


def _multiplicity(eigenvalues: np.ndarray, target: float, tol: float) -> int:
    return int(np.sum(np.abs(eigenvalues - target) <= tol * max(1.0, abs(target))))


def _symmetry_failure(m: np.ndarray, tol: float) -> bool:
    return np.linalg.norm(m - m.T) > tol * max(1.0, float(np.linalg.norm(m)))


def membership_bilevel(t, k: int, tol: float = 1e-8) -> MembershipVerdict:
    """Test membership in the bilevel-estimator set for a k-row regularizer.

    Conditions: "symmetric"; "positive_definite" (all eigenvalues > 0);
    "bounded_by_identity" (eigenvalues <= 1); "unit_eigenvalue_multiplicity"
    (eigenvalue 1 with multiplicity >= n-k).
    """
    m = _as_matrix(t)
    n = m.shape[0]
    failures = []
    if _symmetry_failure(m, tol):
        failures.append("symmetric")
    w = np.linalg.eigvalsh(0.5 * (m + m.T))
    if w[0] <= 0.0:
        failures.append("positive_definite")
    if w[-1] > 1.0 + tol:
        failures.append("bounded_by_identity")
    if _multiplicity(w, 1.0, tol) < n - k:
        failures.append("unit_eigenvalue_multiplicity")
    return MembershipVerdict(member=not failures, failures=failures, tolerance=tol)


def membership_unrolling(t, k: int, depth: int, omega: float, tol: float = 1e-8) -> MembershipVerdict:
    """Test membership in the depth-N unrolling estimator set.

    Even N: "symmetric"; "rho_eigenvalue_multiplicity" (eigenvalue rho with
    multiplicity >= n-k); "bounded_above_by_rho". Odd N: the multiplicity
    condition plus "bounded_below_by_c" with c from c_constant.
    """
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    m = _as_matrix(t)
    n = m.shape[0]
    failures = []
    if _symmetry_failure(m, tol):
        failures.append("symmetric")
    w = np.linalg.eigvalsh(0.5 * (m + m.T))
    rho_val = rho(depth, omega)
    if _multiplicity(w, rho_val, tol) < n - k:
        failures.append("rho_eigenvalue_multiplicity")
    if depth % 2 == 0:
        if w[-1] > rho_val + tol * max(1.0, abs(rho_val)):
            failures.append("bounded_above_by_rho")
    else:
        c = c_constant(depth, omega).value
        if w[0] < c - tol * max(1.0, abs(c)):
            failures.append("bounded_below_by_c")
    return MembershipVerdict(member=not failures, failures=failures, tolerance=tol)
