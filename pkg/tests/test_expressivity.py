import math

import numpy as np
import pytest

from unrollrisk import (Regularizer, UnrollConfig, bilevel_estimator, c_constant, hn_bounds,
                        membership_bilevel, membership_unrolling, rho, sym_eig, transfer_f,
                        unroll_estimator)


# ----------------------------------------------------------- transfer function

def test_depth_one_transfer_is_constant_omega():
    for omega in (0.1, 0.9, 1.7):
        for s in (0.0, 0.5, 10.0, 333.0):
            assert transfer_f(s, 1, omega) == pytest.approx(omega, rel=1e-14)


def test_transfer_at_zero_is_rho():
    for depth, omega in ((2, 0.5), (5, 1.3), (9, 0.05)):
        assert transfer_f(0.0, depth, omega) == pytest.approx(rho(depth, omega), rel=1e-15)


def test_transfer_direct_value():
    assert transfer_f(1.0, 2, 0.1) == pytest.approx(0.18, rel=1e-14)


def test_transfer_rejects_negative_spectrum():
    with pytest.raises(ValueError):
        transfer_f(-0.5, 2, 0.5)


def test_rho_values():
    assert rho(4, 1.0) == 1.0
    assert rho(2, 0.5) == pytest.approx(0.75, rel=1e-15)
    assert rho(3, 1.8) == pytest.approx(1.512, rel=1e-12)


# ---------------------------------------------------------------- h_N bounds

def test_hn_bounds_n3():
    a3, b3 = hn_bounds(3)
    assert a3 == 0.75  # exact: 1/2 + 1/4
    expected_b3 = 0.5 + (1.0 / 3.0) * (1.0 + math.log(3.0) / 2.0) / (2.0 - math.log(3.0) / 3.0)
    assert b3 == pytest.approx(expected_b3, rel=1e-15)
    assert b3 == pytest.approx(0.8161, abs=1e-4)


def test_hn_bounds_approach_half():
    a, b = hn_bounds(101)
    assert abs(a - 0.5) < 0.02
    assert abs(b - 0.5) < 0.02


def test_hn_bounds_ordered_and_reject_even():
    for depth in range(3, 23, 2):
        a, b = hn_bounds(depth)
        assert a <= b
    with pytest.raises(ValueError):
        hn_bounds(4)


def test_hn_polynomial_dominates_lower_bound():
    for depth in range(3, 17, 2):
        a, _ = hn_bounds(depth)
        r = np.linspace(-10.0, 1.0, 1000)
        denom = np.where(np.abs(1 - r) > 1e-12, 1 - r, 1.0)
        h = np.where(np.abs(1 - r) > 1e-12, (1 - r**depth) / denom, float(depth))
        assert np.all(h >= a - 1e-12)


# ----------------------------------------------------------------- c constant

def test_c_depth_one_is_omega():
    for omega in (0.2, 1.0, 1.7):
        bounds = c_constant(1, omega)
        assert bounds.value == pytest.approx(omega, rel=1e-14)


def test_c_interior_minimum_regime():
    # slope test (1.2)(0.81) = 0.972 < 1: interior minimum, tight at omega*a_3
    bounds = c_constant(3, 0.1)
    assert bounds.branch == "bounds"
    assert bounds.value == pytest.approx(0.075, rel=1e-9)
    assert bounds.lower - 1e-12 <= bounds.value <= bounds.upper + 1e-12
    assert bounds.lower == pytest.approx(0.1 * 0.75, rel=1e-15)


def test_c_nondecreasing_regime_returns_rho_exactly():
    # slope test (4.6)(0.64) = 2.944 >= 1: transfer nondecreasing from zero
    bounds = c_constant(3, 1.8)
    assert bounds.branch == "else"
    assert bounds.value == rho(3, 1.8)
    assert bounds.lower == bounds.upper == bounds.value


def test_c_rejects_bad_arguments():
    with pytest.raises(ValueError):
        c_constant(4, 0.5)
    with pytest.raises(ValueError):
        c_constant(3, 0.0)
    with pytest.raises(ValueError):
        c_constant(3, 2.0)


def test_c_certified_against_dense_spectrum_scan():
    for depth in (3, 5, 7):
        for omega in (0.1, 0.6, 1.1, 1.6, 1.9):
            bounds = c_constant(depth, omega)
            s = np.linspace(0.0, 51.0 / omega, 200_001)
            dense_min = float(np.min(transfer_f(s, depth, omega)))
            assert bounds.value == pytest.approx(dense_min, abs=1e-6)
            if bounds.branch == "bounds":
                assert bounds.lower - 1e-10 <= bounds.value <= bounds.upper + 1e-10
            else:
                assert bounds.value == rho(depth, omega)


def test_even_depth_transfer_decreasing_and_capped():
    rng = np.random.default_rng(21)
    for depth, omega in ((2, 0.7), (6, 1.4), (10, 0.2)):
        s = np.sort(rng.uniform(0.0, 40.0, size=200))
        vals = transfer_f(s, depth, omega)
        cap = rho(depth, omega)
        assert np.all(vals <= cap + 1e-12)
        assert np.all(np.diff(vals) <= 1e-12)


def test_odd_depth_transfer_floored_at_c():
    rng = np.random.default_rng(22)
    for depth, omega in ((3, 0.3), (5, 1.1), (7, 1.9)):
        s = rng.uniform(0.0, 40.0, size=200)
        floor = c_constant(depth, omega).value
        assert np.all(transfer_f(s, depth, omega) >= floor - 1e-9)


# -------------------------------------------------------------------- sym_eig

def test_sym_eig_diagonal_sorting():
    dec = sym_eig(np.diag([3.0, 1.0, 2.0]))
    np.testing.assert_allclose(dec.eigenvalues, [3.0, 2.0, 1.0], rtol=1e-14)


def test_sym_eig_identity():
    dec = sym_eig(np.eye(4))
    np.testing.assert_allclose(dec.eigenvalues, np.ones(4), rtol=1e-14)
    np.testing.assert_allclose(dec.eigenvectors.T @ dec.eigenvectors, np.eye(4), atol=1e-12)


def test_sym_eig_reconstruction_and_orthonormality():
    rng = np.random.default_rng(23)
    a = rng.normal(size=(5, 5))
    m = 0.5 * (a + a.T)
    dec = sym_eig(m)
    v, w = dec.eigenvectors, dec.eigenvalues
    assert np.linalg.norm(v.T @ v - np.eye(5)) <= 1e-10
    assert np.linalg.norm((v * w) @ v.T - m) <= 1e-9 * np.linalg.norm(m)


def test_sym_eig_rejects_asymmetric():
    with pytest.raises(ValueError, match="symmetric"):
        sym_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))


# ----------------------------------------------------------------- membership

def test_bilevel_membership_examples():
    half = 0.5 * np.eye(2)
    assert membership_bilevel(half, k=2).member
    verdict = membership_bilevel(half, k=1)
    assert not verdict.member
    assert verdict.failures == ["unit_eigenvalue_multiplicity"]
    verdict = membership_bilevel(-np.eye(2), k=2)
    assert not verdict.member
    assert "positive_definite" in verdict.failures


def test_unrolling_membership_examples():
    r = rho(2, 0.5)  # 0.75
    assert membership_unrolling(r * np.eye(3), k=1, depth=2, omega=0.5).member
    assert membership_unrolling(r * np.eye(3), k=3, depth=2, omega=0.5).member
    verdict = membership_unrolling(np.diag([0.8, r]), k=1, depth=2, omega=0.5)
    assert not verdict.member
    assert verdict.failures == ["bounded_above_by_rho"]
    # odd depth: c(3, 0.1) = 0.075, rho = 0.271; 0.05 sits below the floor
    verdict = membership_unrolling(np.diag([0.05, rho(3, 0.1)]), k=1, depth=3, omega=0.1)
    assert not verdict.member
    assert verdict.failures == ["bounded_below_by_c"]


def constrained_closure_case(rng, n_max=20, depth_max=10):
    """Random (reg, depth, omega) whose transfer values stay float-comparable.

    The Gram spectrum is rescaled so |1 - omega*(1+s)| <= 1.5; without this
    the estimator norm can reach 1e10+ and eigh noise swamps the membership
    tolerance, which is relative to the target eigenvalue, not the norm.
    """
    n = int(rng.integers(1, n_max + 1))
    k = int(rng.integers(1, n + 1))
    depth = int(rng.integers(1, depth_max + 1))
    omega = float(rng.uniform(0.05, 1.95))
    r = rng.normal(size=(k, n))
    top = float(np.linalg.eigvalsh(r.T @ r)[-1])
    cap = 2.5 / omega - 1.0
    if top > cap:
        r = r * math.sqrt(cap / top)
    return Regularizer(r), depth, omega


def test_constructive_closure():
    rng = np.random.default_rng(24)
    for _ in range(100):
        reg, depth, omega = constrained_closure_case(rng)
        assert membership_bilevel(bilevel_estimator(reg), reg.k).member
        est = unroll_estimator(reg, UnrollConfig(depth=depth, omega=omega))
        assert membership_unrolling(est, reg.k, depth, omega).member
