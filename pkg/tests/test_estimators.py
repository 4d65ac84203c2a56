import numpy as np
import pytest

from unrollrisk import (Regularizer, UnrollConfig, bilevel_estimator, softplus,
                        solve_lower_level, unroll_estimator, unroll_gd_iterative)


def random_reg(rng, n_max=8):
    n = int(rng.integers(1, n_max + 1))
    k = int(rng.integers(1, n + 1))
    return Regularizer(rng.normal(size=(k, n)))


# ---------------------------------------------------------------- lower level

def test_lower_level_identity_regularizer_halves():
    x = np.array([1.0, -2.0, 0.5])
    reg = Regularizer(np.eye(3))
    np.testing.assert_allclose(solve_lower_level(reg, x), x / 2, rtol=1e-14)


def test_lower_level_zero_regularizer_is_identity():
    x = np.array([3.0, 4.0])
    reg = Regularizer(np.zeros((1, 2)))
    np.testing.assert_allclose(solve_lower_level(reg, x), x, rtol=1e-14)


def test_lower_level_matches_generic_solve():
    rng = np.random.default_rng(0)
    r = rng.normal(size=(2, 3))
    x = np.array([1.0, 2.0, 3.0])
    expected = np.linalg.solve(np.eye(3) + r.T @ r, x)
    got = solve_lower_level(Regularizer(r), x)
    np.testing.assert_allclose(got, expected, rtol=1e-12)


def test_lower_level_optimality_residual():
    rng = np.random.default_rng(1)
    for _ in range(20):
        reg = random_reg(rng)
        x = rng.normal(size=reg.n)
        z = solve_lower_level(reg, x)
        residual = (np.eye(reg.n) + reg.gram()) @ z - x
        assert np.linalg.norm(residual) <= 1e-10 * max(np.linalg.norm(x), 1e-30)


def test_lower_level_dimension_mismatch():
    with pytest.raises(ValueError):
        solve_lower_level(Regularizer(np.zeros((1, 2))), np.zeros(3))


# ------------------------------------------------------------------ unrolling

def test_one_step_is_omega_x():
    rng = np.random.default_rng(2)
    reg = random_reg(rng)
    x = rng.normal(size=reg.n)
    z = unroll_gd_iterative(reg, UnrollConfig(depth=1, omega=0.7), x)
    np.testing.assert_allclose(z, 0.7 * x, rtol=1e-14)


def test_two_steps_zero_regularizer():
    x = np.array([2.0, -1.0])
    z = unroll_gd_iterative(Regularizer(np.zeros((1, 2))), UnrollConfig(depth=2, omega=0.5), x)
    np.testing.assert_allclose(z, 0.75 * x, rtol=1e-14)


def test_iterative_matches_matrix_power_oracle():
    rng = np.random.default_rng(3)
    r = rng.normal(size=(2, 4))
    x = rng.normal(size=4)
    omega, depth = 0.3, 7
    s = r.T @ r
    m = np.eye(4) - omega * (np.eye(4) + s)
    t_oracle = np.linalg.solve(np.eye(4) + s, np.eye(4) - np.linalg.matrix_power(m, depth))
    z = unroll_gd_iterative(Regularizer(r), UnrollConfig(depth=depth, omega=omega), x)
    np.testing.assert_allclose(z, t_oracle @ x, rtol=1e-10)


def test_estimator_zero_regularizer():
    est = unroll_estimator(Regularizer(np.zeros((1, 2))), UnrollConfig(depth=2, omega=0.5))
    np.testing.assert_allclose(est.t, 0.75 * np.eye(2), rtol=1e-14)


def test_estimator_scalar_closed_form():
    for r_val in (0.3, 1.7):
        for depth, omega in ((3, 0.2), (4, 1.1)):
            est = unroll_estimator(Regularizer([[r_val]]), UnrollConfig(depth=depth, omega=omega))
            expected = (1 - (1 - omega * (1 + r_val**2)) ** depth) / (1 + r_val**2)
            np.testing.assert_allclose(est.t[0, 0], expected, rtol=1e-12)


def test_estimator_agrees_with_iterative_on_random_inputs():
    rng = np.random.default_rng(4)
    reg = random_reg(rng)
    cfg = UnrollConfig(depth=9, omega=0.4)
    est = unroll_estimator(reg, cfg)
    for _ in range(20):
        x = rng.normal(size=reg.n)
        it = unroll_gd_iterative(reg, cfg, x)
        scale = max(np.linalg.norm(it), 1e-30)
        assert np.linalg.norm(est(x) - it) <= 1e-10 * scale


def test_geometric_sum_identity_property():
    rng = np.random.default_rng(5)
    for _ in range(60):
        reg = random_reg(rng)
        cfg = UnrollConfig(depth=int(rng.integers(1, 51)), omega=float(rng.uniform(0.01, 1.99)))
        x = rng.normal(size=reg.n)
        it = unroll_gd_iterative(reg, cfg, x)
        cl = unroll_estimator(reg, cfg)(x)
        assert np.linalg.norm(it - cl) <= 1e-9 * max(np.linalg.norm(it), 1e-30)


def test_deep_unrolling_converges_to_bilevel():
    rng = np.random.default_rng(6)
    for _ in range(10):
        n = int(rng.integers(1, 7))
        k = int(rng.integers(1, n + 1))
        reg = Regularizer(0.5 * rng.normal(size=(k, n)))
        top = np.linalg.eigvalsh(reg.gram())[-1]
        # keep the iteration contraction factor away from 1 in every direction
        omega = float(rng.uniform(0.05, 1.95 / (1.0 + top)))
        deep = unroll_estimator(reg, UnrollConfig(depth=500, omega=omega))
        exact = bilevel_estimator(reg)
        assert np.linalg.norm(deep.t - exact.t) <= 1e-6 * np.linalg.norm(exact.t)


def test_estimators_are_symmetric():
    rng = np.random.default_rng(7)
    for _ in range(20):
        reg = random_reg(rng)
        for est in (unroll_estimator(reg, UnrollConfig(depth=6, omega=0.8)),
                    bilevel_estimator(reg)):
            assert np.linalg.norm(est.t - est.t.T) <= 1e-12 * np.linalg.norm(est.t)


# -------------------------------------------------------------------- bilevel

def test_bilevel_identity_cases():
    np.testing.assert_allclose(bilevel_estimator(Regularizer(np.zeros((1, 3)))).t,
                               np.eye(3), atol=1e-14)
    np.testing.assert_allclose(bilevel_estimator(Regularizer(np.eye(3))).t,
                               np.eye(3) / 2, rtol=1e-14)


def test_bilevel_rank_one_spectrum():
    rng = np.random.default_rng(8)
    u = rng.normal(size=3)
    s = float(u @ u)
    est = bilevel_estimator(Regularizer(u[None, :]))
    got = np.sort(np.linalg.eigvalsh(est.t))
    np.testing.assert_allclose(got, np.sort([1.0 / (1.0 + s), 1.0, 1.0]), rtol=1e-10)


def test_bilevel_eigenvalues_in_unit_interval():
    rng = np.random.default_rng(9)
    for _ in range(20):
        reg = random_reg(rng)
        w = np.linalg.eigvalsh(bilevel_estimator(reg).t)
        assert w[0] > 0
        assert w[-1] <= 1 + 1e-12
        ones = np.sum(np.abs(w - 1) < 1e-9)
        assert ones >= reg.n - reg.k


# ------------------------------------------------------------- config and I/O

def test_unroll_config_softplus_parameterization():
    cfg = UnrollConfig(depth=3, omega_raw=-2.0)
    np.testing.assert_allclose(cfg.omega, softplus(-2.0), rtol=1e-15)
    assert UnrollConfig(depth=1, omega_raw=-40.0).omega > 0
    with pytest.raises(ValueError):
        UnrollConfig(depth=0, omega=0.5)
    with pytest.raises(ValueError):
        UnrollConfig(depth=2)
    with pytest.raises(ValueError):
        UnrollConfig(depth=2, omega=-0.1)


def test_rejects_wide_regularizer():
    with pytest.raises(ValueError):
        Regularizer(np.zeros((3, 2)))


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(10)
    reg = Regularizer(rng.normal(size=(2, 5)))
    path = tmp_path / "reg.csv"
    reg.save_csv(path)
    loaded = Regularizer.load_csv(path)
    np.testing.assert_allclose(loaded.r, reg.r, rtol=1e-15)


def test_binary_round_trip_and_header(tmp_path):
    rng = np.random.default_rng(11)
    reg = Regularizer(rng.normal(size=(3, 4)))
    path = tmp_path / "reg.bin"
    reg.save_binary(path)
    raw = path.read_bytes()
    assert raw[:4] == b"URL1"
    assert len(raw) == 12 + 3 * 4 * 8
    loaded = Regularizer.load_binary(path)
    np.testing.assert_array_equal(loaded.r, reg.r)


def test_binary_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"NOPE" + bytes(8) + bytes(16))
    with pytest.raises(ValueError, match="magic"):
        Regularizer.load_binary(path)
