import math

import numpy as np
import pytest

from unrollrisk import KIND_CONST, KIND_IID, ModelParams, sample_batch


def test_zero_variance_constant_rows():
    params = ModelParams(n=3, mu=5.0, theta2=0.0, sigma2=1e-30, kind=KIND_CONST)
    batch = sample_batch(params, 2, seed=1)
    np.testing.assert_array_equal(batch.clean, np.full((2, 3), 5.0))


def test_iid_clean_mean_within_clt_band():
    m = 100_000
    params = ModelParams(n=2, mu=0.0, theta2=1.0, sigma2=1.0, kind=KIND_IID)
    batch = sample_batch(params, m, seed=3)
    band = 3.0 / math.sqrt(2 * m)
    assert abs(batch.clean.mean()) < band


def test_same_seed_bit_identical():
    params = ModelParams(n=4, mu=0.3, theta2=0.5, sigma2=0.2, kind=KIND_IID)
    a = sample_batch(params, 100, seed=42)
    b = sample_batch(params, 100, seed=42)
    assert a.clean.tobytes() == b.clean.tobytes()
    assert a.noisy.tobytes() == b.noisy.tobytes()
    c = sample_batch(params, 100, seed=43)
    assert a.noisy.tobytes() != c.noisy.tobytes()


@pytest.mark.parametrize("kind", [KIND_CONST, KIND_IID])
def test_moments_within_three_standard_errors(kind):
    m = 200_000
    mu, theta2, sigma2 = 0.7, 0.9, 0.49
    params = ModelParams(n=3, mu=mu, theta2=theta2, sigma2=sigma2, kind=kind)
    batch = sample_batch(params, m, seed=11)
    noise = batch.noisy - batch.clean

    # noise entries: mean 0, variance sigma2, all m*n entries independent
    count = noise.size
    se_mean = math.sqrt(sigma2 / count)
    assert abs(noise.mean()) < 3 * se_mean
    se_var = sigma2 * math.sqrt(2.0 / count)
    assert abs(noise.var() - sigma2) < 3 * se_var

    # clean entries: mean mu, variance theta2; under const only m draws are independent
    eff = m if kind == KIND_CONST else batch.clean.size
    assert abs(batch.clean.mean() - mu) < 3 * math.sqrt(theta2 / eff)
    assert abs(batch.clean.var() - theta2) < 3 * theta2 * math.sqrt(2.0 / eff)


def test_constant_rows_have_zero_spread():
    params = ModelParams(n=6, mu=0.1, theta2=2.0, sigma2=1.0, kind=KIND_CONST)
    batch = sample_batch(params, 500, seed=5)
    assert np.max(np.ptp(batch.clean, axis=1)) == 0.0


def test_rejects_bad_inputs():
    with pytest.raises(ValueError):
        ModelParams(n=0, mu=0.0, theta2=1.0, sigma2=1.0, kind=KIND_IID)
    with pytest.raises(ValueError):
        ModelParams(n=2, mu=0.0, theta2=-0.1, sigma2=1.0, kind=KIND_IID)
    with pytest.raises(ValueError):
        ModelParams(n=2, mu=0.0, theta2=1.0, sigma2=0.0, kind=KIND_IID)
    with pytest.raises(ValueError):
        ModelParams(n=2, mu=0.0, theta2=1.0, sigma2=1.0, kind="weird")
    params = ModelParams(n=2, mu=0.0, theta2=1.0, sigma2=1.0, kind=KIND_IID)
    with pytest.raises(ValueError):
        sample_batch(params, 0, seed=0)


def test_json_round_trip():
    params = ModelParams(n=7, mu=-0.25, theta2=0.04, sigma2=0.81, kind=KIND_CONST)
    text = params.to_json()
    assert '"kind": "const"' in text
    assert ModelParams.from_json(text) == params
