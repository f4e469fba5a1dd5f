import math

import numpy as np
import pytest

from sdrlab.errors import ConfigError
from sdrlab.models import (
    Dataset,
    ModelSpec,
    clipped_g,
    custom_model,
    dtsir_model,
    generate,
    kappa_to_n,
    linear_mu,
    make_dtsir_beta,
    model_from_config,
    true_lambda,
    two_index_conjecture,
)


def test_clipped_g():
    assert clipped_g(1.7) == 1.7
    assert clipped_g(0.0) == 0.0
    assert clipped_g(150.0) == 0.0
    assert clipped_g(-100.0) == -100.0
    xs = np.linspace(-300, 300, 1001)
    assert np.all(np.abs(clipped_g(xs)) <= 100)


def test_make_dtsir_beta():
    beta, s = make_dtsir_beta(100, 0.5, seed=1)
    assert s == 10
    assert np.linalg.norm(beta) == pytest.approx(1.0)
    assert np.count_nonzero(beta) == 10
    np.testing.assert_allclose(np.abs(beta[:10]), 1 / math.sqrt(10))
    assert make_dtsir_beta(4, 0.5, seed=0)[1] == 2
    np.testing.assert_array_equal(beta, make_dtsir_beta(100, 0.5, seed=1)[0])


def test_true_lambda():
    assert true_lambda(linear_mu(0.3)) == [0.3]
    assert true_lambda(linear_mu(0.1)) == [0.1]
    beta, _ = make_dtsir_beta(16, 0.5, seed=0)
    assert true_lambda(dtsir_model(3, beta)) is None


def test_kappa_to_n():
    assert kappa_to_n(3, 10, 100) == 134
    assert kappa_to_n(61, 10, 100) == 2744
    assert kappa_to_n(1, 1, 4) == 1
    with pytest.raises(ConfigError):
        kappa_to_n(3, 10, 10)


def test_spec_validation():
    with pytest.raises(ConfigError):
        linear_mu(1.0)
    with pytest.raises(ConfigError):
        linear_mu(0.0)
    with pytest.raises(ConfigError):
        two_index_conjecture(0.0)
    with pytest.raises(ConfigError):
        ModelSpec("two_index_conjecture", np.eye(3)[:, :1], mu=1.0)
    with pytest.raises(ConfigError):
        ModelSpec("dtsir_1", np.eye(3)[:, :2])
    with pytest.raises(ConfigError):
        ModelSpec("linear_mu", np.array([[1.0], [1.0]]), mu=0.5)
    with pytest.raises(ConfigError):
        ModelSpec("nonsense", np.eye(2)[:, :1])
    with pytest.raises(ConfigError):
        ModelSpec("custom", np.eye(2)[:, :1])
    with pytest.raises(ConfigError):
        generate(linear_mu(0.5), 1, seed=0)


def test_spec_support():
    beta, s = make_dtsir_beta(100, 0.5, seed=3)
    spec = dtsir_model(1, beta)
    assert spec.s == s == 10
    np.testing.assert_array_equal(spec.support, np.arange(10))
    assert spec.d == 1 and spec.p == 100


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.zeros((1, 2)), np.zeros(1))
    with pytest.raises(ValueError):
        Dataset(np.zeros((3, 2)), np.zeros(2))
    with pytest.raises(ValueError):
        Dataset(np.array([[np.inf], [0.0]]), np.zeros(2))


def test_linear_mu_correlation():
    data = generate(linear_mu(0.5, p=1), 1_000_000, seed=11)
    r = np.corrcoef(data.X[:, 0], data.y)[0, 1]
    assert r**2 == pytest.approx(0.5, abs=0.01)


def test_linear_mu_response_variance():
    mu, n = 0.3, 100_000
    data = generate(linear_mu(mu, p=3), n, seed=5)
    target = 1 / (1 - mu)
    # var of the sample variance of a normal is 2 sigma^4 / (n - 1)
    se = target * math.sqrt(2 / (n - 1))
    assert abs(data.y.var(ddof=1) - target) < 3 * se


def test_generate_is_deterministic_and_prefix_consistent():
    spec = linear_mu(0.5, p=4)
    a = generate(spec, 500, seed=9)
    b = generate(spec, 500, seed=9)
    np.testing.assert_array_equal(a.X, b.X)
    np.testing.assert_array_equal(a.y, b.y)
    big = generate(spec, 2000, seed=9)
    np.testing.assert_array_equal(big.X[:500], a.X)
    np.testing.assert_array_equal(big.y[:500], a.y)
    assert not np.array_equal(generate(spec, 500, seed=10).y, a.y)


def test_generate_does_not_consume_seed_sequence():
    ss = np.random.SeedSequence(4)
    a = generate(linear_mu(0.5), 50, ss)
    b = generate(linear_mu(0.5), 50, ss)
    np.testing.assert_array_equal(a.y, b.y)


@pytest.mark.parametrize("link", ["linear_mu", "two_index_conjecture", "dtsir_1", "dtsir_2", "dtsir_3", "dtsir_4"])
def test_response_ignores_off_support_columns(link):
    p = 9
    if link == "linear_mu":
        spec = linear_mu(0.4, p=p)
    elif link == "two_index_conjecture":
        spec = two_index_conjecture(0.5, p=p)
    else:
        beta, _ = make_dtsir_beta(p, 0.5, seed=2)
        spec = dtsir_model(link, beta)
    rng = np.random.default_rng(0)
    X = rng.standard_normal((200, p))
    eps = rng.standard_normal(200)
    X2 = X.copy()
    off = np.setdiff1d(np.arange(p), spec.support)
    X2[:, off] += rng.standard_normal((200, off.size))
    np.testing.assert_array_equal(
        spec.response(X @ spec.true_V, eps), spec.response(X2 @ spec.true_V, eps)
    )


def test_two_index_formula():
    mu = 0.7
    spec = two_index_conjecture(mu, p=4)
    data = generate(spec, 1000, seed=3)
    assert np.all(np.abs(data.X) < 100)
    x1, x2 = data.X[:, 0], data.X[:, 1]
    signal = math.sqrt(mu) * (1 + x1) * (x1 + x2)
    resid = data.y - signal
    eps = np.random.default_rng(np.random.SeedSequence(3, spawn_key=(1,))).standard_normal(1000)
    np.testing.assert_allclose(resid, eps, atol=1e-12)


def test_dtsir_links():
    z = np.array([[0.5], [-1.0]])
    eps = np.zeros(2)
    expected = {
        1: z[:, 0] + np.sin(z[:, 0]),
        2: 2 * np.arctan(z[:, 0]),
        3: z[:, 0] ** 3,
        4: np.sinh(z[:, 0]),
    }
    beta = np.zeros(4)
    beta[0] = 1.0
    for which, want in expected.items():
        np.testing.assert_allclose(dtsir_model(which, beta).response(z, eps), want)


def test_custom_model():
    spec = custom_model(lambda Z, eps: Z[:, 0] ** 2 + eps, np.eye(3)[:, :1], name="square")
    data = generate(spec, 100, seed=0)
    assert spec.label == "square"
    assert data.n == 100 and data.p == 3


def test_model_from_config():
    spec = model_from_config({"model": "linear_mu", "mu": "0.2", "p": "5"})
    assert spec.mu == 0.2 and spec.p == 5
    spec = model_from_config({"model": "dtsir_2", "p": "16"})
    assert spec.s == 4
    with pytest.raises(ConfigError):
        model_from_config({"model": "custom"})
