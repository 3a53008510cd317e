import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from dfrc_outage.channel import DependentError, IndependentError, generate_rayleigh
from dfrc_outage.layout import VariableLayout
from dfrc_outage.outage import (
    UserQoS,
    b_selector,
    build_B,
    empirical_outage,
    epsilon_of,
    gaussian_outage,
    hermitian_vec_map,
    lmi_block,
    outage_margin,
    sinr_from_covariance,
    soc_rows,
    sum_rate,
    variance_dependent,
    variance_independent,
    variance_quadratic_factor,
)
from dfrc_outage.linalg import hvec

from conftest import random_hermitian, random_psd


def test_epsilon_values():
    # frozen from 1 / Phi^{-1}(1 - p)
    assert epsilon_of(0.1) == pytest.approx(0.7803041460723791, rel=1e-12)
    assert epsilon_of(0.05) == pytest.approx(0.6079568319117692, rel=1e-12)
    assert epsilon_of(0.2) == pytest.approx(1.18818294989389, rel=1e-12)


@pytest.mark.parametrize("p", [0.0, 0.5, 0.7, -0.1])
def test_epsilon_domain(p):
    with pytest.raises(ValueError):
        epsilon_of(p)


def test_qos_validation():
    assert UserQoS.from_db(10).gamma == pytest.approx(10.0)
    with pytest.raises(ValueError):
        UserQoS(0.0)
    with pytest.raises(ValueError):
        UserQoS(1.0, 0.5)


def test_sinr_hand_example():
    C = np.diag([1.0, 0.0])
    ws = np.array([[1.0, 0.0], [0.5, 1.0]])
    # signal 1, interference 0.25, noise 0.25
    assert sinr_from_covariance(C, ws, 0.25, 0) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        sinr_from_covariance(C, ws, 0.0, 0)


def test_build_B():
    Ws = np.array([np.eye(2), 2 * np.eye(2), 3 * np.eye(2)])
    assert np.allclose(build_B(Ws, 1, 2.0), (1.0 - 4.0) * np.eye(2))


def test_variance_identity_example():
    assert variance_independent(np.eye(4), np.ones((4, 4))) == pytest.approx(4.0)
    with pytest.raises(ValueError):
        variance_independent(np.eye(3), np.ones((4, 4)))


@given(seed=st.integers(0, 2**32 - 1), N=st.integers(2, 5))
def test_dependent_formula_agrees_with_independent(seed, N):
    rng = np.random.default_rng(seed)
    sigma = rng.uniform(0.1, 1.0, (N, N))
    sigma = (sigma + sigma.T) / 2
    B = random_hermitian(rng, N)
    model = IndependentError(sigma)
    assert variance_dependent(B, model.gamma_factor()) == pytest.approx(variance_independent(B, sigma), rel=1e-10)


@given(seed=st.integers(0, 2**32 - 1))
def test_quadratic_factor_reproduces_variance(seed):
    rng = np.random.default_rng(seed)
    model = DependentError(3, rng.uniform(0.2, 3.0), "uniform", 0.01)
    U = variance_quadratic_factor(model.gamma_factor(), 3)
    B = random_hermitian(rng, 3)
    assert np.sum((hvec(B) @ U) ** 2) == pytest.approx(variance_dependent(B, model.gamma_factor()), rel=1e-8)


def test_zero_model_has_empty_factor():
    U = variance_quadratic_factor(IndependentError.uniform(3, 0.0).gamma_factor(), 3)
    assert U.shape == (9, 0)


def test_vec_map(rng):
    X = random_hermitian(rng, 3)
    assert np.allclose(hermitian_vec_map(3) @ hvec(X), X.ravel(order="F"))


def _instance(rng, K=2, N=4):
    ch = generate_rayleigh(K, N, seed=int(rng.integers(1 << 30)))
    Ws = np.array([random_psd(rng, N, 1) / N for _ in range(K)])
    return ch, Ws


def test_soc_rows_match_margin(rng):
    ch, Ws = _instance(rng)
    model = IndependentError.uniform(4, 0.02)
    layout = VariableLayout(4, 2)
    x = layout.pack(Ws, 1.0)
    U = variance_quadratic_factor(model.gamma_factor(), 4)
    q = UserQoS(1.5, 0.1)
    for k in range(2):
        rows = soc_rows(k, q, ch.c_hat[k], ch.noise_power, U, layout)
        assert rows.margin(x) == pytest.approx(
            outage_margin(Ws, k, q, ch.c_hat[k], ch.noise_power, model.gamma_factor()), rel=1e-9, abs=1e-12)
        assert np.allclose(b_selector(layout, k, 1.5) @ x, hvec(build_B(Ws, k, 1.5)))


@given(seed=st.integers(0, 2**32 - 1), scale=st.floats(0.05, 5.0))
def test_lmi_psd_iff_cone_holds(seed, scale):
    rng = np.random.default_rng(seed)
    ch, Ws = _instance(rng, K=2, N=3)
    Ws = Ws * scale
    model = DependentError(3, 1.0, "uniform", 0.01)
    q = UserQoS(1.0, 0.1)
    m = outage_margin(Ws, 0, q, ch.c_hat[0], ch.noise_power, model.gamma_factor())
    lam = np.linalg.eigvalsh(lmi_block(Ws, 0, q, ch.c_hat[0], ch.noise_power, model.gamma_factor()))
    # smallest eigenvalue of [[sI, g], [g^H, s]] is s - ||g||, the cone margin itself
    assert lam.min() == pytest.approx(m, abs=1e-9 * max(1.0, abs(m)))


def test_lmi_size(rng):
    ch, Ws = _instance(rng, N=3)
    D = lmi_block(Ws, 1, UserQoS(2.0), ch.c_hat[1], 0.01, IndependentError.uniform(3, 0.1).gamma_factor())
    assert D.shape == (10, 10)
    assert np.allclose(D, D.conj().T)


def test_gaussian_outage_closed_form():
    assert gaussian_outage(1.2815515655446004, 1.0) == pytest.approx(0.1)
    assert gaussian_outage(-1.0, 0.0) == 1.0 and gaussian_outage(1.0, 0.0) == 0.0


def test_empirical_outage_matches_gaussian(rng):
    ch, Ws = _instance(rng, K=2, N=4)
    ws = np.array([np.linalg.eigh(W)[1][:, -1] * np.sqrt(np.linalg.eigvalsh(W)[-1]) for W in Ws])
    W1 = np.einsum("kn,km->knm", ws, ws.conj())
    model = IndependentError.uniform(4, 0.01)
    q = UserQoS(0.5, 0.1)
    B = build_B(W1, 0, q.gamma)
    mean = np.real(np.trace(B @ ch.c_hat[0])) - ch.noise_power
    sd = np.sqrt(variance_independent(B, model.sigma))
    est = empirical_outage(ws, ch.c_hat[0], model, q, 0, ch.noise_power, trials=40_000, seed=2)
    p = gaussian_outage(mean, sd)
    assert abs(est.fraction - p) < 3 * np.sqrt(p * (1 - p) / 40_000) + 1e-4
    with pytest.raises(ValueError):
        empirical_outage(ws, ch.c_hat[0], model, q, 0, ch.noise_power, trials=10)


def test_sum_rate_hand_example():
    from dfrc_outage.channel import ChannelSet
    h = np.array([[1.0, 0.0], [0.0, 1.0]])
    ch = ChannelSet.from_channels(h, 1.0)
    ws = np.array([[np.sqrt(3), 0.0], [0.0, np.sqrt(7)]])
    # orthogonal users: SINR 3 and 7
    assert sum_rate(ws, ch) == pytest.approx(np.log2(4) + np.log2(8))
    assert sum_rate(ws, ch, duty_ratio=2.0) == pytest.approx(10.0)
    with pytest.warns(UserWarning):
        sum_rate(ws, ch, duty_ratio=0.5)
    r = sum_rate(ws, ch, model=IndependentError.uniform(2, 1e-6), trials=200, seed=0)
    assert r == pytest.approx(5.0, rel=1e-3)
