import numpy as np
import pytest
from hypothesis import given, strategies as st

from dfrc_outage.harness import (
    ScenarioConfig,
    channels_for,
    comm_config,
    error_model,
    gamma_factor_for,
    loss_config,
    radar_config,
    radar_only_loss,
)
from dfrc_outage.optimizer import (
    CommCentricConfig,
    RadarCentricConfig,
    best_alpha,
    equalize_antenna_power,
    extract_rank1,
    outage_margins,
    penalty,
    randomization_baseline,
    rank_ratio,
    solve_comm_centric,
    solve_radar_centric,
)
from dfrc_outage.radar_loss import combined_loss

from conftest import random_psd

SMALL = ScenarioConfig().replace(**{
    "array.num_antennas": 6,
    "users.num_users": 2,
    "users.gamma_db": [5],
    "loss.delta": 0.01,
    "dois.grid_points": 91,
})


@pytest.fixture(scope="module")
def small_design():
    ch = channels_for(SMALL, 0)
    model = error_model(SMALL)
    rc = radar_config(SMALL)
    return ch, model, rc, solve_radar_centric(ch, model, rc, gamma_factor=gamma_factor_for(SMALL, model, 0))


def test_penalty_hand_example():
    W = np.diag([2.0, 1.0])
    assert penalty([W], [np.diag([3.0, 0.0])]) == pytest.approx(1.0)


def test_penalty_zero_for_rank_one_at_anchor(rng):
    w = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    W = np.outer(w, w.conj())
    assert penalty([W], [W]) == pytest.approx(0.0, abs=1e-10)


@given(seed=st.integers(0, 2**32 - 1), rank=st.integers(1, 4))
def test_penalty_nonnegative(seed, rank):
    rng = np.random.default_rng(seed)
    W, A = random_psd(rng, 4, rank), random_psd(rng, 4, 2)
    assert penalty([W], [A]) >= -1e-10


def test_penalty_shape_checks():
    with pytest.raises(ValueError):
        penalty([np.eye(2)], [])
    with pytest.raises(ValueError):
        penalty([np.eye(2)], [np.eye(3)])


def test_extract_rank1_diagonal():
    w, ratio = extract_rank1(np.diag([4.0, 1.0]))
    assert np.allclose(w, [2.0, 0.0])
    assert ratio == pytest.approx(0.25)


def test_extract_rank1_recovers_vector_up_to_phase(rng):
    w = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    v, ratio = extract_rank1(np.outer(w, w.conj()))
    assert ratio < 1e-12
    assert np.allclose(np.outer(v, v.conj()), np.outer(w, w.conj()))
    assert abs(np.angle(v[np.argmax(np.abs(v))])) < 1e-12


def test_extract_rank1_warns_on_zero():
    with pytest.warns(UserWarning):
        w, _ = extract_rank1(np.zeros((3, 3)))
    assert not np.any(w)


def test_rank_ratio():
    assert rank_ratio(np.diag([1.0, 0.5, 0.0])) == pytest.approx(0.5)
    assert rank_ratio(np.zeros((2, 2))) == 0.0


@given(seed=st.integers(0, 2**32 - 1))
def test_equalize_antenna_power(seed):
    rng = np.random.default_rng(seed)
    Ws = np.array([random_psd(rng, 5, 1) + 1e-3 * np.eye(5) for _ in range(3)])
    out, d = equalize_antenna_power(Ws, 2.0)
    assert np.allclose(np.real(np.einsum("knn->n", out)), 2.0 / 5)
    for W, V in zip(Ws, out):
        assert np.linalg.eigvalsh(V).min() > -1e-12
        assert np.linalg.matrix_rank(V, tol=1e-9) == np.linalg.matrix_rank(W, tol=1e-9)


def test_best_alpha_minimises_matching_loss(small_design):
    *_, res = small_design
    cfg = loss_config(SMALL)
    a = best_alpha(res.covariance, cfg)
    base = combined_loss(res.covariance, a, cfg).l1
    for s in (0.9, 1.1):
        assert combined_loss(res.covariance, a * s, cfg).l1 >= base


def test_config_validation():
    lc = loss_config(SMALL)
    with pytest.raises(ValueError):
        RadarCentricConfig(qos=(), power_budget=1.0, loss=lc, mu=1.0)
    with pytest.raises(ValueError):
        RadarCentricConfig(qos=(), power_budget=1.0, loss=lc, rank_tol=0.0)
    with pytest.raises(ValueError):
        CommCentricConfig(gammas=(1.0,), power_budget=1.0, loss=lc, c1=-1)


def test_radar_centric_invariants(small_design):
    ch, model, rc, res = small_design
    assert res.rank_one and res.status == "optimal"
    assert max(res.rank_ratios) < rc.rank_tol
    rows = np.sum(np.abs(res.beamformers) ** 2, axis=0)
    assert np.allclose(rows, rc.power_budget / ch.num_antennas, rtol=1e-6)
    assert res.relaxed_loss <= res.loss.combined + 1e-6
    assert res.trace[0]["zeta"] == np.inf
    zetas = [t["zeta"] for t in res.trace[1:]]
    assert np.allclose(np.diff(zetas) / np.array(zetas[:-1]), rc.mu - 1)


def test_radar_centric_meets_outage_cones(small_design):
    ch, model, rc, res = small_design
    margins = outage_margins(res.beamformers, ch, rc.qos, model.gamma_factor())
    # cone rows hold to first-order solver accuracy after the rank-one polish
    assert np.all(margins > -1e-3 * ch.noise_power)
    for est, q in zip(res.outage, rc.qos):
        assert est.fraction <= q.p_out + 3 * np.sqrt(q.p_out * (1 - q.p_out) / est.trials)


def test_radar_only_is_a_lower_bound(small_design):
    *_, res = small_design
    ref, R = radar_only_loss(SMALL)
    assert ref <= res.loss.combined + 1e-6
    assert np.allclose(np.real(np.diag(R)), SMALL.power_w / SMALL.array.num_antennas, rtol=1e-6)


def test_comm_centric_without_errors_reaches_floor():
    cfg = SMALL.replace(**{"error.variant": "none", "users.gamma_db": [3], "loss.c1": 2.0, "loss.c2": 50.0})
    ch = channels_for(cfg, 0)
    cc = comm_config(cfg)
    res = solve_comm_centric(ch, error_model(cfg), cc)
    assert res.status == "optimal"
    assert res.max_outage <= cc.bisection_tol
    steps = int(np.ceil(np.log2(0.5 / cc.bisection_tol)))
    assert all(s <= steps for s in res.bisection_steps)


def test_baseline_empty_and_row_power(small_design):
    ch, model, rc, res = small_design
    lc = loss_config(SMALL)
    empty = randomization_baseline(res.relaxed_blocks, ch, model, rc.qos, rc.power_budget, lc, 0)
    assert empty.beamformers is None and empty.num_feasible == 0
    out = randomization_baseline(res.relaxed_blocks, ch, model, rc.qos, rc.power_budget, lc, 4000, seed=1)
    assert out.num_candidates == 4000
    if out.beamformers is not None:
        rows = np.sum(np.abs(out.beamformers) ** 2, axis=0)
        assert np.allclose(rows, rc.power_budget / ch.num_antennas, atol=1e-9)
        assert out.loss.combined >= res.relaxed_loss - 1e-6
    with pytest.raises(ValueError):
        randomization_baseline(res.relaxed_blocks, ch, model, rc.qos, rc.power_budget, lc, 10, row_norm="l1")


def test_baseline_is_deterministic(small_design):
    ch, model, rc, res = small_design
    lc = loss_config(SMALL)
    a = randomization_baseline(res.relaxed_blocks, ch, model, rc.qos, rc.power_budget, lc, 500, seed=7)
    b = randomization_baseline(res.relaxed_blocks, ch, model, rc.qos, rc.power_budget, lc, 500, seed=7)
    assert a.num_feasible == b.num_feasible
    if a.loss is not None:
        assert a.loss.combined == b.loss.combined
