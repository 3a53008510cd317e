import numpy as np
import pytest
from hypothesis import given, strategies as st

from dfrc_outage.conic import (
    Cone,
    ConicBuilder,
    ConicProblem,
    SolverSettings,
    Workspace,
    project_psd,
    project_soc,
    smat,
    solve,
    svec,
)
from dfrc_outage.linalg import hmat, hvec

from conftest import random_hermitian


def _identity_sdp():
    # min Tr(X) s.t. X_ii = 1, X PSD (3x3 real)  ->  X = I, objective 3
    n = 3
    b = ConicBuilder(6)
    b.add_psd(np.eye(6), 0.0, n)
    b.add_equality(np.eye(6)[:3], -np.ones(3))
    q = svec(np.eye(n))
    return b.build(q)


def _soc_min_t():
    # min t s.t. ||(1, 1)|| <= t
    b = ConicBuilder(1)
    b.add_soc(np.zeros((2, 1)), np.ones(2), np.array([1.0]), 0.0)
    return b.build(np.array([1.0]))


def _infeasible_box():
    b = ConicBuilder(1)
    b.add_nonneg(np.array([[1.0]]), -1.0)  # x >= 1
    b.add_nonneg(np.array([[-1.0]]), 0.0)  # x <= 0
    return b.build(np.array([0.0]))


def test_identity_sdp():
    rep = solve(_identity_sdp())
    assert rep.status == "optimal"
    assert rep.objective == pytest.approx(3.0, abs=1e-4)
    assert np.allclose(smat(rep.s[:6], 3), np.eye(3), atol=1e-4)


def test_soc_min_t():
    rep = solve(_soc_min_t())
    assert rep.status == "optimal"
    assert rep.objective == pytest.approx(np.sqrt(2), abs=1e-4)


def test_infeasible_box_flagged():
    assert solve(_infeasible_box()).status == "infeasible_suspected"


def test_quadratic_objective_with_equality():
    # min (x-1)^2 + (y-2)^2  s.t. x + y = 1  ->  (0, 1)
    b = ConicBuilder(2)
    b.add_equality(np.array([[1.0, 1.0]]), -1.0)
    rep = solve(b.build(np.array([-2.0, -4.0]), P=2 * np.eye(2)))
    assert rep.status == "optimal"
    assert np.allclose(rep.x, [0.0, 1.0], atol=1e-5)


def test_hermitian_psd_block():
    # nearest Hermitian PSD matrix in Frobenius norm equals the eigenvalue clamp
    rng = np.random.default_rng(3)
    C = random_hermitian(rng, 3)
    b = ConicBuilder(9)
    b.add_hpsd(np.eye(9), 0.0, 3)
    rep = solve(b.build(-2 * hvec(C), P=2 * np.eye(9)))
    assert rep.status == "optimal"
    assert np.allclose(hmat(rep.x, 3), project_psd(C), atol=1e-4)


def test_warm_start_and_q_swap():
    ws = Workspace(_identity_sdp())
    first = ws.solve()
    again = ws.solve(warm=first)
    assert again.iterations <= first.iterations
    # doubling the cost leaves the minimiser unchanged
    scaled = ws.solve(q=2 * _identity_sdp().q, warm=first)
    assert scaled.objective == pytest.approx(6.0, abs=1e-4)


def test_rho_adaptation_backs_off():
    # linear-objective SDP; each rho change doubles the adaptation interval
    rng = np.random.default_rng(5)
    n = 8
    C = rng.standard_normal((n, n))
    C = C + C.T
    dim = n * (n + 1) // 2
    b = ConicBuilder(dim)
    b.add_psd(np.eye(dim), 0.0, n)
    diag = np.array([svec(np.diag(np.eye(n)[i])) for i in range(n)])
    b.add_equality(diag, -np.ones(n))
    settings = SolverSettings(adapt_every=50)
    ws = Workspace(b.build(svec(C)), settings)
    rep = ws.solve()
    assert rep.status == "optimal"
    changes = ws.factorizations - 1
    # the c-th change cannot happen before iteration adapt_every * (2^c - 1)
    assert settings.adapt_every * (2 ** changes - 1) <= rep.iterations


def test_trace_file(tmp_path):
    path = tmp_path / "trace.csv"
    solve(_soc_min_t(), SolverSettings(trace_path=str(path)))
    head = path.read_text().splitlines()[0]
    assert head == "iteration,primal_residual,dual_residual,objective"


def test_builder_shape_checks():
    b = ConicBuilder(3)
    with pytest.raises(ValueError):
        b.add_hpsd(np.eye(3), 0.0, 2)
    with pytest.raises(ValueError):
        ConicProblem(None, np.zeros(2), np.zeros((1, 3)), np.zeros(1), [Cone("zero", 1)])
    with pytest.raises(ValueError):
        ConicProblem(None, np.zeros(2), np.zeros((2, 2)), np.zeros(2), [Cone("zero", 1)])


def test_svec_roundtrip():
    X = np.array([[1.0, 2.0], [2.0, 5.0]])
    assert np.allclose(smat(svec(X), 2), X)
    assert svec(X) @ svec(X) == pytest.approx(np.sum(X * X))


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 6))
def test_psd_projection_idempotent_nonexpansive(seed, n):
    rng = np.random.default_rng(seed)
    X, Y = random_hermitian(rng, n), random_hermitian(rng, n)
    PX, PY = project_psd(X), project_psd(Y)
    assert np.linalg.eigvalsh(PX).min() >= -1e-10
    assert np.allclose(project_psd(PX), PX, atol=1e-10)
    assert np.linalg.norm(PX - PY) <= np.linalg.norm(X - Y) + 1e-10


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 6))
def test_soc_projection_idempotent_nonexpansive(seed, n):
    rng = np.random.default_rng(seed)
    x, t = rng.standard_normal(n) * 2, rng.standard_normal() * 2
    y, u = rng.standard_normal(n) * 2, rng.standard_normal() * 2
    px, pt = project_soc(x, t)
    py, pu = project_soc(y, u)
    assert np.linalg.norm(px) <= pt + 1e-12
    qx, qt = project_soc(px, pt)
    assert np.allclose(qx, px) and qt == pytest.approx(pt)
    d_in = np.sqrt(np.sum((x - y) ** 2) + (t - u) ** 2)
    d_out = np.sqrt(np.sum((px - py) ** 2) + (pt - pu) ** 2)
    assert d_out <= d_in + 1e-12


def test_against_cvxpy_if_available():
    cp = pytest.importorskip("cvxpy")
    rng = np.random.default_rng(0)
    n = 4
    C = random_hermitian(rng, n)
    # min Tr(CX) s.t. Tr(X) = 1, X PSD  ->  smallest eigenvalue of C
    b = ConicBuilder(n * n)
    b.add_hpsd(np.eye(n * n), 0.0, n)
    b.add_equality(hvec(np.eye(n))[None, :], -1.0)
    rep = solve(b.build(hvec(C)))
    X = cp.Variable((n, n), hermitian=True)
    prob = cp.Problem(cp.Minimize(cp.real(cp.trace(C @ X))), [X >> 0, cp.real(cp.trace(X)) == 1])
    prob.solve()
    assert rep.objective == pytest.approx(prob.value, abs=1e-4)
    assert rep.objective == pytest.approx(np.linalg.eigvalsh(C).min(), abs=1e-4)
