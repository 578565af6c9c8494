import numpy as np
import pytest
import scipy.linalg

from selfsimcw import builders, operators, traces


@pytest.fixture(scope="module")
def gasket_setup():
    ex = builders.build_gasket(4)
    K = ex.levels[4]
    op = operators.laplacian(K, 0, "full")
    win = ex.window(0, 3, 4)
    return ex, K, op, win


def test_window_trace_matches_dense(gasket_setup):
    _, _, op, win = gasket_setup
    dense = op.matrix.toarray()
    assert traces.window_trace(op.matrix, win) == dense.diagonal()[win].sum()


def test_spectral_window_heat_oracle(gasket_setup):
    # independent oracle: dense expm restricted to the window diagonal
    _, _, op, win = gasket_setup
    spec = traces.SpectralWindow(op.matrix, win)
    dense = op.matrix.toarray().astype(float)
    for t in (0.3, 2.0, 11.0):
        expected = scipy.linalg.expm(-t * dense).diagonal()[win].sum()
        got = spec.functional_trace(lambda lam: np.exp(-t * lam))
        assert abs(got - expected) < 1e-10


def test_spectral_window_resolvent_oracle(gasket_setup):
    _, _, op, win = gasket_setup
    spec = traces.SpectralWindow(op.matrix, win)
    dense = op.matrix.toarray().astype(float)
    t = 5.0
    expected = np.linalg.inv(
        np.eye(len(dense)) + t * dense).diagonal()[win].sum()
    got = spec.functional_trace(lambda lam: 1 / (1 + t * lam))
    assert abs(got - expected) < 1e-10


def test_kernel_weight_and_min_positive(gasket_setup):
    _, _, op, win = gasket_setup
    spec = traces.SpectralWindow(op.matrix, win)
    # connected graph: one-dimensional kernel, uniform vector
    assert abs(spec.kernel_weight() - len(win) / op.shape[0]) < 1e-10
    assert spec.min_positive() > 0


def test_trace_estimate_kinds(gasket_setup):
    ex, _, op, win = gasket_setup
    e1 = traces.trace_state(op.matrix, win)
    assert e1.kind == "heuristic" and e1.error_bound is None
    e2 = traces.trace_state(op.matrix, win, norm=op.norm2(),
                            eps=ex.epsilon(3), mu=ex.mu(), r=1)
    assert e2.kind == "rigorous"
    assert e2.error_bound == traces.cauchy_bound(op.norm2(), ex.epsilon(3),
                                                 ex.mu(), 1)
    assert e1.value == e2.value


def test_curve_csv_format(gasket_setup):
    ex, _, op, win = gasket_setup
    spec = traces.SpectralWindow(op.matrix, win)
    ts = traces.log_times(0.1, 100.0, 7)
    curve = traces.heat_trace(spec, ts, ex.levels[3].n_cells(1), tag="delta_0")
    text = curve.to_csv()
    lines = text.strip().split("\n")
    assert lines[0] == "t,value,error_bound,kind"
    assert len(lines) == 8
    t0, v0, e0, k0 = lines[1].split(",")
    assert float(t0) == ts[0] and k0 == "heuristic" and e0 == ""
    # 17 significant digits survive a float roundtrip
    assert float(v0) == curve.values[0]


def test_heat_curve_monotone(gasket_setup):
    ex, _, op, win = gasket_setup
    spec = traces.SpectralWindow(op.matrix, win)
    ts = traces.log_times(0.1, 1e4, 25)
    curve = traces.heat_trace(spec, ts, ex.levels[3].n_cells(1))
    v = curve.values
    assert (np.diff(v) < 1e-12).all()
    assert v[-1] >= spec.kernel_weight() / ex.levels[3].n_cells(1) - 1e-12


def test_power_trace_oracle():
    ex = builders.build_gasket(3)
    K = ex.levels[3]
    win = ex.window(0, 2, 3)
    w = operators.walk_operators(K)
    tau, paired = traces.power_trace(w, win, 6)
    P = w.transition.toarray()
    M = np.eye(len(P))
    for k in range(7):
        expected = M.diagonal()[win].sum() / len(win)
        assert abs(tau[k] - expected) < 1e-12
        M = M @ P
    assert np.allclose(paired[:-1], tau[:-1] + tau[1:])
    assert tau[0] == pytest.approx(1.0, abs=1e-12)
    assert tau[1] == pytest.approx(0.0, abs=1e-12)


def test_spectral_density_monotone(gasket_setup):
    ex, _, op, win = gasket_setup
    spec = traces.SpectralWindow(op.matrix, win)
    grid = np.linspace(0.0, 6.0, 13)
    N = traces.spectral_density(spec, grid, len(win))
    assert (np.diff(N) >= 0).all()
    assert abs(N[-1] - 1.0) < 1e-10


def test_log_times_validation():
    ts = traces.log_times(0.1, 1000.0, 5)
    assert len(ts) == 5 and ts[0] == pytest.approx(0.1)
    with pytest.raises(ValueError):
        traces.log_times(0.0, 1.0, 5)
    with pytest.raises(ValueError):
        traces.log_times(1.0, 0.5, 5)
