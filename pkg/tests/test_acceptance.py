"""End-to-end acceptance checks for the numeric and structural contracts.

Tolerances: exact rational / integer equality where stated; identity checks
at 1e-10; power-law fits at +/-0.1 (finite-size fitting tolerance toward
t -> infinity limits).
"""

import math
import time
from fractions import Fraction

import networkx as nx
import numpy as np
import pytest
import scipy.sparse as sp

from selfsimcw import builders, invariants, operators, traces

LOG = math.log
ALPHA_GASKET = 2 * LOG(3) / LOG(5)
ALPHA_VICSEK = 2 * LOG(5) / LOG(15)
FIT_TOL = 0.1


# -- 1: renormalized Euler characteristics, exact rationals -----------------


def test_ac1_euler_exact():
    t0 = time.time()
    expect = {
        "gasket": (Fraction(-1, 2),
                   lambda n: Fraction((3 ** n + 3) // 2 - 3 ** n, 3 ** n)),
        "vicsek": (Fraction(-1, 4),
                   lambda n: Fraction(3 * 5 ** n + 1 - 4 * 5 ** n, 4 * 5 ** n)),
        "lindstrom": (Fraction(-1, 3),
                      lambda n: Fraction(4 * 7 ** n + 2 - 6 * 7 ** n,
                                         6 * 7 ** n)),
    }
    for fam, (limit, closed) in expect.items():
        ex = builders.BUILDERS[fam](8 if fam == "gasket" else 4)
        seq, lim = invariants.euler_characteristic(ex)
        assert lim == limit
        for n, q in enumerate(seq):
            assert q == closed(n)
        assert abs(float(seq[-1]) - float(limit)) < abs(
            float(seq[-2]) - float(limit))
    assert time.time() - t0 < 1.0


# -- 2: cell-count contracts, integer equality -------------------------------


def test_ac2_counts():
    t0 = time.time()
    ex = builders.build_gasket(8)
    for n, K in enumerate(ex.levels):
        assert tuple(K.counts) == ((3 ** n + 3) // 2, 3 ** n)
    ex = builders.build_vicsek(5)
    for n, K in enumerate(ex.levels):
        assert tuple(K.counts) == (3 * 5 ** n + 1, 4 * 5 ** n)
    ex = builders.build_lindstrom(4)
    for n, K in enumerate(ex.levels):
        assert tuple(K.counts) == (4 * 7 ** n + 2, 6 * 7 ** n)
    assert time.time() - t0 < 10.0


# -- 3: alpha_0 from windowed heat-trace fits --------------------------------


def _alpha0(ex, n, m, t_hi, count=80):
    amb = ex.levels[m]
    op = operators.laplacian(amb, 0, "full")
    win = ex.window(0, n, m)
    spec = traces.SpectralWindow(op.matrix, win)
    denom = ex.levels[n].n_cells(1)
    curve = traces.heat_trace(spec, traces.log_times(0.1, t_hi, count), denom)
    kw = spec.kernel_weight() / denom
    return invariants.estimate_alpha(curve, beta=kw,
                                     lambda_min=spec.min_positive())


def test_ac3_alpha0_gasket():
    ex = builders.build_gasket(8)
    est = _alpha0(ex, 7, 8, 1e7)
    assert abs(est.alpha - ALPHA_GASKET) < FIT_TOL


def test_ac3_alpha0_vicsek():
    ex = builders.build_vicsek(5)
    est = _alpha0(ex, 4, 5, 1e7)
    assert abs(est.alpha - ALPHA_VICSEK) < FIT_TOL


# -- 4: beta_1 kernel-dimension trends ----------------------------------------


@pytest.mark.parametrize("fam,N,target", [
    ("gasket", 7, Fraction(1, 2)),
    ("vicsek", 5, Fraction(1, 4)),
    ("lindstrom", 4, Fraction(1, 3)),
])
def test_ac4_beta1(fam, N, target):
    ex = builders.BUILDERS[fam](N)
    beta = invariants.estimate_beta(ex, 1)
    errs = [abs(v - target) for _, v in beta.trend]
    assert all(b <= a for a, b in zip(errs, errs[1:]))
    for n in range(len(ex.levels) - 1):
        assert float(errs[n]) < 3 * ex.epsilon(n)
    # beta_1 = -chi at the limit: kernel dim of Delta_1 is E - V + components,
    # so the level formulas differ from -chi by exactly components/E -> 0
    assert ex.chi_limit == -target
    for i, K in enumerate(ex.levels):
        chi_n = Fraction(K.n_cells(0) - K.n_cells(1), K.n_cells(1))
        assert beta.trend[i][1] == -chi_n + Fraction(1, K.n_cells(1))


# -- 5: dodecagon complex and its dual-graph route ----------------------------


def _nx(K):
    g = nx.Graph()
    g.add_nodes_from(range(K.n_cells(0)))
    cells, faces, _ = K.incidence_records(1)
    for e in range(K.n_cells(1)):
        u, v = faces[cells == e]
        g.add_edge(int(u), int(v))
    return g


def test_ac5_dodecagon_dual_isomorphic():
    for n in range(1, 6):
        ex = builders.build_dodecagon_complex(n)
        K = ex.levels[-1]
        G, _ = builders.dual_graph(K)
        gK = ex.metadata["gasket"].levels[n]
        # explicit certificate: the stored cell -> gasket-vertex map is a
        # graph isomorphism of the dual onto the gasket level
        c2g = ex.metadata["certificates"][n]["cell_to_gasket_vertex"]
        assert sorted(c2g) == sorted(range(gK.n_cells(0)))
        gasket_edges = set()
        cells, faces, _ = gK.incidence_records(1)
        for e in range(gK.n_cells(1)):
            u, v = faces[cells == e]
            gasket_edges.add(frozenset((int(u), int(v))))
        dual_edges = set()
        cells, faces, _ = G.incidence_records(1)
        for e in range(G.n_cells(1)):
            a, b = faces[cells == e]
            dual_edges.add(frozenset((c2g[int(a)], c2g[int(b)])))
        assert dual_edges == gasket_edges
        assert nx.is_isomorphic(_nx(G), _nx(gK))


def test_ac5_dodecagon_alpha2():
    ex = builders.build_dodecagon_complex(7)
    G, _ = builders.dual_graph(ex.levels[-1])
    win = ex.window(2, len(ex.levels) - 3, len(ex.levels) - 1)
    res = invariants.return_probability_pipeline(G, win, 2000, mode="exact")
    assert abs(res.alpha - ALPHA_GASKET) < FIT_TOL


# -- 6: carpet alpha_2 range ---------------------------------------------------


def test_ac6_carpet_alpha2_range():
    t0 = time.time()
    ex = builders.build_carpet_complex(3)
    G, _ = builders.dual_graph(ex.levels[-1])
    assert G.n_cells(0) == 512
    win = ex.window(2, 2, 3)
    res = invariants.return_probability_pipeline(G, win, 1000, mode="exact")
    assert 1.57 <= res.alpha <= 1.97
    assert time.time() - t0 < 60.0


# -- 7: identity suite with rigorous error bounds -----------------------------

FAMILY_LEVELS = {
    "gasket": (5, [2, 3]),
    "vicsek": (3, [0, 1]),
    "lindstrom": (3, [0, 1]),
    "carpet2": (3, [0, 1]),
    "dodecagon2": (4, [0, 1]),
}


@pytest.mark.parametrize("fam", sorted(FAMILY_LEVELS))
def test_ac7_identity_suite(fam):
    N, level_indices = FAMILY_LEVELS[fam]
    ex = builders.BUILDERS[fam](N)
    p = ex.levels[0].dimension
    for n in level_indices:
        K = ex.levels[n]
        for j in range(2, p + 1):
            assert (K.boundary_csr(j - 1) @ K.boundary_csr(j)).nnz == 0
        for j in range(p + 1):
            table = invariants.check_identities(K, j, ex=ex, n=n)
            assert table.ok, f"{fam} n={n} j={j}: {table}"


@pytest.mark.parametrize("fam", sorted(FAMILY_LEVELS))
def test_ac7_sandwich(fam):
    N, _ = FAMILY_LEVELS[fam]
    ex = builders.BUILDERS[fam](N)
    K = ex.levels[-1]
    if K.dimension == 2:
        K, _ = builders.dual_graph(K)
    rep = invariants.sandwich_check(K, [0.3, 1.0, 5.0, 30.0, 200.0])
    assert rep.ok


@pytest.mark.parametrize("fam", sorted(FAMILY_LEVELS))
def test_ac7_cauchy_and_commutator_bounds(fam):
    N, level_indices = FAMILY_LEVELS[fam]
    ex = builders.BUILDERS[fam](N)
    top = len(ex.levels) - 1
    K = ex.levels[top]
    j = 0 if K.dimension == 1 else 2
    A = operators.laplacian(K, j, "full").matrix.astype(float)
    norm_a = operators.OperatorMatrix("", j, None, A).norm2()
    T = (A @ A).tocsr()  # finite propagation r = 2
    norm_t = operators.OperatorMatrix("", j, None, T).norm2()
    D = sp.diags(A.diagonal())
    B = (D @ A).tocsr()  # non-symmetric geometric operator, r = 1
    norm_b = operators.OperatorMatrix("", j, None, B).norm2()
    mu = ex.mu()
    for n in level_indices:
        if n + 1 > top:
            continue
        win_n = ex.window(j, n, top)
        win_n1 = ex.window(j, n + 1, top)
        eps = ex.epsilon(n, j)
        # Cauchy estimate: successive truncations of the state trace
        phi_n = T.diagonal()[win_n].sum() / len(win_n)
        phi_n1 = T.diagonal()[win_n1].sum() / len(win_n1)
        assert abs(phi_n - phi_n1) <= traces.cauchy_bound(norm_t, eps, mu, 2)
        # commutator: truncated traces are asymptotically tracial
        comm = abs(((A @ B).diagonal() - (B @ A).diagonal())[win_n].sum()
                   ) / len(win_n)
        assert comm <= traces.cauchy_bound(norm_a * norm_b, eps, mu, 2, c=2)


# -- 8: graph-like classification ----------------------------------------------


def test_ac8_graph_like():
    t0 = time.time()
    for fam in ("gasket", "vicsek", "lindstrom"):
        K = builders.BUILDERS[fam](3).levels[-1]
        assert operators.is_graph_like(operators.laplacian(K, 0, "plus")).ok
    square = builders.build_carpet_complex(1).levels[0]
    res = operators.is_graph_like(operators.laplacian(square, 1, "plus"))
    assert not res.ok
    assert res.witness and res.message
    carpet = builders.build_carpet_complex(2).levels[-1]
    rel = operators.laplacian(carpet, 2, "minus", relative=True)
    assert operators.is_graph_like(rel).ok
    assert time.time() - t0 < 1.0


# -- 9: phi_gamma and Tauberian calibration -------------------------------------


def test_ac9_phi_gamma_and_tauberian():
    for gamma in (0.25, 0.5, 0.9, 1.5):
        for x in (0.5, 2.0, 10.0, 30.0):
            a = invariants.phi_gamma(x, gamma)
            b = invariants.phi_gamma_integral(x, gamma)
            assert abs(a - b) / abs(b) < 1e-10
    gamma = 0.6
    asym = math.exp(50.0) * 50.0 ** -gamma * gamma * math.gamma(gamma)
    assert abs(invariants.phi_gamma(50.0, gamma) - asym) / asym < 0.01
    ts = np.logspace(-1, 4, 80)
    rep = invariants.tauberian_check(ts, ts ** -0.5 / (1 + ts ** -0.5))
    assert rep.k <= 2.0


# -- 10: exact vs Monte Carlo return-probability agreement ----------------------


def test_ac10_exact_vs_monte_carlo():
    ex = builders.build_gasket(6)
    K = ex.levels[6]
    win = ex.window(0, 5, 6)
    exact = invariants.return_probability_pipeline(K, win, 250, mode="exact")
    for seed in (1, 2, 3):
        mc = invariants.return_probability_pipeline(
            K, win, 250, mode="monte_carlo", seed=seed, budget=10 ** 6,
            fit_window=exact.fit.window)
        assert abs(exact.gamma - mc.gamma) <= exact.error95 + mc.error95
    # byte-exact reproducibility for a fixed seed
    a = invariants.return_probability_pipeline(
        K, win, 250, mode="monte_carlo", seed=3, budget=10 ** 6,
        fit_window=exact.fit.window)
    b = invariants.return_probability_pipeline(
        K, win, 250, mode="monte_carlo", seed=3, budget=10 ** 6,
        fit_window=exact.fit.window)
    assert a.pk.tobytes() == b.pk.tobytes()
    assert a.gamma == b.gamma and a.stderr == b.stderr
