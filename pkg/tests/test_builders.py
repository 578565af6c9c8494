import networkx as nx
import numpy as np
import pytest

from selfsimcw import builders


def gasket_counts(n):
    return (3 ** n + 3) // 2, 3 ** n


def vicsek_counts(n):
    return 3 * 5 ** n + 1, 4 * 5 ** n


def lindstrom_counts(n):
    return 4 * 7 ** n + 2, 6 * 7 ** n


def test_gasket_counts():
    ex = builders.build_gasket(8)
    for n, K in enumerate(ex.levels):
        assert tuple(K.counts) == gasket_counts(n)


def test_vicsek_counts():
    ex = builders.build_vicsek(5)
    for n, K in enumerate(ex.levels):
        assert tuple(K.counts) == vicsek_counts(n)


def test_lindstrom_counts():
    ex = builders.build_lindstrom(4)
    for n, K in enumerate(ex.levels):
        assert tuple(K.counts) == lindstrom_counts(n)


def test_carpet_counts():
    ex = builders.build_carpet_complex(3)
    for n, K in enumerate(ex.levels):
        assert K.n_cells(2) == 8 ** n


def test_dodecagon_counts():
    # one 12-gon per gasket vertex; a shared side per gasket edge
    ex = builders.build_dodecagon_complex(4)
    for i, K in enumerate(ex.levels):
        n = ex.level_number(i)
        gv, ge = gasket_counts(n)
        assert K.n_cells(2) == gv
        assert K.n_cells(1) == 12 * gv - ge


@pytest.mark.parametrize("family,r_expected", [
    ("gasket", 0), ("vicsek", 0), ("lindstrom", 0), ("carpet2", 0),
    ("dodecagon2", 5),
])
def test_self_similarity(family, r_expected):
    ex = builders.BUILDERS[family](3)
    report = builders.verify_self_similarity(ex)
    assert report.ok, str(report)
    assert report.intersection_radius == r_expected


@pytest.mark.parametrize("family", sorted(builders.BUILDERS))
def test_epsilon_decreases(family):
    ex = builders.BUILDERS[family](4)
    eps = [ex.epsilon(n) for n in range(len(ex.levels) - 1)]
    assert all(b <= a for a, b in zip(eps, eps[1:]))
    assert eps[-1] < eps[0]
    assert eps[-1] < 0.3


def test_copy_maps_cover_next_level():
    ex = builders.build_vicsek(2)
    K2 = ex.levels[2]
    for j in (0, 1):
        covered = np.zeros(K2.n_cells(j), dtype=bool)
        for cm in ex.copy_maps[1]:
            covered[cm[j]] = True
        assert covered.all()


def test_dual_graph_witnesses():
    ex = builders.build_carpet_complex(2)
    K = ex.levels[-1]
    G, witnesses = builders.dual_graph(K)
    b2 = K.boundary_csr(2)
    assert G.n_cells(0) == K.n_cells(2)
    assert G.n_cells(1) == len(witnesses)
    for (a, b), face in witnesses:
        assert b2[face, a] != 0 and b2[face, b] != 0


def _nx(K):
    g = nx.Graph()
    g.add_nodes_from(range(K.n_cells(0)))
    cells, faces, _ = K.incidence_records(1)
    for e in range(K.n_cells(1)):
        u, v = faces[cells == e]
        g.add_edge(int(u), int(v))
    return g


@pytest.mark.parametrize("n", range(1, 4))
def test_dodecagon_dual_is_gasket(n):
    ex = builders.build_dodecagon_complex(n)
    G, _ = builders.dual_graph(ex.levels[-1])
    gK = ex.metadata["gasket"].levels[n]
    assert nx.is_isomorphic(_nx(G), _nx(gK))


def test_dodecagon_certificates():
    ex = builders.build_dodecagon_complex(2)
    cert = ex.metadata["certificates"][2]
    K = ex.levels[-1]
    gK = ex.metadata["gasket"].levels[2]
    c2g = cert["cell_to_gasket_vertex"]
    assert len(c2g) == K.n_cells(2)
    assert len(set(c2g)) == gK.n_cells(0)
    s2g = cert["shared_edge_to_gasket_edge"]
    assert len(s2g) == gK.n_cells(1)
    assert sorted(g for _, g in s2g) == list(range(gK.n_cells(1)))
