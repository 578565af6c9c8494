"""Self-similar exhaustions of the example complexes.

Each family is generated by combinatorial substitution on integer lattice
coordinates: level n+1 is assembled from q placed copies of level n, cells
deduplicated by coordinate key.  Orientations are derived from coordinates by
translation-invariant rules, so every copy map preserves incidence numbers
exactly.  Coordinates survive only as opaque labels.

Families: gasket, vicsek, lindstrom (graphs), carpet2 and dodecagon2
(2-complexes).  The dodecagon family thickens each gasket vertex into a
12-gon, one shared side per gasket edge, so its dual graph reproduces the
gasket graph at the same level; the exhaustion starts at level 1 so that all
of its copy maps are plain translations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .complexes import CWComplex, SubcomplexMask, frontier, validate

# sixth roots of unity in triangular-lattice coordinates
HEX_DIRS = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)]


@dataclass
class CellMap:
    """Per-dimension index maps between two complexes."""

    maps: list

    def __getitem__(self, j):
        return self.maps[j]

    def compose(self, other):
        """self: A->B composed with other: B->C, giving A->C."""
        return CellMap([other.maps[j][m] for j, m in enumerate(self.maps)])


@dataclass
class LocalIsomorphism:
    """Cell bijection between two embedded copies inside one ambient complex."""

    source: list  # per-dim arrays of ambient indices
    target: list

    def testable_mask(self, ambient, j, r):
        """Ambient j-cells of the source whose r-ball stays inside both sides."""
        n = ambient.n_cells(j)
        src = np.zeros(n, dtype=bool)
        src[self.source[j]] = True
        tgt = np.zeros(n, dtype=bool)
        tgt[self.target[j]] = True
        src_deep = _deep_mask(ambient, j, src, r)
        tgt_deep = _deep_mask(ambient, j, tgt, r)
        # position i runs over K_n cells: need both images deep
        return src_deep[self.source[j]] & tgt_deep[self.target[j]]


def _deep_mask(ambient, j, mask, r):
    """Cells of mask whose distance to the complement exceeds r."""
    adj = ambient.step_adjacency(j, "d")
    reach = (~mask).astype(np.int64)
    for _ in range(r):
        reach = reach + adj @ reach
    return mask & (np.asarray(reach).ravel() == 0)


class Exhaustion:
    """Nested levels K_n with copy maps gamma in G(n, n+1).

    copy_maps[i][g] maps level i into level i+1; copy 0 is the inclusion.
    level_number(i) = i + level_offset (the dodecagon family starts at 1).
    """

    def __init__(self, family, levels, copy_maps, level_offset=0,
                 chi_limit=None, closed_counts=None, metadata=None):
        self.family = family
        self.levels = levels
        self.copy_maps = copy_maps
        self.level_offset = level_offset
        self.chi_limit = chi_limit
        self.closed_counts = closed_counts
        self.metadata = metadata or {}
        self._cache = {}

    def __len__(self):
        return len(self.levels)

    def level_number(self, i):
        return i + self.level_offset

    def index_of(self, level_number):
        i = level_number - self.level_offset
        if not 0 <= i < len(self.levels):
            raise IndexError(f"level {level_number} not stored")
        return i

    @property
    def top(self):
        return self.levels[-1]

    def inclusion(self, n, m):
        """Composed inclusion CellMap of level index n into level index m."""
        if n == m:
            K = self.levels[n]
            return CellMap([np.arange(K.n_cells(j))
                            for j in range(K.dimension + 1)])
        key = ("incl", n, m)
        if key not in self._cache:
            cm = self.copy_maps[n][0]
            for i in range(n + 1, m):
                cm = cm.compose(self.copy_maps[i][0])
            self._cache[key] = cm
        return self._cache[key]

    def window(self, j, n, m):
        """Ambient indices of E_j(K_n) inside K_m."""
        return self.inclusion(n, m)[j]

    def mask(self, n, m):
        """SubcomplexMask of K_n inside K_m."""
        incl = self.inclusion(n, m)
        Km = self.levels[m]
        member = []
        for j in range(Km.dimension + 1):
            arr = np.zeros(Km.n_cells(j), dtype=bool)
            arr[incl[j]] = True
            member.append(arr)
        return SubcomplexMask(Km, member)

    def copies(self, n, m):
        """All composed maps in G(n, m) as CellMaps into level index m."""
        maps = [self.inclusion(n, n)]
        for i in range(n, m):
            maps = [cm.compose(g) for cm in maps for g in self.copy_maps[i]]
        return maps

    def isomorphism(self, n, m, copy_seq):
        """LocalIsomorphism between the inclusion image of K_n in K_m and the
        image under the copy sequence (one copy index per step n..m-1)."""
        src = self.inclusion(n, m)
        tgt = self.inclusion(n, n)
        for step, g in zip(range(n, m), copy_seq):
            tgt = tgt.compose(self.copy_maps[step][g])
        return LocalIsomorphism(list(src.maps), list(tgt.maps))

    # -- frontier statistics ----------------------------------------------

    def g_frontier(self, n, j, depth=2):
        """G-invariant j-frontier of K_n, pulled back from stored copies.

        Uses all composed copies gamma in G(n, m) for m up to n+depth (capped
        at the top stored level), with frontiers computed inside the top
        level so the complement is as large as the stored data allows.
        """
        key = ("gfrontier", n, j, depth)
        if key in self._cache:
            return self._cache[key]
        N = len(self.levels) - 1
        top = self.levels[N]
        adj = top.step_adjacency(j, "d")
        out = np.zeros(self.levels[n].n_cells(j), dtype=bool)
        for m in range(n, min(n + depth, N) + 1):
            lift = self.inclusion(m, N)
            for cm in self.copies(n, m):
                image = lift[j][cm[j]]
                mask = np.zeros(top.n_cells(j), dtype=bool)
                mask[image] = True
                touch = np.asarray(adj @ (~mask).astype(np.int64)).ravel() > 0
                out |= touch[image]
        self._cache[key] = out
        return out

    def epsilon(self, n, j=None):
        """|F_G(E_j K_n)| / |E_j K_n|; max over dimensions when j is None."""
        js = range(self.levels[n].dimension + 1) if j is None else [j]
        vals = []
        for jj in js:
            cnt = self.levels[n].n_cells(jj)
            vals.append(self.g_frontier(n, jj).sum() / cnt if cnt else 0.0)
        return max(vals)

    def mu(self, j=None):
        """sup |B_1| over cells of the top stored level (proxy for M)."""
        bounds = self.top.degree_bounds()
        if j is None:
            return max(bounds.mu)
        return bounds.mu[j]


# -- shared assembly helpers ----------------------------------------------


def _graph_complex(vkeys, ekeys):
    """1-complex from sorted vertex coords and ordered edge pairs."""
    vkeys = sorted(vkeys)
    vidx = {v: i for i, v in enumerate(vkeys)}
    ekeys = sorted(ekeys)
    cells, faces, signs = [], [], []
    for i, (a, b) in enumerate(ekeys):
        cells += [i, i]
        faces += [vidx[a], vidx[b]]
        signs += [-1, 1]
    return CWComplex(1, [len(vkeys), len(ekeys)], {1: (cells, faces, signs)},
                     labels=(tuple(vkeys), tuple(ekeys)))


def _translate(key, t):
    return (key[0] + t[0], key[1] + t[1])


def _graph_level_up(K, offsets):
    """Next graph level from translated copies; returns (K_next, copy maps)."""
    vkeys, ekeys = K.labels
    new_v, new_e = set(), set()
    for t in offsets:
        new_v.update(_translate(v, t) for v in vkeys)
        new_e.update((_translate(a, t), _translate(b, t)) for a, b in ekeys)
    if len({frozenset(e) for e in new_e}) != len(new_e):
        raise AssertionError("edge collision with incompatible orientation")
    K2 = _graph_complex(new_v, new_e)
    v2 = {v: i for i, v in enumerate(K2.labels[0])}
    e2 = {e: i for i, e in enumerate(K2.labels[1])}
    maps = []
    for t in offsets:
        vm = np.array([v2[_translate(v, t)] for v in vkeys], dtype=np.int64)
        em = np.array([e2[(_translate(a, t), _translate(b, t))]
                       for a, b in ekeys], dtype=np.int64)
        maps.append(CellMap([vm, em]))
    return K2, maps


def _check_counts(K, expected):
    if tuple(K.counts) != tuple(expected):
        raise AssertionError(
            f"cell counts {K.counts} do not match expected {expected}")


# -- graph families --------------------------------------------------------


def build_gasket(levels):
    """Gasket graph exhaustion; level n has 3^n edges, (3^n+3)/2 vertices."""
    if levels < 1:
        raise ValueError("levels must be >= 1")
    K0 = _graph_complex([(0, 0), (1, 0)], [((0, 0), (1, 0))])
    tri_e = [((0, 0), (1, 0)), ((0, 1), (0, 0)), ((1, 0), (0, 1))]
    K1 = _graph_complex([(0, 0), (1, 0), (0, 1)], tri_e)
    # the three 120-degree rotations placing the base edge onto the triangle
    rotations = [
        {(0, 0): (0, 0), (1, 0): (1, 0)},
        {(0, 0): (1, 0), (1, 0): (0, 1)},
        {(0, 0): (0, 1), (1, 0): (0, 0)},
    ]
    v1 = {v: i for i, v in enumerate(K1.labels[0])}
    e1 = {e: i for i, e in enumerate(K1.labels[1])}
    maps01 = []
    for rho in rotations:
        vm = np.array([v1[rho[v]] for v in K0.labels[0]], dtype=np.int64)
        em = np.array([e1[(rho[a], rho[b])] for a, b in K0.labels[1]],
                      dtype=np.int64)
        maps01.append(CellMap([vm, em]))
    lvls, cmaps = [K0, K1], [maps01]
    for n in range(1, levels):
        s = 2 ** (n - 1)
        K2, maps = _graph_level_up(lvls[-1], [(0, 0), (s, 0), (0, s)])
        lvls.append(K2)
        cmaps.append(maps)
    for n, K in enumerate(lvls):
        _check_counts(K, ((3 ** n + 3) // 2, 3 ** n))
    return Exhaustion(
        "gasket", lvls, cmaps,
        chi_limit=Fraction(-1, 2),
        closed_counts=lambda n: ((3 ** n + 3) // 2, 3 ** n),
    )


def build_vicsek(levels):
    """Vicsek graph exhaustion; level n has 4*5^n edges, 3*5^n+1 vertices."""
    if levels < 1:
        raise ValueError("levels must be >= 1")
    square = [((0, 0), (1, 0)), ((1, 0), (1, 1)), ((1, 1), (0, 1)),
              ((0, 1), (0, 0))]
    K0 = _graph_complex([(0, 0), (1, 0), (1, 1), (0, 1)], square)
    lvls, cmaps, anchor = [K0], [], 0
    for n in range(levels):
        s = 3 ** n
        offsets = [(0, 0), (s, s), (-s, -s), (s, -s), (-s, s)]
        K2, maps = _graph_level_up(lvls[-1], offsets)
        lvls.append(K2)
        cmaps.append(maps)
    for n, K in enumerate(lvls):
        _check_counts(K, (3 * 5 ** n + 1, 4 * 5 ** n))
    return Exhaustion(
        "vicsek", lvls, cmaps,
        chi_limit=Fraction(-1, 4),
        closed_counts=lambda n: (3 * 5 ** n + 1, 4 * 5 ** n),
    )


def build_lindstrom(levels):
    """Lindstrom graph exhaustion; level n has 6*7^n edges, 4*7^n+2 vertices."""
    if levels < 1:
        raise ValueError("levels must be >= 1")
    hexa = [(HEX_DIRS[k], HEX_DIRS[(k + 1) % 6]) for k in range(6)]
    K0 = _graph_complex(list(HEX_DIRS), hexa)
    lvls, cmaps = [K0], []
    for n in range(levels):
        s = 3 ** n
        offsets = [(0, 0)] + [(2 * s * d[0], 2 * s * d[1]) for d in HEX_DIRS]
        K2, maps = _graph_level_up(lvls[-1], offsets)
        lvls.append(K2)
        cmaps.append(maps)
    for n, K in enumerate(lvls):
        _check_counts(K, (4 * 7 ** n + 2, 6 * 7 ** n))
    return Exhaustion(
        "lindstrom", lvls, cmaps,
        chi_limit=Fraction(-1, 3),
        closed_counts=lambda n: (4 * 7 ** n + 2, 6 * 7 ** n),
    )


# -- carpet 2-complex ------------------------------------------------------

_CARPET_BLOCKS = [(0, 0), (1, 0), (2, 0), (0, 1), (2, 1), (0, 2), (1, 2), (2, 2)]


def _carpet_complex(anchors):
    """2-complex of unit squares (anchor = bottom-left corner)."""
    anchors = sorted(anchors)
    vset, eset = set(), set()
    for (x, y) in anchors:
        corners = [(x, y), (x + 1, y), (x + 1, y + 1), (x, y + 1)]
        vset.update(corners)
        for a, b in zip(corners, corners[1:] + corners[:1]):
            eset.add((min(a, b), max(a, b)))
    vkeys = sorted(vset)
    ekeys = sorted(eset)
    vidx = {v: i for i, v in enumerate(vkeys)}
    eidx = {e: i for i, e in enumerate(ekeys)}
    inc1 = ([], [], [])
    for i, (a, b) in enumerate(ekeys):
        inc1[0].extend([i, i])
        inc1[1].extend([vidx[a], vidx[b]])
        inc1[2].extend([-1, 1])
    inc2 = ([], [], [])
    for i, (x, y) in enumerate(anchors):
        corners = [(x, y), (x + 1, y), (x + 1, y + 1), (x, y + 1)]
        for a, b in zip(corners, corners[1:] + corners[:1]):
            key = (min(a, b), max(a, b))
            inc2[0].append(i)
            inc2[1].append(eidx[key])
            inc2[2].append(1 if key == (a, b) else -1)
    return CWComplex(2, [len(vkeys), len(ekeys), len(anchors)],
                     {1: inc1, 2: inc2},
                     labels=(tuple(vkeys), tuple(ekeys), tuple(anchors)))


def build_carpet_complex(levels):
    """Sierpinski-carpet 2-complex exhaustion; level n has 8^n squares."""
    if levels < 1:
        raise ValueError("levels must be >= 1")
    lvls = [_carpet_complex([(0, 0)])]
    cmaps = []
    for n in range(levels):
        s = 3 ** n
        K = lvls[-1]
        anchors = K.labels[2]
        offsets = [(i * s, j * s) for (i, j) in _CARPET_BLOCKS]
        new_anchors = [_translate(a, t) for t in offsets for a in anchors]
        K2 = _carpet_complex(new_anchors)
        v2 = {v: i for i, v in enumerate(K2.labels[0])}
        e2 = {e: i for i, e in enumerate(K2.labels[1])}
        f2 = {a: i for i, a in enumerate(K2.labels[2])}
        maps = []
        for t in offsets:
            vm = np.array([v2[_translate(v, t)] for v in K.labels[0]],
                          dtype=np.int64)
            em = np.array([e2[(_translate(a, t), _translate(b, t))]
                           for a, b in K.labels[1]], dtype=np.int64)
            fm = np.array([f2[_translate(a, t)] for a in K.labels[2]],
                          dtype=np.int64)
            maps.append(CellMap([vm, em, fm]))
        lvls.append(K2)
        cmaps.append(maps)
    for n, K in enumerate(lvls):
        if K.n_cells(2) != 8 ** n:
            raise AssertionError("carpet square count mismatch")
    return Exhaustion("carpet2", lvls, cmaps)


# -- dodecagon 2-complex ---------------------------------------------------


def _canonical_gasket_edge(a, b):
    """Return (tail, head, direction 0..2) regardless of stored orientation."""
    d = (b[0] - a[0], b[1] - a[1])
    dd = HEX_DIRS.index(d)
    if dd < 3:
        return a, b, dd
    return b, a, dd - 3


class _UnionFind(dict):
    def find(self, x):
        while self.setdefault(x, x) != x:
            self[x] = self[self[x]]
            x = self[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self[max(ra, rb)] = min(ra, rb)


def _dodecagon_from_gasket(gK):
    """Thicken a gasket graph level: one 12-gon per vertex, one shared side
    per edge.  Returns (complex, side_edge dict, class dict)."""
    verts = gK.labels[0]
    edges = gK.labels[1]
    shared_tail, shared_head = {}, {}
    uf = _UnionFind()
    for a, b in edges:
        t, h, d = _canonical_gasket_edge(a, b)
        kt, kh = 2 * d, (2 * d + 6) % 12
        shared_tail[(t, kt)] = (h, kh)
        shared_head[(h, kh)] = (t, kt)
        uf.union((t, kt), (h, (kh + 1) % 12))
        uf.union((t, (kt + 1) % 12), (h, kh))
    tokens = [(v, k) for v in verts for k in range(12)]
    classes = sorted({uf.find(tok) for tok in tokens})
    cls_idx = {c: i for i, c in enumerate(classes)}

    def vid(tok):
        return cls_idx[uf.find(tok)]

    # Each side of a 12-gon is oriented by its geometric direction: sides
    # k < 6 run forward (corner k to k+1), sides k >= 6 backward.  The glued
    # partner of side k is always side k+6 of the neighbour, so this rule is
    # consistent across identifications and invariant under translation,
    # even when a free side becomes shared at the next level.
    side_edge = {}
    ekeys = []
    for v in verts:
        for k in range(12):
            if (v, k) in shared_head:
                continue
            eid = len(ekeys)
            ekeys.append((v, k))
            side_edge[(v, k)] = eid
            if (v, k) in shared_tail:
                side_edge[shared_tail[(v, k)]] = eid
    inc1 = ([], [], [])
    for eid, (v, k) in enumerate(ekeys):
        a, b = vid((v, k)), vid((v, (k + 1) % 12))
        tail, head = (a, b) if k < 6 else (b, a)
        inc1[0].extend([eid, eid])
        inc1[1].extend([tail, head])
        inc1[2].extend([-1, 1])
    inc2 = ([], [], [])
    for ci, v in enumerate(verts):
        for k in range(12):
            inc2[0].append(ci)
            inc2[1].append(side_edge[(v, k)])
            inc2[2].append(1 if k < 6 else -1)
    K = CWComplex(2, [len(classes), len(ekeys), len(verts)],
                  {1: inc1, 2: inc2},
                  labels=(tuple(classes), tuple(ekeys), tuple(verts)))
    return K, side_edge, vid


def build_dodecagon_complex(levels):
    """Dodecagon 2-complex exhaustion, stored for levels 1..N.

    Level n's dual graph is the gasket graph at level n; the cell-for-cell
    correspondence (2-cell -> gasket vertex, shared side -> gasket edge) is
    recorded as the certificate in metadata.
    """
    if levels < 1:
        raise ValueError("levels must be >= 1")
    gex = build_gasket(max(levels, 1))
    built = []
    for n in range(1, levels + 1):
        built.append(_dodecagon_from_gasket(gex.levels[n]))
    lvls = [b[0] for b in built]
    cmaps = []
    for n in range(1, levels):
        gK, gK2 = gex.levels[n], gex.levels[n + 1]
        K, _, _ = built[n - 1]
        K2, side_edge2, vid2 = built[n]
        maps = []
        for gmap in gex.copy_maps[n]:
            # gasket copy maps at levels >= 1 are pure translations
            t0 = gK.labels[0][0]
            img = gK2.labels[0][gmap[0][0]]
            t = (img[0] - t0[0], img[1] - t0[1])
            vm = np.array([vid2((_translate(c[0], t), c[1]))
                           for c in K.labels[0]], dtype=np.int64)
            em = np.array([side_edge2[(_translate(v, t), k)]
                           for v, k in K.labels[1]], dtype=np.int64)
            fm = np.array([gmap[0][i] for i in range(len(K.labels[2]))],
                          dtype=np.int64)
            maps.append(CellMap([vm, em, fm]))
        cmaps.append(maps)
    # certificate: 2-cell i of level n corresponds to gasket vertex i
    certificates = {}
    for n in range(1, levels + 1):
        gK = gex.levels[n]
        _, side_edge, _ = built[n - 1]
        shared = []
        for i, (a, b) in enumerate(gK.labels[1]):
            t, h, d = _canonical_gasket_edge(a, b)
            shared.append((side_edge[(t, 2 * d)], i))
        shared.sort()
        certificates[n] = {
            "cell_to_gasket_vertex": list(range(gex.levels[n].n_cells(0))),
            "shared_edge_to_gasket_edge": shared,
        }
    return Exhaustion("dodecagon2", lvls, cmaps, level_offset=1,
                      metadata={"gasket": gex, "certificates": certificates})


# -- derived structures ----------------------------------------------------


def dual_graph(complex):
    """Dual graph of a p-complex: vertices = p-cells, edges = shared faces.

    Returns (1-complex, list of ((cell_a, cell_b), face) witnesses).
    """
    p = complex.dimension
    if p < 1:
        raise ValueError("complex dimension must be >= 1")
    bp = complex.boundary_csr(p).tocsc()
    pairs = {}
    face_cells = bp.tocsr()
    for face in range(complex.n_cells(p - 1)):
        cofaces = face_cells.indices[
            face_cells.indptr[face]:face_cells.indptr[face + 1]]
        for i in range(len(cofaces)):
            for k in range(i + 1, len(cofaces)):
                key = (int(cofaces[i]), int(cofaces[k]))
                pairs.setdefault(key, int(face))
    ekeys = sorted(pairs)
    inc1 = ([], [], [])
    for i, (a, b) in enumerate(ekeys):
        inc1[0].extend([i, i])
        inc1[1].extend([a, b])
        inc1[2].extend([-1, 1])
    G = CWComplex(1, [complex.n_cells(p), len(ekeys)], {1: inc1})
    return G, [(e, pairs[e]) for e in ekeys]


BUILDERS = {
    "gasket": build_gasket,
    "vicsek": build_vicsek,
    "lindstrom": build_lindstrom,
    "carpet2": build_carpet_complex,
    "dodecagon2": build_dodecagon_complex,
}


# -- self-similarity verification -----------------------------------------


@dataclass
class SelfSimilarityReport:
    ok: bool = True
    intersection_radius: int = 0
    messages: list = field(default_factory=list)
    epsilon_table: dict = field(default_factory=dict)

    def fail(self, msg):
        self.ok = False
        self.messages.append(msg)

    def __str__(self):
        head = "passed" if self.ok else "FAILED"
        extra = (f" (intersection condition holds within radius "
                 f"{self.intersection_radius} of the frontiers)")
        return "\n".join([head + extra] + self.messages)


def _check_fullness(ambient, mask, report, tag, max_radius):
    """Fullness of a subcomplex image, relaxed near its own frontier.

    A cell all of whose faces are members but which is itself missing is
    tolerated when it lies within a radius-max_radius ball of the image
    frontier (the relaxed regime in which overlaps are also allowed); the
    needed radius is folded into report.intersection_radius.
    """
    violations = mask.fullness_violations()
    for j1, missing in enumerate(violations):
        j = j1 + 1
        if missing.size == 0:
            continue
        adj = ambient.step_adjacency(j, "d")
        fr = np.zeros(ambient.n_cells(j), dtype=bool)
        fr[sorted(frontier(ambient, mask, j))] = True
        ball = fr.copy()
        ok_radius = None
        for r in range(1, max_radius + 1):
            ball = ball | (np.asarray(adj @ ball.astype(np.int64)).ravel() > 0)
            if ball[missing].all():
                ok_radius = r
                break
        if ok_radius is None:
            report.fail(f"{tag}: image not full at dim {j} "
                        f"(cell {int(missing[0])} beyond radius {max_radius} "
                        f"of the frontier)")
        else:
            report.intersection_radius = max(report.intersection_radius,
                                             ok_radius)


def verify_self_similarity(ex: Exhaustion, max_radius=6) -> SelfSimilarityReport:
    """Check the exhaustion axioms level by level.

    (a) copy images cover the next level per dimension; (b) pairwise image
    intersections lie within radius-r balls of both frontiers, reporting the
    least r that works (r = 0 is the strict condition); (c) copy maps are
    injective, land on full subcomplexes and preserve incidence numbers;
    (d) the epsilon table of G-invariant frontier ratios.
    """
    report = SelfSimilarityReport()
    for n in range(len(ex.levels) - 1):
        K, K2 = ex.levels[n], ex.levels[n + 1]
        maps = ex.copy_maps[n]
        dims = range(K.dimension + 1)
        images = []
        for g, cm in enumerate(maps):
            member = []
            for j in dims:
                m = np.zeros(K2.n_cells(j), dtype=bool)
                if len(cm[j]) != len(np.unique(cm[j])):
                    report.fail(f"level {n} copy {g}: dim {j} map not injective")
                m[cm[j]] = True
                member.append(m)
            mask = SubcomplexMask(K2, member)
            if not mask.is_closed():
                report.fail(f"level {n} copy {g}: image not closed")
            _check_fullness(K2, mask, report, f"level {n} copy {g}",
                            max_radius)
            images.append(mask)
            # incidence preservation
            for j in range(1, K.dimension + 1):
                cells, faces, signs = K.incidence_records(j)
                mapped = set(zip(cm[j][cells].tolist(),
                                 cm[j - 1][faces].tolist(), signs.tolist()))
                c2, f2, s2 = K2.incidence_records(j)
                have = set(zip(c2.tolist(), f2.tolist(), s2.tolist()))
                missing = mapped - have
                if missing:
                    report.fail(
                        f"level {n} copy {g}: incidence record {sorted(missing)[0]} "
                        f"not preserved at dim {j}")
        for j in dims:
            covered = np.zeros(K2.n_cells(j), dtype=bool)
            for mask in images:
                covered |= mask.member[j]
            if not covered.all():
                report.fail(f"level {n}: dim {j} cells not covered by copies")
        # pairwise intersection condition
        for j in dims:
            adj = K2.step_adjacency(j, "d")
            fr_balls = []
            for mask in images:
                fr = np.zeros(K2.n_cells(j), dtype=bool)
                fr[sorted(frontier(K2, mask, j))] = True
                balls = [fr]
                for _ in range(max_radius):
                    grown = balls[-1] | (
                        np.asarray(adj @ balls[-1].astype(np.int64)).ravel() > 0)
                    balls.append(grown)
                fr_balls.append(balls)
            for a in range(len(images)):
                for b in range(a + 1, len(images)):
                    inter = images[a].member[j] & images[b].member[j]
                    if not inter.any():
                        continue
                    for r in range(max_radius + 1):
                        if (inter <= (fr_balls[a][r] & fr_balls[b][r])).all():
                            report.intersection_radius = max(
                                report.intersection_radius, r)
                            break
                    else:
                        report.fail(
                            f"level {n}: copies {a},{b} overlap outside "
                            f"radius-{max_radius} frontier balls at dim {j}")
    for n in range(len(ex.levels)):
        report.epsilon_table[ex.level_number(n)] = {
            j: float(ex.epsilon(n, j))
            for j in range(ex.levels[n].dimension + 1)
        }
    for n in range(len(ex.levels)):
        rep = validate(ex.levels[n])
        if not rep.ok:
            report.fail(f"level {n} fails validation: {rep}")
    return report
