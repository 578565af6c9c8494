"""Finite regular CW-complexes with signed incidence data.

Cells are referenced by (dimension, dense index).  A complex stores, for each
dimension j >= 1, the list of signed incidence records (j-cell, (j-1)-face,
sign) with sign in {-1, +1}.  No geometry is kept; builders that use
coordinates discard them after deduplication.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

INF = -1  # sentinel for unreachable cells in integer distance arrays


@dataclass(frozen=True)
class CellId:
    dim: int
    index: int


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    def add(self, msg):
        self.violations.append(msg)

    def __str__(self):
        if self.ok:
            return "valid"
        return "\n".join(self.violations)


class CWComplex:
    """Immutable finite regular CW-complex.

    Parameters
    ----------
    dimension : top dimension p
    counts : number of cells per dimension, length p+1
    incidence : dict j -> (cells, faces, signs) integer arrays, j = 1..p
    labels : optional per-dimension tuples of opaque tags (builder bookkeeping)
    """

    def __init__(self, dimension, counts, incidence, labels=None):
        self.dimension = int(dimension)
        self.counts = tuple(int(c) for c in counts)
        if len(self.counts) != self.dimension + 1:
            raise ValueError("counts must have one entry per dimension 0..p")
        self._incidence = {}
        for j in range(1, self.dimension + 1):
            cells, faces, signs = incidence.get(j, ((), (), ()))
            cells = np.asarray(cells, dtype=np.int64)
            faces = np.asarray(faces, dtype=np.int64)
            signs = np.asarray(signs, dtype=np.int64)
            order = np.lexsort((faces, cells))
            self._incidence[j] = (cells[order], faces[order], signs[order])
        self.labels = labels
        self._cache = {}

    # -- basic accessors ---------------------------------------------------

    def n_cells(self, j):
        if j < 0 or j > self.dimension:
            return 0
        return self.counts[j]

    def incidence_records(self, j):
        """Sorted (cells, faces, signs) arrays for dimension j."""
        return self._incidence[j]

    def boundary_csr(self, j):
        """Signed |E_{j-1}| x |E_j| incidence matrix as integer CSR."""
        key = ("boundary", j)
        if key not in self._cache:
            cells, faces, signs = self._incidence[j]
            mat = sp.coo_matrix(
                (signs, (faces, cells)),
                shape=(self.n_cells(j - 1), self.n_cells(j)),
                dtype=np.int64,
            ).tocsr()
            self._cache[key] = mat
        return self._cache[key]

    def euler_characteristic(self):
        return sum((-1) ** j * c for j, c in enumerate(self.counts))

    # -- neighborhood structure -------------------------------------------

    def step_adjacency(self, j, flavor="d"):
        """Boolean adjacency of the step relation among j-cells.

        flavor "d_minus": share a (j-1)-face; "d_plus": lie in the boundary
        of a common (j+1)-cell; "d": union of both.
        """
        key = ("steps", j, flavor)
        if key in self._cache:
            return self._cache[key]
        n = self.n_cells(j)
        mats = []
        if flavor in ("d", "d_minus") and j >= 1:
            b = abs_pattern(self.boundary_csr(j))
            mats.append(b.T @ b)
        if flavor in ("d", "d_plus") and j + 1 <= self.dimension:
            b = abs_pattern(self.boundary_csr(j + 1))
            mats.append(b @ b.T)
        if mats:
            adj = sum(mats[1:], mats[0]).tolil()
            adj.setdiag(0)
            adj = adj.tocsr().astype(bool)
            adj.eliminate_zeros()
        else:
            adj = sp.csr_matrix((n, n), dtype=bool)
        self._cache[key] = adj
        return adj

    def distances_from(self, cell: CellId, flavor="d"):
        """BFS distance array from one cell to all same-dimension cells.

        Unreachable cells get the INF sentinel (-1).
        """
        adj = self.step_adjacency(cell.dim, flavor)
        order, preds = csgraph.breadth_first_order(
            adj, cell.index, directed=False, return_predecessors=True
        )
        dist = np.full(self.n_cells(cell.dim), INF, dtype=np.int64)
        dist[cell.index] = 0
        for node in order[1:]:
            dist[node] = dist[preds[node]] + 1
        return dist

    def degree_bounds(self):
        """Per-dimension (V+, V-, mu) computed on this finite complex."""
        v_plus, v_minus, mu = [], [], []
        for j in range(self.dimension + 1):
            up = 0
            if j + 1 <= self.dimension:
                b = abs_pattern(self.boundary_csr(j + 1))
                row = np.asarray(b.sum(axis=1)).ravel()
                up = int(row.max()) if row.size else 0
            down = 0
            if j >= 1:
                b = abs_pattern(self.boundary_csr(j))
                col = np.asarray(b.sum(axis=0)).ravel()
                down = int(col.max()) if col.size else 0
            adj = self.step_adjacency(j, "d")
            ball1 = 1 + (np.asarray(adj.sum(axis=1)).ravel().max() if adj.nnz else 0)
            v_plus.append(up)
            v_minus.append(down)
            mu.append(int(ball1))
        return DegreeBounds(tuple(v_plus), tuple(v_minus), tuple(mu))


@dataclass(frozen=True)
class DegreeBounds:
    v_plus: tuple
    v_minus: tuple
    mu: tuple


def abs_pattern(mat):
    out = mat.copy()
    out.data = np.abs(out.data)
    return out


# -- queries on complexes --------------------------------------------------


def validate(complex: CWComplex) -> ValidationReport:
    """Check regularity axioms; returns a diagnostics report, never raises."""
    report = ValidationReport()
    p = complex.dimension
    for j in range(1, p + 1):
        cells, faces, signs = complex.incidence_records(j)
        if cells.size and (cells.min() < 0 or cells.max() >= complex.n_cells(j)):
            report.add(f"dim {j}: cell index out of range")
        if faces.size and (faces.min() < 0 or faces.max() >= complex.n_cells(j - 1)):
            report.add(f"dim {j}: face index out of range")
        bad = signs[(signs != 1) & (signs != -1)]
        if bad.size:
            report.add(f"dim {j}: non-regular incidence number {bad[0]}")
        pairs = cells * max(complex.n_cells(j - 1), 1) + faces
        if pairs.size != np.unique(pairs).size:
            report.add(f"dim {j}: duplicate (cell, face) incidence record")
        # every j-cell must have at least one face
        present = np.zeros(complex.n_cells(j), dtype=bool)
        present[cells] = True
        if not present.all():
            missing = int(np.flatnonzero(~present)[0])
            report.add(f"dim {j}: cell {missing} has no incidence records")
    # 0-cell orientation convention: each edge has one +1 and one -1 endpoint
    if p >= 1 and complex.n_cells(1):
        b1 = complex.boundary_csr(1)
        colsums = np.asarray(b1.sum(axis=0)).ravel()
        nfaces = np.asarray(abs_pattern(b1).sum(axis=0)).ravel()
        for e in np.flatnonzero((colsums != 0) | (nfaces != 2)):
            report.add(f"edge {int(e)}: endpoint incidences do not sum to 0")
    # boundary of boundary vanishes
    for j in range(2, p + 1):
        prod = complex.boundary_csr(j - 1) @ complex.boundary_csr(j)
        prod.eliminate_zeros()
        if prod.nnz:
            r, c = prod.nonzero()
            report.add(
                f"d(d(.)) != 0 at dim {j}: pair (cell {int(c[0])}, "
                f"{j - 2}-cell {int(r[0])})"
            )
    return report


def distance(complex, a: CellId, b: CellId, flavor="d"):
    """Combinatorial distance between same-dimension cells.

    Returns a non-negative integer, or None when the cells are not connected
    by the chosen step relation.
    """
    if a.dim != b.dim:
        raise ValueError("cells must have equal dimension")
    d = complex.distances_from(a, flavor)[b.index]
    return None if d == INF else int(d)


def ball(complex, center: CellId, r, flavor="d"):
    """Set of same-dimension cell indices at distance <= r from center."""
    if r < 0:
        raise ValueError("radius must be non-negative")
    dist = complex.distances_from(center, flavor)
    return set(np.flatnonzero((dist != INF) & (dist <= r)).tolist())


class SubcomplexMask:
    """Per-dimension membership bitsets for a subcomplex of a parent."""

    def __init__(self, parent: CWComplex, member):
        self.parent = parent
        self.member = [np.asarray(m, dtype=bool) for m in member]
        for j, m in enumerate(self.member):
            if m.size != parent.n_cells(j):
                raise ValueError(f"mask size mismatch at dim {j}")

    @classmethod
    def full_complex(cls, parent):
        return cls(parent, [np.ones(parent.n_cells(j), dtype=bool)
                            for j in range(parent.dimension + 1)])

    @classmethod
    def from_indices(cls, parent, indices_per_dim):
        member = []
        for j in range(parent.dimension + 1):
            m = np.zeros(parent.n_cells(j), dtype=bool)
            idx = indices_per_dim.get(j) if isinstance(indices_per_dim, dict) \
                else indices_per_dim[j]
            m[np.asarray(list(idx), dtype=np.int64)] = True
            member.append(m)
        return cls(parent, member)

    def indices(self, j):
        return np.flatnonzero(self.member[j])

    def count(self, j):
        return int(self.member[j].sum())

    def is_closed(self):
        """Every face of a member cell is a member."""
        for j in range(1, self.parent.dimension + 1):
            cells, faces, _ = self.parent.incidence_records(j)
            sel = self.member[j][cells]
            if sel.size and not self.member[j - 1][faces[sel]].all():
                return False
        return True

    def is_full(self):
        """All (j-1)-faces present forces the j-cell present (closed assumed)."""
        return all(v.size == 0 for v in self.fullness_violations())

    def fullness_violations(self):
        """Per-dimension cells forced by fullness but missing (dims 1..p)."""
        out = []
        for j in range(1, self.parent.dimension + 1):
            b = abs_pattern(self.parent.boundary_csr(j))
            nfaces = np.asarray(b.sum(axis=0)).ravel()
            infaces = np.asarray(
                b.T @ self.member[j - 1].astype(np.int64)
            ).ravel()
            forced = (nfaces > 0) & (infaces == nfaces)
            out.append(np.flatnonzero(forced & ~self.member[j]))
        return out

    def complement_indices(self, j):
        return np.flatnonzero(~self.member[j])


def frontier(complex, mask: SubcomplexMask, j):
    """Member j-cells at step distance 1 from the complement."""
    adj = complex.step_adjacency(j, "d")
    outside = ~mask.member[j]
    if not outside.any():
        return set()
    touch = np.asarray(adj @ outside.astype(np.int64)).ravel() > 0
    return set(np.flatnonzero(touch & mask.member[j]).tolist())


def boundary_subcomplex(complex: CWComplex) -> SubcomplexMask:
    """Closed subcomplex of cells lying on (p-1)-cells with <= 1 coface."""
    p = complex.dimension
    if p < 1:
        raise ValueError("complex dimension must be >= 1")
    b = abs_pattern(complex.boundary_csr(p))
    n_cofaces = np.asarray(b.sum(axis=1)).ravel()
    member = [np.zeros(complex.n_cells(j), dtype=bool) for j in range(p + 1)]
    member[p - 1][n_cofaces <= 1] = True
    # close downward
    for j in range(p - 1, 0, -1):
        cells, faces, _ = complex.incidence_records(j)
        sel = member[j][cells]
        member[j - 1][faces[sel]] = True
    return SubcomplexMask(complex, member)


# -- structured text format ------------------------------------------------


def write_complex_text(complex: CWComplex) -> str:
    """Bit-stable structured-text rendering of a complex."""
    lines = [f"dim {complex.dimension}"]
    for j in range(complex.dimension + 1):
        lines.append(f"count {j} {complex.n_cells(j)}")
    for j in range(1, complex.dimension + 1):
        cells, faces, signs = complex.incidence_records(j)
        for c, f, s in zip(cells, faces, signs):
            lines.append(f"{j} {int(c)} {int(f)} {int(s)}")
    return "\n".join(lines) + "\n"


def read_complex_text(text: str) -> CWComplex:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split()
    if head[0] != "dim":
        raise ValueError("missing 'dim' header")
    p = int(head[1])
    counts = [0] * (p + 1)
    for j in range(p + 1):
        tok = lines[1 + j].split()
        if tok[0] != "count" or int(tok[1]) != j:
            raise ValueError(f"bad count line for dimension {j}")
        counts[j] = int(tok[2])
    incidence = {j: ([], [], []) for j in range(1, p + 1)}
    for ln in lines[p + 2:]:
        j, c, f, s = (int(t) for t in ln.split())
        incidence[j][0].append(c)
        incidence[j][1].append(f)
        incidence[j][2].append(s)
    return CWComplex(p, counts, incidence)
