"""Sparse operator assembly on finite levels.

Boundary operators, half-Laplacians and their relative variants, random-walk
operators, and the structural checks: norm bounds, graph-likeness with
reorientation search, and the geometric (copy-map-commuting) property.
All assembly is in exact integers (rationals for the transition operator);
floating point enters only inside spectral routines.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
import scipy.io
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .complexes import boundary_subcomplex

VARIANTS = ("plus", "minus", "full")


@dataclass
class OperatorMatrix:
    """A sparse matrix with its provenance tag.

    variant examples: boundary_1, delta_0, rel_delta_2_minus, transition.
    Rows/columns are indexed by E_j of the level complex (E_{j-1} rows for
    boundary variants).
    """

    variant: str
    j: int
    level: int
    matrix: sp.spmatrix

    @property
    def shape(self):
        return self.matrix.shape

    def toarray(self):
        return self.matrix.toarray()

    def norm2(self):
        """Operator 2-norm (largest singular value)."""
        m = self.matrix.astype(np.float64)
        if min(m.shape) <= 2:
            return float(np.linalg.norm(m.toarray(), 2))
        if max(m.shape) <= 600:
            return float(np.linalg.norm(m.toarray(), 2))
        return float(spla.svds(m, k=1, return_singular_vectors=False)[0])


def _zero_rows_cols(mat, rows=None, cols=None):
    out = mat.tolil(copy=True)
    if rows is not None and len(rows):
        out[rows, :] = 0
    if cols is not None and len(cols):
        out[:, cols] = 0
    return out.tocsr()


def relative_mask(complex):
    """Per-dimension index arrays of cells in the boundary subcomplex."""
    mask = boundary_subcomplex(complex)
    return [np.flatnonzero(mask.member[j])
            for j in range(complex.dimension + 1)]


def boundary_matrix(complex, j, relative=False, level=None):
    """Signed incidence matrix of dimension j, optionally relative to the
    boundary subcomplex (rows and columns on boundary cells zeroed)."""
    if not 1 <= j <= complex.dimension:
        raise ValueError(f"j={j} out of range for dimension {complex.dimension}")
    mat = complex.boundary_csr(j).copy()
    tag = f"boundary_{j}"
    if relative:
        bd = relative_mask(complex)
        mat = _zero_rows_cols(mat, rows=bd[j - 1], cols=bd[j])
        tag = "rel_" + tag
    return OperatorMatrix(tag, j, level, mat)


def laplacian(complex, j, variant="full", relative=False, level=None):
    """Half or full Laplacian on E_j: plus = d d*, minus = d* d, full = sum."""
    p = complex.dimension
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if not 0 <= j <= p:
        raise ValueError(f"j={j} out of range")
    if variant == "plus" and j >= p:
        raise ValueError("plus variant needs j < dimension")
    if variant == "minus" and j < 1:
        raise ValueError("minus variant needs j >= 1")
    n = complex.n_cells(j)
    mat = sp.csr_matrix((n, n), dtype=np.int64)
    if variant in ("plus", "full") and j < p:
        b = boundary_matrix(complex, j + 1, relative=relative).matrix
        mat = mat + b @ b.T
    if variant in ("minus", "full") and j >= 1:
        b = boundary_matrix(complex, j, relative=relative).matrix
        mat = mat + b.T @ b
    mat = sp.csr_matrix(mat)
    mat.eliminate_zeros()
    suffix = {"plus": "_plus", "minus": "_minus", "full": ""}[variant]
    tag = ("rel_" if relative else "") + f"delta_{j}{suffix}"
    return OperatorMatrix(tag, j, level, mat)


@dataclass
class WalkOperators:
    adjacency: sp.csr_matrix  # 0/1 integer
    degree: np.ndarray        # integer vector c(x)
    transition: sp.csr_matrix  # P = C^-1 A, float
    delta_c: sp.csr_matrix     # I - P
    mu: int                    # max degree

    @property
    def symmetrized(self):
        """S = C^-1/2 A C^-1/2, similar to P with the same spectrum."""
        d = 1.0 / np.sqrt(self.degree)
        return sp.diags(d) @ self.adjacency @ sp.diags(d)


def walk_operators(complex):
    """Random-walk operators of a 1-complex: A, C, P = C^-1 A, Delta_c = I-P."""
    if complex.dimension != 1:
        raise ValueError("walk operators need a 1-complex")
    b = complex.boundary_csr(1)
    lap = (b @ b.T).tocsr()
    deg = lap.diagonal().copy()
    if (deg == 0).any():
        raise ValueError("isolated vertex: degree zero")
    adj = lap.copy()
    adj.setdiag(0)
    adj.eliminate_zeros()
    adj = sp.csr_matrix(-adj)
    trans = (sp.diags(1.0 / deg) @ adj).tocsr()
    delta_c = (sp.eye(len(deg), format="csr") - trans).tocsr()
    return WalkOperators(adj, deg, trans, delta_c, int(deg.max()))


@dataclass
class NormBoundReport:
    sigma_max_sq: float
    bound: int
    ok: bool

    def __str__(self):
        return (f"sigma_max^2 = {self.sigma_max_sq:.6f} <= {self.bound}: "
                f"{'ok' if self.ok else 'VIOLATED'}")


def norm_bound_check(complex, j):
    """sigma_max(boundary_j)^2 against the degree bound (V_j^-)^2 V_{j-1}^+."""
    if j < 1:
        raise ValueError("j must be >= 1")
    s = OperatorMatrix("", j, None, complex.boundary_csr(j)).norm2()
    db = complex.degree_bounds()
    bound = db.v_minus[j] ** 2 * db.v_plus[j - 1]
    return NormBoundReport(s ** 2, bound, s ** 2 <= bound + 1e-8)


@dataclass
class GraphLikeResult:
    ok: bool
    orientation: np.ndarray | None = None  # per-cell signs when ok
    witness: list | None = None            # odd cycle of cell indices
    message: str = ""

    def __bool__(self):
        return self.ok


def is_graph_like(op: OperatorMatrix, try_reorientation=True):
    """Decide whether sign flips of cells make all off-diagonals 0 or -1.

    The feasibility problem is 2-coloring of the constraint graph whose edge
    (i, k) demands s_i s_k = -sign(entry); an odd cycle of constraints whose
    product is -1 is returned as the witness.
    """
    m = op.matrix.tocoo()
    n = m.shape[0]
    if m.shape[0] != m.shape[1]:
        raise ValueError("graph-likeness applies to square operators")
    entries = {}
    for i, k, v in zip(m.row, m.col, m.data):
        if i >= k:
            continue
        if abs(v) > 1:
            return GraphLikeResult(
                False, witness=[int(i), int(k)],
                message=f"off-diagonal entry {int(v)} at ({i},{k}) "
                        "has modulus > 1")
        if v:
            entries[(int(i), int(k))] = int(v)
    if not try_reorientation:
        bad = [e for e, v in entries.items() if v != -1]
        if bad:
            i, k = bad[0]
            return GraphLikeResult(False, witness=[i, k],
                                   message=f"positive off-diagonal at ({i},{k})")
        return GraphLikeResult(True, orientation=np.ones(n, dtype=np.int64))
    nbrs = [[] for _ in range(n)]
    for (i, k), v in entries.items():
        c = -v  # required product s_i s_k
        nbrs[i].append((k, c))
        nbrs[k].append((i, c))
    sign = np.zeros(n, dtype=np.int64)
    parent = np.full(n, -1, dtype=np.int64)
    for root in range(n):
        if sign[root]:
            continue
        sign[root] = 1
        queue = [root]
        while queue:
            i = queue.pop(0)
            for k, c in sorted(nbrs[i]):
                want = sign[i] * c
                if sign[k] == 0:
                    sign[k] = want
                    parent[k] = i
                    queue.append(k)
                elif sign[k] != want:
                    return GraphLikeResult(
                        False, witness=_odd_cycle(parent, i, k),
                        message="odd constraint cycle: no orientation can "
                                "make all off-diagonals -1")
    return GraphLikeResult(True, orientation=sign)


def _odd_cycle(parent, i, k):
    path_i, path_k = [i], [k]
    seen = {i: 0}
    x = i
    while parent[x] >= 0:
        x = int(parent[x])
        seen[x] = len(path_i)
        path_i.append(x)
    x = k
    while x not in seen and parent[x] >= 0:
        x = int(parent[x])
        path_k.append(x)
    meet = seen.get(x, len(path_i) - 1)
    return path_i[:meet + 1] + path_k[::-1][1:]


@dataclass
class GeometricReport:
    tested: int
    failed: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.failed

    def __str__(self):
        s = f"{self.tested} cells testable"
        return s + (" , all pass" if self.ok else f", {len(self.failed)} FAIL")


def verify_geometric(op: OperatorMatrix, iso, ambient, r):
    """Check T V(gamma) = V(gamma) T on all cells whose r-ball stays inside
    both the source and the target of the local isomorphism."""
    j = op.j
    mat = op.matrix.tocsc()
    testable = iso.testable_mask(ambient, j, r)
    src, tgt = iso.source[j], iso.target[j]
    n = ambient.n_cells(j)
    # push-forward index map on the ambient: defined on source cells only
    fwd = np.full(n, -1, dtype=np.int64)
    fwd[src] = tgt
    exact = np.issubdtype(mat.dtype, np.integer)
    report = GeometricReport(int(testable.sum()))
    for pos in np.flatnonzero(testable):
        col = mat.getcol(int(src[pos]))
        pushed_idx = fwd[col.indices]
        if (pushed_idx < 0).any():
            report.failed.append((int(src[pos]), "support escapes source"))
            continue
        target_col = mat.getcol(int(tgt[pos]))
        a = dict(zip(pushed_idx.tolist(), col.data.tolist()))
        b = dict(zip(target_col.indices.tolist(), target_col.data.tolist()))
        if exact:
            same = a == b
        else:
            keys = set(a) | set(b)
            same = all(abs(a.get(kk, 0.0) - b.get(kk, 0.0)) < 1e-12
                       for kk in keys)
        if not same:
            report.failed.append((int(src[pos]), "column mismatch"))
    return report


def write_matrix_market(op: OperatorMatrix, path=None):
    """Matrix Market coordinate text; exact integers when possible."""
    mat = sp.coo_matrix(op.matrix)
    buf = io.BytesIO()
    field_kind = ("integer" if np.issubdtype(mat.dtype, np.integer) else "real")
    scipy.io.mmwrite(buf, mat, field=field_kind,
                     comment=f"variant={op.variant} j={op.j} level={op.level}")
    text = buf.getvalue().decode()
    if path is not None:
        with open(path, "w") as f:
            f.write(text)
    return text
