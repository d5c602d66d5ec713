"""Shape functions on the reference triangle and pull-back transformations.

Reference triangle: V1 = (-1, 0), V2 = (1, 0), V3 = (0, 1).  Symmetric
2x2 tensors are stored in Voigt order (a11, a22, a12) throughout; the
Frobenius product of two such triples is a11*b11 + a22*b22 + 2*a12*b12.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .polynomials import eval_dubiner, eval_integrated_jacobi_scaled

__all__ = [
    "REF_VERTICES",
    "BARY_GRADS",
    "SymMatrix2",
    "LagrangeBasis",
    "ReggeBasis",
    "barycentric",
    "sym_dyad",
    "voigt_to_matrix",
    "matrix_to_voigt",
    "covariant_pullback",
    "dual_edge_pullback",
    "dual_volume_pullback",
    "pseudo_inverse",
]

REF_VERTICES = np.array([[-1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])

# gradients of the barycentric coordinates, constant on the triangle
BARY_GRADS = np.array([[-0.5, -0.5], [0.5, -0.5], [0.0, 1.0]])

# local edges as vertex index pairs, matching mesh.LOCAL_EDGES
EDGE_VERTS = ((0, 1), (0, 2), (1, 2))


@dataclass(frozen=True)
class SymMatrix2:
    """Pointwise value of a symmetric 2x2 tensor field."""

    a11: float
    a12: float
    a22: float

    def as_matrix(self):
        return np.array([[self.a11, self.a12], [self.a12, self.a22]])

    def as_voigt(self):
        return np.array([self.a11, self.a22, self.a12])

    @staticmethod
    def from_voigt(v):
        return SymMatrix2(float(v[0]), float(v[2]), float(v[1]))


def barycentric(points):
    """Barycentric coordinates (n, 3) of reference points (n, 2)."""
    pts = np.atleast_2d(points)
    x, y = pts[:, 0], pts[:, 1]
    return np.column_stack([(1.0 - x - y) / 2.0, (1.0 + x - y) / 2.0, y])


def sym_dyad(a, b):
    """Symmetric dyadic a (.) b = (a b^T + b a^T) / 2 in Voigt form."""
    return np.array([a[0] * b[0], a[1] * b[1], 0.5 * (a[0] * b[1] + a[1] * b[0])])


def voigt_to_matrix(v):
    v = np.asarray(v)
    m = np.empty(v.shape[:-1] + (2, 2))
    m[..., 0, 0] = v[..., 0]
    m[..., 1, 1] = v[..., 1]
    m[..., 0, 1] = m[..., 1, 0] = v[..., 2]
    return m


def matrix_to_voigt(m):
    m = np.asarray(m)
    return np.stack([m[..., 0, 0], m[..., 1, 1], m[..., 0, 1]], axis=-1)


def _monomial_exponents(k):
    return [(a, b) for tot in range(k + 1) for a in range(tot, -1, -1) for b in (tot - a,)]


class LagrangeBasis:
    """Nodal H1 basis of order k on the reference triangle.

    Nodes: the three vertices, then k-1 equispaced nodes per local edge
    (running from the lower to the higher local vertex), then the interior
    lattice nodes.  Shape values and gradients come from a monomial
    Vandermonde inverse, which is well conditioned for the orders used here.
    """

    def __init__(self, k):
        if k < 1:
            raise ValueError("Lagrange order must be >= 1")
        self.order = k
        self.nodes = self._lattice_nodes(k)
        self.num_shapes = len(self.nodes)
        self._exps = _monomial_exponents(k)
        V = self._mono(self.nodes)
        self._coeff = np.linalg.inv(V)

    @staticmethod
    def _lattice_nodes(k):
        # barycentric lattice (a, b, c) / k; vertex, edge, interior ordering
        nodes_by_class = {"v": [None] * 3, "e": {0: [], 1: [], 2: []}, "i": []}
        for a in range(k + 1):
            for b in range(k + 1 - a):
                c = k - a - b
                lam = np.array([a, b, c], dtype=float) / k  # weights of V1,V2,V3
                pt = lam @ REF_VERTICES
                on = [lam[0] == 0, lam[1] == 0, lam[2] == 0]
                if sum(on) == 2:
                    nodes_by_class["v"][int(np.argmax(lam))] = pt
                elif sum(on) == 1:
                    # interior of the edge opposite to the vanishing coordinate
                    zero = on.index(True)
                    edge = {2: 0, 1: 1, 0: 2}[zero]  # edges (0,1), (0,2), (1,2)
                    a0, b0 = EDGE_VERTS[edge]
                    nodes_by_class["e"][edge].append((lam[b0], pt))
                else:
                    nodes_by_class["i"].append(pt)
        out = list(nodes_by_class["v"])
        for e in range(3):
            out.extend(pt for _, pt in sorted(nodes_by_class["e"][e], key=lambda s: s[0]))
        out.extend(nodes_by_class["i"])
        return np.array(out)

    def _mono(self, pts):
        pts = np.atleast_2d(pts)
        cols = [pts[:, 0] ** a * pts[:, 1] ** b for a, b in self._exps]
        return np.column_stack(cols)

    def _mono_grad(self, pts):
        pts = np.atleast_2d(pts)
        n = len(pts)
        g = np.zeros((n, len(self._exps), 2))
        for c, (a, b) in enumerate(self._exps):
            if a > 0:
                g[:, c, 0] = a * pts[:, 0] ** (a - 1) * pts[:, 1] ** b
            if b > 0:
                g[:, c, 1] = b * pts[:, 0] ** a * pts[:, 1] ** (b - 1)
        return g

    def eval(self, points):
        """Shape values, array (npts, num_shapes)."""
        return self._mono(points) @ self._coeff

    def grad(self, points):
        """Shape gradients, array (npts, num_shapes, 2)."""
        return np.einsum("ncd,cs->nsd", self._mono_grad(points), self._coeff)


@lru_cache(maxsize=None)
def lagrange_basis(k):
    return LagrangeBasis(k)


def lagrange_shapes_eval(k, point):
    """Nodal basis values at one reference point."""
    return lagrange_basis(k).eval(np.atleast_2d(point))[0]


class ReggeBasis:
    """Edge and cell shape functions of the order-k symmetric tensor element.

    Ordering is edge-major: for each local edge (0,1), (0,2), (1,2) the
    moments l = 0..k, followed by the three cell families with their Dubiner
    indices (l1, l2), l1 + l2 <= k - 1.  Total count 3(k+1)(k+2)/2.
    """

    def __init__(self, k):
        if k < 0:
            raise ValueError("Regge order must be >= 0")
        self.order = k
        self.num_edge_shapes = 3 * (k + 1)
        self.num_cell_shapes = 3 * (k * (k + 1)) // 2
        self.num_shapes = self.num_edge_shapes + self.num_cell_shapes
        self.cell_indices = [
            (i, l1, l2)
            for i in range(3)
            for l1 in range(k)
            for l2 in range(k - l1)
        ]

    def eval(self, points):
        """All shapes at the given reference points, array (npts, N, 3)."""
        pts = np.atleast_2d(points)
        lam = barycentric(pts)
        npts = len(pts)
        out = np.zeros((npts, self.num_shapes, 3))
        s = 0
        for (i, j) in EDGE_VERTS:
            dyad = sym_dyad(BARY_GRADS[i], BARY_GRADS[j])
            out[:, s, :] = dyad
            s += 1
            for l in range(1, self.order + 1):
                scal = eval_integrated_jacobi_scaled(
                    l, 0.0, lam[:, i] - lam[:, j], lam[:, i] + lam[:, j]
                )
                out[:, s, :] = scal[:, None] * dyad
                s += 1
        for (i, l1, l2) in self.cell_indices:
            j, kk = [m for m in range(3) if m != i]
            dyad = sym_dyad(BARY_GRADS[j], BARY_GRADS[kk])
            w = eval_dubiner(l1, l2, pts[:, 0], pts[:, 1])
            out[:, s, :] = (w * lam[:, i])[:, None] * dyad
            s += 1
        return out


@lru_cache(maxsize=None)
def regge_basis(k):
    return ReggeBasis(k)


def regge_shapes_eval(k, point):
    """Values of all order-k shapes at one reference point as SymMatrix2."""
    vals = regge_basis(k).eval(np.atleast_2d(point))[0]
    return [SymMatrix2.from_voigt(v) for v in vals]


# --- edge parametrizations of the reference triangle ----------------------

def edge_point(edge, t):
    """Reference point(s) on local edge for parameter t in [-1, 1]."""
    a, b = EDGE_VERTS[edge]
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return (
        0.5 * (1.0 - t)[:, None] * REF_VERTICES[a]
        + 0.5 * (1.0 + t)[:, None] * REF_VERTICES[b]
    )


def edge_tangent(edge):
    """Unit tangent and length of a local reference edge."""
    a, b = EDGE_VERTS[edge]
    d = REF_VERTICES[b] - REF_VERTICES[a]
    length = np.linalg.norm(d)
    return d / length, length


# --- pull-backs -----------------------------------------------------------

class GeometryError(Exception):
    """Raised when an element map is (numerically) degenerate."""


def pseudo_inverse(F):
    """Moore-Penrose pseudo-inverse of a rank-2 gradient (2x2 or dx2)."""
    F = np.asarray(F, dtype=float)
    G = F.T @ F
    det = G[0, 0] * G[1, 1] - G[0, 1] * G[1, 0]
    if det <= 1e-28:
        raise GeometryError("rank-deficient element gradient")
    return np.linalg.solve(G, F.T)


def covariant_pullback(F, sigma_ref):
    """Map a reference tensor to the physical element, preserving tt-traces.

    For flat 2x2 gradients this is F^{-T} sigma F^{-1}; on surfaces the
    pseudo-inverse replaces the inverse.  Returns the tensor in the basis of
    the ambient space (2x2 or dxd).
    """
    F = np.asarray(F, dtype=float)
    Fd = pseudo_inverse(F)
    S = voigt_to_matrix(np.asarray(sigma_ref))
    return Fd.T @ S @ Fd


def dual_edge_pullback(Jb, q_ref):
    """Dual edge moment transformation q -> J_b * q."""
    return Jb * q_ref


def dual_volume_pullback(F, J, q_ref):
    """Dual interior moment transformation q -> (1/J) F q F^T."""
    if J <= 0:
        raise GeometryError("nonpositive surface determinant")
    Q = voigt_to_matrix(np.asarray(q_ref))
    return (np.asarray(F) @ Q @ np.asarray(F).T) / J
