"""Element-local interpolation into the symmetric tensor element space.

The dual degrees of freedom are edge moments against Legendre polynomials
and interior moments against a monomial tensor basis.  Pairing shapes with
the duals gives a block lower triangular dual mass matrix, which is
geometry free: with the covariant primal and the weighted dual pull-backs
every physical element produces the same matrix as the reference element,
so one factorization serves the whole mesh, curved elements included.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from .elements import (
    EDGE_VERTS,
    edge_point,
    edge_tangent,
    regge_basis,
    voigt_to_matrix,
)
from .polynomials import eval_legendre
from .quadrature import segment_rule, triangle_rule

__all__ = [
    "DualMassMatrix",
    "InterpolationOperator",
    "reference_dual_mass",
    "assemble_dual_mass",
    "interpolate_element",
    "three_field_blocks",
]


def _interior_dual_basis(k):
    """Monomial symmetric tensor basis of the interior moments, order k-1."""
    exps = [(a, b) for tot in range(k) for a in range(tot, -1, -1) for b in (tot - a,)]
    units = np.eye(3)
    return [(a, b, u) for (a, b) in exps for u in units]


def _frob(a, b):
    # Frobenius product of Voigt triples, trailing axis
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + 2.0 * a[..., 2] * b[..., 2]


@dataclass
class DualMassMatrix:
    """Block lower triangular pairing of shapes with dual functionals."""

    k: int
    M_EE: np.ndarray
    M_TE: np.ndarray
    M_TT: np.ndarray

    def __post_init__(self):
        self._lu_EE = scipy.linalg.lu_factor(self.M_EE)
        if self.M_TT.size:
            self._lu_TT = scipy.linalg.lu_factor(self.M_TT)

    @property
    def full(self):
        n_e = self.M_EE.shape[0]
        n_t = self.M_TT.shape[0]
        M = np.zeros((n_e + n_t, n_e + n_t))
        M[:n_e, :n_e] = self.M_EE
        M[n_e:, :n_e] = self.M_TE
        M[n_e:, n_e:] = self.M_TT
        return M

    def solve(self, f):
        """Block forward substitution for the coefficient vector."""
        n_e = self.M_EE.shape[0]
        f = np.asarray(f)
        alpha_e = scipy.linalg.lu_solve(self._lu_EE, f[:n_e])
        if not self.M_TT.size:
            return alpha_e
        rhs = f[n_e:] - self.M_TE @ alpha_e
        alpha_t = scipy.linalg.lu_solve(self._lu_TT, rhs)
        return np.concatenate([alpha_e, alpha_t])


class InterpolationOperator:
    """Interpolation of symmetric 2x2 fields into the order-k element space.

    All data lives on the reference element; fields to interpolate must be
    supplied in reference (pulled back) coordinates.  A sampler is a
    callable mapping reference points (n, 2) to Voigt values (n, 3) or to
    dof-linear value tables (n, 3, m).
    """

    def __init__(self, k, quad_degree=None):
        self.k = k
        self.basis = regge_basis(k)
        if quad_degree is None:
            quad_degree = 2 * k + 2
        self.quad_degree = quad_degree

        seg = segment_rule(quad_degree)
        self.edge_points = []   # reference coordinates of edge quadrature points
        self.edge_weights = []  # (k+1, nq) moment weight tables
        self.edge_tangents = []
        for e in range(3):
            t, length = edge_tangent(e)
            pts = edge_point(e, seg.points)
            leg = np.array([eval_legendre(l, seg.points) for l in range(k + 1)])
            self.edge_points.append(pts)
            self.edge_weights.append(leg * seg.weights * (length / 2.0))
            self.edge_tangents.append(t)

        tri = triangle_rule(quad_degree)
        self.vol_points = tri.points
        self.vol_weights = tri.weights
        duals = _interior_dual_basis(k)
        nq = len(tri.points)
        self.vol_dual = np.zeros((len(duals), nq, 3))
        for i, (a, b, u) in enumerate(duals):
            mono = tri.points[:, 0] ** a * tri.points[:, 1] ** b
            self.vol_dual[i] = mono[:, None] * u[None, :]

        self.dual_mass = reference_dual_mass(k, quad_degree)

    @property
    def num_dofs(self):
        return self.basis.num_shapes

    def functionals(self, sampler):
        """Apply all dual functionals to a field given in reference form."""
        parts = []
        for e in range(3):
            t = self.edge_tangents[e]
            vals = np.asarray(sampler(self.edge_points[e]))
            tt = (
                t[0] * t[0] * vals[:, 0]
                + t[1] * t[1] * vals[:, 1]
                + 2.0 * t[0] * t[1] * vals[:, 2]
            )
            parts.append(np.tensordot(self.edge_weights[e], tt, axes=(1, 0)))
        vol_vals = np.asarray(sampler(self.vol_points))
        scale = np.array([1.0, 1.0, 2.0])
        if vol_vals.ndim == 2:
            sig_w = vol_vals * scale * self.vol_weights[:, None]
            ft = np.einsum("iqc,qc->i", self.vol_dual, sig_w)
        else:
            sig_w = vol_vals * scale[None, :, None] * self.vol_weights[:, None, None]
            ft = np.einsum("iqc,qcm->im", self.vol_dual, sig_w)
        parts.append(ft)
        return np.concatenate(parts)

    def interpolate(self, sampler):
        """Coefficients of the interpolant of a reference-form field."""
        return self.dual_mass.solve(self.functionals(sampler))

    def evaluate(self, coeffs, points):
        """Evaluate a coefficient vector at reference points, Voigt form."""
        S = self.basis.eval(points)
        return np.einsum("qnc,n...->qc...", S, np.asarray(coeffs))


@lru_cache(maxsize=None)
def _cached_operator(k, quad_degree):
    return InterpolationOperator(k, quad_degree)


def get_operator(k, quad_degree=None):
    if quad_degree is None:
        quad_degree = 2 * k + 2
    return _cached_operator(k, quad_degree)


@lru_cache(maxsize=None)
def reference_dual_mass(k, quad_degree=None):
    """Dual mass matrix of the reference element (shared by all elements)."""
    if quad_degree is None:
        quad_degree = 2 * k + 2
    basis = regge_basis(k)
    n_edge = basis.num_edge_shapes
    n_cell = basis.num_cell_shapes
    n = basis.num_shapes

    seg = segment_rule(quad_degree)
    M_edge = np.zeros((n_edge, n))
    row = 0
    for e in range(3):
        t, length = edge_tangent(e)
        pts = edge_point(e, seg.points)
        vals = basis.eval(pts)  # (nq, n, 3)
        tt = (
            t[0] * t[0] * vals[..., 0]
            + t[1] * t[1] * vals[..., 1]
            + 2.0 * t[0] * t[1] * vals[..., 2]
        )
        for l in range(k + 1):
            leg = eval_legendre(l, seg.points)
            M_edge[row] = (seg.weights * leg * (length / 2.0)) @ tt
            row += 1

    tri = triangle_rule(quad_degree)
    vals = basis.eval(tri.points)
    duals = _interior_dual_basis(k)
    M_cell = np.zeros((n_cell, n))
    for i, (a, b, u) in enumerate(duals):
        mono = tri.points[:, 0] ** a * tri.points[:, 1] ** b
        q = mono[:, None] * u[None, :]
        M_cell[i] = tri.weights @ _frob(vals, q[:, None, :])

    return DualMassMatrix(
        k=k,
        M_EE=M_edge[:, :n_edge],
        M_TE=M_cell[:, :n_edge],
        M_TT=M_cell[:, n_edge:],
    )


def assemble_dual_mass(element_map, k, quad_degree=None):
    """Dual mass matrix assembled on a physical element.

    Uses the covariant shape pull-back and the determinant-weighted dual
    pull-backs explicitly; by construction the result equals the reference
    matrix, which the tests exercise as the geometry-free property.
    """
    if quad_degree is None:
        quad_degree = 2 * k + 2
    basis = regge_basis(k)
    n_edge = basis.num_edge_shapes
    n = basis.num_shapes
    dim = element_map.ambient_dim

    seg = segment_rule(quad_degree)
    M_edge = np.zeros((n_edge, n))
    row = 0
    for e in range(3):
        that, length = edge_tangent(e)
        pts = edge_point(e, seg.points)
        shape_vals = basis.eval(pts)
        tt_phys = np.zeros((len(pts), n))
        jb = np.zeros(len(pts))
        for q, xi in enumerate(pts):
            ev = element_map.evaluate(xi)
            jb[q] = ev.Jb(e)
            t_phys = (ev.F @ that) / jb[q]
            for s in range(n):
                sig = ev.Fdag.T @ voigt_to_matrix(shape_vals[q, s]) @ ev.Fdag
                tt_phys[q, s] = t_phys @ sig @ t_phys
        for l in range(k + 1):
            leg = eval_legendre(l, seg.points)
            # q_E pulled back with J_b, arclength measure contributes J_b again
            M_edge[row] = (seg.weights * (length / 2.0) * leg * jb * jb) @ tt_phys
            row += 1

    tri = triangle_rule(quad_degree)
    shape_vals = basis.eval(tri.points)
    duals = _interior_dual_basis(k)
    M_cell = np.zeros((len(duals), n))
    for q, xi in enumerate(tri.points):
        ev = element_map.evaluate(xi)
        sig_phys = np.array([
            ev.Fdag.T @ voigt_to_matrix(shape_vals[q, s]) @ ev.Fdag for s in range(n)
        ])
        for i, (a, b, u) in enumerate(duals):
            mono = xi[0] ** a * xi[1] ** b
            q_phys = (ev.F @ voigt_to_matrix(mono * u) @ ev.F.T) / ev.J
            M_cell[i] += tri.weights[q] * ev.J * np.einsum("sij,ij->s", sig_phys, q_phys)

    return DualMassMatrix(
        k=k,
        M_EE=M_edge[:, :n_edge],
        M_TE=M_cell[:, :n_edge],
        M_TT=M_cell[:, n_edge:],
    )


def interpolate_element(operator, sampler):
    """Interpolate a reference-form field sampler, returning coefficients."""
    return operator.interpolate(sampler)


def three_field_blocks(operator, weights, frame_maps, material):
    """Local blocks of the three-field form (displacement, strain, multiplier).

    Parameters
    ----------
    operator : InterpolationOperator
    weights : (nq,) quadrature weights including the surface determinant
    frame_maps : (nq, 3, 3) Voigt maps from reference to orthonormal frame
    material : (3, 3) material norm matrix in the orthonormal frame

    Returns the material mass A of the shape functions and the dual mass M;
    eliminating the strain and multiplier blocks against a functional vector
    f(u) gives the condensed membrane energy f^T M^{-T} A M^{-1} f.
    """
    S = operator.basis.eval(operator.vol_points)  # (nq, n, 3)
    TS = np.einsum("qab,qnb->qna", frame_maps, S)
    A = np.einsum("q,qna,ab,qmb->nm", weights, TS, material, TS)
    return A, operator.dual_mass.full


def condensed_membrane_energy(A, dual_mass, f):
    """Energy after eliminating the local strain and multiplier unknowns."""
    alpha = dual_mass.solve(np.asarray(f))
    return float(alpha @ A @ alpha)
