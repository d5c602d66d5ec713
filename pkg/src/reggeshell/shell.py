"""Naghdi-type shell energies with optional strain interpolation.

Unknowns are the three displacement components at the H1 nodes and two
rotation components in the chart covariant basis.  All strain measures are
formed in reference coordinates of each element; before the material norm
is applied they are transformed into an orthonormal tangent frame obtained
from the QR factorization of the geometry gradient, so physical units are
correct on curved charts.

Energy split: W = (t/2) E_mem + (t^3/2) E_bend + (t/2) E_shear - f(u).
The membrane strain may be interpolated element-wise into the symmetric
tensor element space of order k-1, which removes membrane locking; the
shear strain may analogously be interpolated into a tangential-continuous
edge element space.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .assembly import SolverError, assemble, factor_solve
from .elements import (
    BARY_GRADS,
    EDGE_VERTS,
    REF_VERTICES,
    barycentric,
    edge_point,
    edge_tangent,
    lagrange_basis,
)
from .geometry import ElementMap
from .interpolation import get_operator
from .quadrature import segment_rule, triangle_rule

__all__ = [
    "MaterialParams",
    "ShellConfig",
    "ShellState",
    "LoadSpec",
    "ShellModel",
    "material_norm_sq",
]

NEWTON_MAX_ITER = 20
NEWTON_REL_TOL = 1e-10
NEWTON_ABS_TOL = 1e-14
SHEAR_CORRECTION = 5.0 / 6.0
SHEAR_STABILIZATION = 0.002


@dataclass(frozen=True)
class MaterialParams:
    youngs_modulus: float
    poisson_ratio: float

    def __post_init__(self):
        if self.youngs_modulus <= 0:
            raise ValueError("Young's modulus must be positive")
        if not 0.0 <= self.poisson_ratio < 0.5:
            raise ValueError("Poisson ratio must lie in [0, 0.5)")

    @property
    def norm_matrix(self):
        """Material norm in an orthonormal frame, Voigt (11, 22, 12) form."""
        nu = self.poisson_ratio
        fac = self.youngs_modulus / (1.0 - nu * nu)
        return fac * np.array([
            [1.0, nu, 0.0],
            [nu, 1.0, 0.0],
            [0.0, 0.0, 2.0 * (1.0 - nu)],
        ])


def material_norm_sq(material, sym_voigt):
    """Squared material norm of a symmetric tensor in an orthonormal frame."""
    v = np.asarray(sym_voigt, dtype=float)
    D = material.norm_matrix
    return float(v @ D @ v)


@dataclass
class ShellConfig:
    thickness: float
    order: int = 2
    geometry_order: int = None
    membrane_reduction: str = "none"      # none | regge
    shear_reduction: str = "edge_tangential"  # none | edge_tangential
    model: str = "linearized_membrane"    # linearized_membrane | full_green

    def __post_init__(self):
        if self.thickness <= 0:
            raise ValueError("thickness must be positive")
        if self.order < 1:
            raise ValueError("displacement order must be >= 1")
        if self.geometry_order is None:
            self.geometry_order = self.order
        if self.membrane_reduction not in ("none", "regge"):
            raise ValueError(f"unknown membrane reduction '{self.membrane_reduction}'")
        if self.shear_reduction not in ("none", "edge_tangential"):
            raise ValueError(f"unknown shear reduction '{self.shear_reduction}'")
        if self.model not in ("linearized_membrane", "full_green"):
            raise ValueError(f"unknown model '{self.model}'")


@dataclass
class LoadSpec:
    """Closed-form loads: a surface force density P(x, nu) and optional
    generalized edge moments (covariant rotation work density) per marker."""

    volume: object = None               # callable (X, nu) -> (3,)
    edge_moments: dict = field(default_factory=dict)  # marker -> callable (X,) -> (2,)


class ShellState:
    """Global coefficient vector with displacement / rotation views."""

    def __init__(self, model, vector=None):
        self.model = model
        self.vector = np.zeros(model.num_dofs) if vector is None else np.asarray(vector, float)

    @property
    def displacement(self):
        return self.vector[: 3 * self.model.num_scalar_dofs].reshape(3, -1)

    @property
    def rotation(self):
        return self.vector[3 * self.model.num_scalar_dofs:].reshape(2, -1)

    @property
    def constrained(self):
        return ~self.model.free

    def copy(self):
        return ShellState(self.model, self.vector.copy())


def _frame_transform(G):
    """Voigt map of sigma -> G^T sigma G for a 2x2 matrix G."""
    return np.array([
        [G[0, 0] ** 2, G[1, 0] ** 2, 2.0 * G[0, 0] * G[1, 0]],
        [G[0, 1] ** 2, G[1, 1] ** 2, 2.0 * G[0, 1] * G[1, 1]],
        [G[0, 0] * G[0, 1], G[1, 0] * G[1, 1],
         G[0, 0] * G[1, 1] + G[1, 0] * G[0, 1]],
    ])


def _qr_frame(F):
    """Orthonormal tangent frame: F = Q R with positive diagonal R."""
    Q, R = np.linalg.qr(F)
    d = np.sign(np.diag(R))
    d[d == 0] = 1.0
    return Q * d, d[:, None] * R


def _strain_B(F, dN):
    """Covariant linearized membrane strain per displacement dof.

    Returns (3, 3*n) with Voigt rows for dofs ordered (component, shape).
    """
    n = dN.shape[0]
    B = np.zeros((3, 3 * n))
    for c in range(3):
        fc = F[c]
        cols = slice(c * n, (c + 1) * n)
        B[0, cols] = fc[0] * dN[:, 0]
        B[1, cols] = fc[1] * dN[:, 1]
        B[2, cols] = 0.5 * (fc[0] * dN[:, 1] + fc[1] * dN[:, 0])
    return B


class _ShearSpace:
    """Tangential-continuous edge element space of order p = k - 1 used for
    the shear reduction, with edge-moment matched projection.

    For p = 0 the lowest-order rotated Whitney space is used (three shapes,
    one tangential moment per edge).  For p >= 1 the local space is the full
    vector polynomial space of degree p; the 3(p+1) edge moments are matched
    exactly and the remaining freedom is fixed by least squares in L2."""

    def __init__(self, p, quad_degree):
        from .polynomials import eval_legendre

        self.p = p
        seg = segment_rule(quad_degree)
        self.edge_points = [edge_point(e, seg.points) for e in range(3)]
        self.edge_tangents = [edge_tangent(e)[0] for e in range(3)]
        n_mom = max(p, 0) + 1 if p >= 1 else 1
        self.edge_weights = []
        for e in range(3):
            _, length = edge_tangent(e)
            leg = np.array([eval_legendre(l, seg.points) for l in range(n_mom)])
            self.edge_weights.append(leg * seg.weights * (length / 2.0))
        tri = triangle_rule(quad_degree)
        self.vol_points = tri.points
        self.vol_weights = tri.weights

        if p == 0:
            self.num_shapes = 3
        else:
            self.exps = [(a, b) for tot in range(p + 1)
                         for a in range(tot, -1, -1) for b in (tot - a,)]
            self.num_shapes = 2 * len(self.exps)

        E = self._edge_moments_of_shapes()
        if p == 0 or E.shape[0] == E.shape[1]:
            self._proj_edge = np.linalg.inv(E)
            self._proj_vol = None
        else:
            # KKT system of the constrained L2 fit
            phi = self.shapes(self.vol_points)  # (nq, ns, 2)
            M = np.einsum("q,qsd,qtd->st", self.vol_weights, phi, phi)
            ns, nc = E.shape[1], E.shape[0]
            KKT = np.zeros((ns + nc, ns + nc))
            KKT[:ns, :ns] = M
            KKT[:ns, ns:] = E.T
            KKT[ns:, :ns] = E
            inv = np.linalg.inv(KKT)
            self._proj_vol = inv[:ns, :ns]   # applied to the L2 load vector
            self._proj_edge = inv[:ns, ns:]  # applied to the edge moments

    def shapes(self, points):
        pts = np.atleast_2d(points)
        if self.p == 0:
            lam = barycentric(pts)
            out = np.zeros((len(pts), 3, 2))
            for s, (i, j) in enumerate(EDGE_VERTS):
                out[:, s, :] = (
                    lam[:, i, None] * BARY_GRADS[j][None, :]
                    - lam[:, j, None] * BARY_GRADS[i][None, :]
                )
            return out
        out = np.zeros((len(pts), self.num_shapes, 2))
        for m, (a, b) in enumerate(self.exps):
            mono = pts[:, 0] ** a * pts[:, 1] ** b
            out[:, 2 * m, 0] = mono
            out[:, 2 * m + 1, 1] = mono
        return out

    def _edge_moments_of_shapes(self):
        rows = []
        for e in range(3):
            t = self.edge_tangents[e]
            vals = self.shapes(self.edge_points[e])  # (nq, ns, 2)
            tang = vals @ t
            rows.append(self.edge_weights[e] @ tang)
        return np.vstack(rows)

    def project_matrix(self, edge_B, vol_B):
        """Projection of a dof-linear field given by its value tables.

        edge_B[e]: (nq_e, 2, n) covariant values at the edge points;
        vol_B: (nq_v, 2, n) values at the volume points.
        Returns coefficients (num_shapes, n).
        """
        moments = []
        for e in range(3):
            tang = np.einsum("d,qdn->qn", self.edge_tangents[e], edge_B[e])
            moments.append(self.edge_weights[e] @ tang)
        f = np.vstack(moments)
        coeff = self._proj_edge @ f
        if self._proj_vol is not None:
            phi = self.shapes(self.vol_points)
            b = np.einsum("q,qsd,qdn->sn", self.vol_weights, phi, vol_B)
            coeff = coeff + self._proj_vol @ b
        return coeff


@lru_cache(maxsize=None)
def _shear_space(p, quad_degree):
    return _ShearSpace(p, quad_degree)


class ShellModel:
    """Discretized shell on one chart mesh: energies, derivatives, solver."""

    def __init__(self, mesh, chart, material, config):
        if chart.ambient_dim != 3:
            raise ValueError("shell model requires a surface chart (use flat3_chart "
                             "for plates)")
        self.mesh = mesh
        self.chart = chart
        self.material = material
        self.config = config
        k = config.order
        g = config.geometry_order
        self.basis = lagrange_basis(k)
        self._build_dof_map()
        self.D = material.norm_matrix
        self.Gshear = SHEAR_CORRECTION * material.youngs_modulus / (
            2.0 * (1.0 + material.poisson_ratio)
        )

        self.deg_energy = 4 * k + 2 * (g - 1)
        self.deg_dual = 2 * k + 2 * (g - 1) + 2
        self._rule = triangle_rule(self.deg_energy)
        if config.membrane_reduction == "regge":
            self.operator = get_operator(k - 1, self.deg_dual)
        else:
            self.operator = None
        if config.shear_reduction == "edge_tangential":
            self.shear_space = _shear_space(k - 1, self.deg_dual)
        else:
            self.shear_space = None

        self._precompute_elements()
        self._apply_boundary_conditions()
        self._stiffness_cache = {}
        self._strain_map_cache = {}

    # ------------------------------------------------------------------
    # dof management
    # ------------------------------------------------------------------

    def _build_dof_map(self):
        mesh, k = self.mesh, self.config.order
        n_edge_nodes = k - 1
        n_int = (k - 1) * (k - 2) // 2
        nV, nE, nT = mesh.num_vertices, mesh.num_edges, mesh.num_triangles
        self.num_scalar_dofs = nV + nE * n_edge_nodes + nT * n_int
        self.num_dofs = 5 * self.num_scalar_dofs

        self.element_scalar_dofs = []
        for t in range(nT):
            tri = mesh.triangles[t]
            dofs = list(tri)
            for le in range(3):
                e = mesh.tri_edges[t, le]
                base = nV + e * n_edge_nodes
                idx = list(range(base, base + n_edge_nodes))
                if mesh.tri_edge_signs[t, le] < 0:
                    idx = idx[::-1]
                dofs.extend(idx)
            base = nV + nE * n_edge_nodes + t * n_int
            dofs.extend(range(base, base + n_int))
            self.element_scalar_dofs.append(np.array(dofs, dtype=int))

    def element_dofs(self, t):
        """Global dof indices of one element: (u_x, u_y, u_z, th_1, th_2)."""
        s = self.element_scalar_dofs[t]
        ns = self.num_scalar_dofs
        return np.concatenate([f * ns + s for f in range(5)])

    def _scalar_dofs_of_edge(self, e):
        mesh, k = self.mesh, self.config.order
        n_edge_nodes = k - 1
        dofs = list(mesh.edges[e])
        base = mesh.num_vertices + e * n_edge_nodes
        dofs.extend(range(base, base + n_edge_nodes))
        return dofs

    def _apply_boundary_conditions(self):
        ns = self.num_scalar_dofs
        free = np.ones(self.num_dofs, dtype=bool)
        axes = {"x": 0, "y": 1, "z": 2}
        for name, eids in self.mesh.boundary_markers.items():
            if name == "clamped":
                for e in eids:
                    for s in self._scalar_dofs_of_edge(e):
                        for f in range(5):
                            free[f * ns + s] = False
            elif name.startswith("sym:"):
                axis = axes[name.split(":")[1]]
                nhat = np.zeros(3)
                nhat[axis] = 1.0
                for e in eids:
                    mid = 0.5 * (self.mesh.vertices[self.mesh.edges[e][0]]
                                 + self.mesh.vertices[self.mesh.edges[e][1]])
                    F = self.chart.dphi(mid)
                    Fdag = np.linalg.solve(F.T @ F, F.T)
                    # rotation component whose contravariant direction
                    # crosses the symmetry plane
                    alpha = int(np.argmax(np.abs(Fdag @ nhat)))
                    for s in self._scalar_dofs_of_edge(e):
                        free[axis * ns + s] = False
                        free[(3 + alpha) * ns + s] = False
        self.free = free

    # ------------------------------------------------------------------
    # element tables
    # ------------------------------------------------------------------

    def _tables_at(self, emap, points):
        """Geometry and basis tables at a batch of reference points."""
        pts = np.atleast_2d(points)
        N = self.basis.eval(pts)
        dN = self.basis.grad(pts)
        data = []
        for q, xi in enumerate(pts):
            ev = emap.evaluate(xi)
            Q, R = _qr_frame(ev.F)
            G = np.linalg.inv(R)
            data.append({
                "F": ev.F, "J": ev.J, "nu": ev.nu,
                "T": _frame_transform(G), "Gt": G.T,
                "N": N[q], "dN": dN[q],
            })
        return data

    def _precompute_elements(self):
        mesh, chart = self.mesh, self.chart
        g = self.config.geometry_order
        self.elements = []
        geo_basis = lagrange_basis(g)
        for t in range(mesh.num_triangles):
            emap = ElementMap(mesh, chart, t, g)
            el = {"map": emap}
            # affine reference -> chart-parameter Jacobian; rotation dofs are
            # chart-covariant, strains are formed in reference coordinates
            el["A"] = mesh.vertices[mesh.triangles[t]].T @ BARY_GRADS
            verts = mesh.vertices[mesh.triangles[t]]
            el["h2"] = max(
                float((verts[i] - verts[j]) @ (verts[i] - verts[j]))
                for i in range(3) for j in range(i)
            )
            el["vol"] = self._tables_at(emap, self._rule.points)
            el["w"] = self._rule.weights
            # physical positions for load evaluation
            geo_vals = geo_basis.eval(self._rule.points)
            el["X"] = geo_vals @ emap.control_points
            if self.operator is not None:
                op = self.operator
                el["op_edges"] = [self._tables_at(emap, op.edge_points[e])
                                  for e in range(3)]
                el["op_vol"] = self._tables_at(emap, op.vol_points)
                el["S"] = op.basis.eval(self._rule.points)
            if self.shear_space is not None:
                ss = self.shear_space
                el["sh_edges"] = [self._tables_at(emap, ss.edge_points[e])
                                  for e in range(3)]
                el["sh_vol"] = self._tables_at(emap, ss.vol_points)
                el["sh_shapes"] = ss.shapes(self._rule.points)
            self.elements.append(el)

    # ------------------------------------------------------------------
    # strain evaluation
    # ------------------------------------------------------------------

    def green_strain(self, t, u_local, tab):
        """Covariant Green strain at one tabulated point, Voigt form."""
        F = tab["F"]
        Gu = u_local @ tab["dN"]  # (3, 2) reference displacement gradient
        Fd = F + Gu
        C = Fd.T @ Fd - F.T @ F
        return 0.5 * np.array([C[0, 0], C[1, 1], C[0, 1]])

    def linearized_membrane_strain(self, t, u_local, tab):
        """Covariant linearized membrane strain at one tabulated point."""
        F = tab["F"]
        Gu = u_local @ tab["dN"]
        S = 0.5 * (F.T @ Gu + Gu.T @ F)
        return np.array([S[0, 0], S[1, 1], S[0, 1]])

    def _membrane_B(self, tab):
        return _strain_B(tab["F"], tab["dN"])

    def _bending_B(self, tab, A):
        """Reference-covariant bending strain per rotation dof, (3, 2n).

        Rotations are chart-covariant; the per-element affine Jacobian A
        pulls their gradient into reference form, sym(A^T grad_xi theta).
        """
        n = len(tab["N"])
        dN = tab["dN"]
        B = np.zeros((3, 2 * n))
        for beta in range(2):
            cols = slice(beta * n, (beta + 1) * n)
            B[0, cols] = A[beta, 0] * dN[:, 0]
            B[1, cols] = A[beta, 1] * dN[:, 1]
            B[2, cols] = 0.5 * (A[beta, 0] * dN[:, 1] + A[beta, 1] * dN[:, 0])
        return B

    def _shear_B(self, tab, A):
        """Reference-covariant shear strain per dof, (2, 5n).

        gamma_xi = nu . grad_xi u - A^T theta with chart-covariant theta.
        """
        n = len(tab["N"])
        nu, dN, N = tab["nu"], tab["dN"], tab["N"]
        B = np.zeros((2, 5 * n))
        for c in range(3):
            B[0, c * n:(c + 1) * n] = nu[c] * dN[:, 0]
            B[1, c * n:(c + 1) * n] = nu[c] * dN[:, 1]
        for beta in range(2):
            cols = slice((3 + beta) * n, (4 + beta) * n)
            B[0, cols] = -A[beta, 0] * N
            B[1, cols] = -A[beta, 1] * N
        return B

    # ------------------------------------------------------------------
    # element stiffness (quadratic energy forms, thickness not included)
    # ------------------------------------------------------------------

    def _strain_maps(self, t):
        """Per-quadrature-point strain-displacement maps in the frame.

        Returns (wJ, Gm, Gb, Gs): weights including the surface determinant,
        the membrane map (nq, 3, 3n) acting on the displacement block, the
        bending map (nq, 3, 2n) acting on the rotation block and the shear
        map (nq, 2, 5n) acting on the full element vector.  Energies are
        evaluated point-wise from these maps so that states in the strain
        kernel give energies at squared round-off level.
        """
        if t in self._strain_map_cache:
            return self._strain_map_cache[t]
        el = self.elements[t]
        wJ = np.array([el["w"][q] * tab["J"] for q, tab in enumerate(el["vol"])])
        if self.operator is None:
            Gm = np.stack([tab["T"] @ self._membrane_B(tab) for tab in el["vol"]])
        else:
            P = self._membrane_functional_matrix(t, linearized=True)
            coeff = self.operator.dual_mass.solve(P)  # (n_regge, 3n)
            Gm = np.stack([
                tab["T"] @ (el["S"][q].T @ coeff)
                for q, tab in enumerate(el["vol"])
            ])
        A = el["A"]
        Gb = np.stack([tab["T"] @ self._bending_B(tab, A) for tab in el["vol"]])
        if self.shear_space is None:
            Gs = np.stack([tab["Gt"] @ self._shear_B(tab, A) for tab in el["vol"]])
        else:
            ss = self.shear_space
            edge_B = [np.stack([self._shear_B(tab, A) for tab in el["sh_edges"][e]])
                      for e in range(3)]
            vol_B = np.stack([self._shear_B(tab, A) for tab in el["sh_vol"]])
            coeff = ss.project_matrix(edge_B, vol_B)  # (ns, 5n)
            Gs = np.stack([
                tab["Gt"] @ (el["sh_shapes"][q].T @ coeff)
                for q, tab in enumerate(el["vol"])
            ])
        self._strain_map_cache[t] = (wJ, Gm, Gb, Gs)
        return self._strain_map_cache[t]

    def _membrane_functional_matrix(self, t, linearized=True, u_local=None):
        """Dual functionals of the (dof-linear) covariant strain rows.

        For the full Green model the linearization point enters through the
        deformed gradient in the strain derivative."""
        el = self.elements[t]
        op = self.operator

        def B_at(tab):
            F = tab["F"]
            if not linearized:
                F = F + u_local @ tab["dN"]
            return _strain_B(F, tab["dN"])  # (3, 3 nloc)

        # feed precomputed value tables through the operator's functional
        # machinery, keyed by the operator's own point arrays
        tables = {}
        for e in range(3):
            tables[id(op.edge_points[e])] = np.stack(
                [B_at(tab) for tab in el["op_edges"][e]]
            )
        tables[id(op.vol_points)] = np.stack([B_at(tab) for tab in el["op_vol"]])
        return op.functionals(lambda pts: tables[id(pts)])

    def _element_forms(self, t):
        if t not in self._stiffness_cache:
            nloc = self.basis.num_shapes
            n_el = 5 * nloc
            wJ, Gm, Gb, Gs = self._strain_maps(t)
            Am = np.zeros((n_el, n_el))
            Am[: 3 * nloc, : 3 * nloc] = np.einsum(
                "q,qai,ab,qbj->ij", wJ, Gm, self.D, Gm
            )
            Ab = np.zeros((n_el, n_el))
            Ab[3 * nloc:, 3 * nloc:] = np.einsum(
                "q,qai,ab,qbj->ij", wJ, Gb, self.D, Gb
            )
            As = self.Gshear * np.einsum("q,qai,qaj->ij", wJ, Gs, Gs)
            self._stiffness_cache[t] = (Am, Ab, As)
        return self._stiffness_cache[t]

    # ------------------------------------------------------------------
    # energies
    # ------------------------------------------------------------------

    def _local_vector(self, x, t):
        return x[self.element_dofs(t)]

    def _u_local(self, x, t):
        nloc = self.basis.num_shapes
        xe = self._local_vector(x, t)
        return xe[: 3 * nloc].reshape(3, nloc)

    def membrane_energy(self, x):
        """(t/2) E_mem at a coefficient vector."""
        tfac = 0.5 * self.config.thickness
        nloc = self.basis.num_shapes
        if self.config.model == "linearized_membrane":
            total = 0.0
            for t in range(self.mesh.num_triangles):
                xe = self._local_vector(x, t)
                wJ, Gm, _, _ = self._strain_maps(t)
                e = Gm @ xe[: 3 * nloc]  # (nq, 3)
                total += wJ @ np.einsum("qa,ab,qb->q", e, self.D, e)
            return tfac * total
        return tfac * sum(self._membrane_energy_green(x, t)
                          for t in range(self.mesh.num_triangles))

    def _membrane_energy_green(self, x, t):
        el = self.elements[t]
        u_local = self._u_local(x, t)
        if self.operator is None:
            total = 0.0
            for q, tab in enumerate(el["vol"]):
                e = tab["T"] @ self.green_strain(t, u_local, tab)
                total += el["w"][q] * tab["J"] * (e @ self.D @ e)
            return total
        alpha = self._green_coefficients(x, t)
        total = 0.0
        for q, tab in enumerate(el["vol"]):
            e = tab["T"] @ (el["S"][q].T @ alpha)
            total += el["w"][q] * tab["J"] * (e @ self.D @ e)
        return total

    def _green_coefficients(self, x, t):
        el = self.elements[t]
        op = self.operator
        u_local = self._u_local(x, t)

        tables = {}
        for e in range(3):
            tables[id(op.edge_points[e])] = np.stack([
                self.green_strain(t, u_local, tab) for tab in el["op_edges"][e]
            ])
        tables[id(op.vol_points)] = np.stack([
            self.green_strain(t, u_local, tab) for tab in el["op_vol"]
        ])
        f = op.functionals(lambda pts: tables[id(pts)])
        return op.dual_mass.solve(f)

    def bending_energy(self, x):
        """(t^3/2) E_bend at a coefficient vector."""
        tfac = 0.5 * self.config.thickness ** 3
        nloc = self.basis.num_shapes
        total = 0.0
        for t in range(self.mesh.num_triangles):
            xe = self._local_vector(x, t)
            wJ, _, Gb, _ = self._strain_maps(t)
            e = Gb @ xe[3 * nloc:]
            total += wJ @ np.einsum("qa,ab,qb->q", e, self.D, e)
        return tfac * total

    def _shear_weight(self, t):
        """Thickness weight of the element shear energy.

        With the edge-tangential reduction the weight is the stabilized
        t^3/(t^2 + c h^2), which matches t as the mesh resolves the shear
        scale and removes the residual coarse-mesh shear stiffness that would
        otherwise inhibit bending-dominated states.  Without reduction the
        plain Naghdi weight t is kept."""
        thick = self.config.thickness
        if self.shear_space is None:
            return thick
        h2 = self.elements[t]["h2"]
        return thick ** 3 / (thick ** 2 + SHEAR_STABILIZATION * h2)

    def shear_energy(self, x):
        """Weighted shear energy at a coefficient vector."""
        total = 0.0
        for t in range(self.mesh.num_triangles):
            xe = self._local_vector(x, t)
            wJ, _, _, Gs = self._strain_maps(t)
            g = Gs @ xe
            total += (0.5 * self._shear_weight(t) * self.Gshear
                      * (wJ @ np.einsum("qa,qa->q", g, g)))
        return total

    def total_energy(self, x, load_vector=None):
        W = self.membrane_energy(x) + self.bending_energy(x) + self.shear_energy(x)
        if load_vector is not None:
            W -= load_vector @ x
        return W

    # ------------------------------------------------------------------
    # derivatives
    # ------------------------------------------------------------------

    def _element_gradient(self, x, t):
        thick = self.config.thickness
        Am, Ab, As = self._element_forms(t)
        xe = self._local_vector(x, t)
        grad = thick ** 3 * (Ab @ xe) + self._shear_weight(t) * (As @ xe)
        if self.config.model == "linearized_membrane":
            grad += thick * (Am @ xe)
        else:
            grad[: 3 * self.basis.num_shapes] += thick * self._membrane_gradient_green(x, t)
        return grad

    def _membrane_gradient_green(self, x, t):
        el = self.elements[t]
        u_local = self._u_local(x, t)
        nloc = self.basis.num_shapes
        if self.operator is None:
            grad = np.zeros(3 * nloc)
            for q, tab in enumerate(el["vol"]):
                F = tab["F"] + u_local @ tab["dN"]
                B = _strain_B(F, tab["dN"])
                e = tab["T"] @ self.green_strain(t, u_local, tab)
                grad += el["w"][q] * tab["J"] * (B.T @ (tab["T"].T @ (self.D @ e)))
            return grad
        op = self.operator
        alpha = self._green_coefficients(x, t)
        g = np.zeros(op.num_dofs)
        for q, tab in enumerate(el["vol"]):
            e = tab["T"] @ (el["S"][q].T @ alpha)
            g += el["w"][q] * tab["J"] * (el["S"][q] @ (tab["T"].T @ (self.D @ e)))
        P = self._membrane_functional_matrix(t, linearized=False, u_local=u_local)
        lam = self._dual_mass_transpose_solve(g)
        return P.T @ lam

    def _dual_mass_transpose_solve(self, g):
        M = self.operator.dual_mass.full
        return np.linalg.solve(M.T, g)

    def gradient(self, x, load_vector=None):
        grad = np.zeros(self.num_dofs)
        for t in range(self.mesh.num_triangles):
            np.add.at(grad, self.element_dofs(t), self._element_gradient(x, t))
        if load_vector is not None:
            grad -= load_vector
        return grad

    def hessian(self, x):
        """Assembled tangent as a sparse matrix with constrained dofs masked."""
        thick = self.config.thickness

        def contributions():
            for t in range(self.mesh.num_triangles):
                Am, Ab, As = self._element_forms(t)
                H = thick ** 3 * Ab + self._shear_weight(t) * As
                if self.config.model == "linearized_membrane":
                    H = H + thick * Am
                else:
                    H = H + self._green_hessian_fd(x, t)
                yield self.element_dofs(t), H

        return assemble(self.num_dofs, contributions(), free=self.free)

    def _green_hessian_fd(self, x, t):
        """Directional finite differences of the analytic membrane gradient."""
        thick = self.config.thickness
        dofs = self.element_dofs(t)
        nloc = self.basis.num_shapes
        n_u = 3 * nloc
        h = 1e-6 * max(1.0, np.linalg.norm(x[dofs]))
        H = np.zeros((5 * nloc, 5 * nloc))
        xp = x.copy()
        for j in range(n_u):
            d = dofs[j]
            xp[d] = x[d] + h
            gp = self._membrane_gradient_green(xp, t)
            xp[d] = x[d] - h
            gm = self._membrane_gradient_green(xp, t)
            xp[d] = x[d]
            H[:n_u, j] = thick * (gp - gm) / (2.0 * h)
        return 0.5 * (H + H.T)

    # ------------------------------------------------------------------
    # loads and solve
    # ------------------------------------------------------------------

    def load_vector(self, loads):
        """Assemble the external work functional f(u) of a load spec."""
        f = np.zeros(self.num_dofs)
        nloc = self.basis.num_shapes
        if loads.volume is not None:
            for t in range(self.mesh.num_triangles):
                el = self.elements[t]
                fe = np.zeros(5 * nloc)
                for q, tab in enumerate(el["vol"]):
                    P = np.asarray(loads.volume(el["X"][q], tab["nu"]))
                    wJ = el["w"][q] * tab["J"]
                    for c in range(3):
                        fe[c * nloc:(c + 1) * nloc] += wJ * P[c] * tab["N"]
                np.add.at(f, self.element_dofs(t), fe)
        for marker, moment in loads.edge_moments.items():
            self._add_edge_moments(f, marker, moment)
        return f

    def _add_edge_moments(self, f, marker, moment):
        mesh = self.mesh
        nloc = self.basis.num_shapes
        seg = segment_rule(self.deg_dual)
        marked = set(mesh.edges_with_marker(marker).tolist())
        g = self.config.geometry_order
        geo_basis = lagrange_basis(g)
        for t in range(mesh.num_triangles):
            locals_ = [le for le in range(3) if mesh.tri_edges[t, le] in marked]
            if not locals_:
                continue
            el = self.elements[t]
            emap = el["map"]
            fe = np.zeros(5 * nloc)
            for le in locals_:
                that, length = edge_tangent(le)
                pts = edge_point(le, seg.points)
                N = self.basis.eval(pts)
                geo_vals = geo_basis.eval(pts)
                X = geo_vals @ emap.control_points
                for q, xi in enumerate(pts):
                    ev = emap.evaluate(xi)
                    jb = ev.Jb(le)
                    m = np.asarray(moment(X[q]))
                    w = seg.weights[q] * (length / 2.0) * jb
                    fe[3 * nloc:4 * nloc] += w * m[0] * N[q]
                    fe[4 * nloc:] += w * m[1] * N[q]
            np.add.at(f, self.element_dofs(t), fe)
        return f

    def solve(self, loads=None, x0=None):
        """Newton iteration on the energy gradient.

        Returns (state, iterations).  For the quadratic linearized model the
        first step is exact."""
        f = self.load_vector(loads) if loads is not None else np.zeros(self.num_dofs)
        x = np.zeros(self.num_dofs) if x0 is None else np.asarray(x0, float).copy()
        x[~self.free] = 0.0
        r = self.gradient(x, f)
        r0_norm = np.linalg.norm(r[self.free])
        iterations = 0
        prev_norm = None
        for _ in range(NEWTON_MAX_ITER):
            H = self.hessian(x)
            dx = factor_solve(H, -r)
            x = x + dx
            iterations += 1
            r = self.gradient(x, f)
            rnorm = np.linalg.norm(r[self.free])
            if rnorm <= NEWTON_ABS_TOL or (r0_norm > 0 and rnorm <= NEWTON_REL_TOL * r0_norm):
                return ShellState(self, x), iterations
            # severely ill conditioned thin cases bottom out at the floating
            # point noise floor of the gradient before reaching the relative
            # tolerance; accept stagnation at a small residual
            if (prev_norm is not None and rnorm > 0.5 * prev_norm
                    and rnorm <= 1e-6 * r0_norm):
                return ShellState(self, x), iterations
            prev_norm = rnorm
        raise SolverError(
            f"Newton did not converge in {NEWTON_MAX_ITER} iterations "
            f"(last residual {rnorm:.3e}, initial {r0_norm:.3e})"
        )

    # ------------------------------------------------------------------
    # evaluation
    # ------------------------------------------------------------------

    def locate(self, param_point):
        """Triangle index and reference coordinates of a parameter point."""
        p = np.asarray(param_point, dtype=float)
        best = None
        for t in range(self.mesh.num_triangles):
            verts = self.mesh.vertices[self.mesh.triangles[t]]
            Amat = np.vstack([verts.T, np.ones(3)])
            lam = np.linalg.solve(Amat, np.append(p, 1.0))
            margin = lam.min()
            if best is None or margin > best[0]:
                best = (margin, t, lam)
        margin, t, lam = best
        if margin < -1e-8:
            raise ValueError(f"parameter point {p} outside the mesh")
        return t, lam @ REF_VERTICES

    def evaluate_displacement(self, x, param_point):
        """Displacement vector of a state at a parameter-space point."""
        t, xi = self.locate(param_point)
        N = self.basis.eval(np.atleast_2d(xi))[0]
        return self._u_local(np.asarray(x), t) @ N
