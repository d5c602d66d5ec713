"""Benchmark surface charts and isoparametric element maps.

A chart embeds a 2D parameter rectangle into 3D (or is the identity for
flat tests).  Element geometry is the degree-g nodal interpolant of the
chart on each parameter-space triangle, so curved elements of any order can
be evaluated with the same machinery.
"""

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import mesh as meshmod
from .elements import GeometryError, edge_tangent, lagrange_basis, pseudo_inverse

__all__ = [
    "ChartGeometry",
    "ElementMap",
    "MapEvaluation",
    "element_map_at",
    "flat_chart",
    "flat3_chart",
    "make_benchmark_mesh",
    "BENCHMARK_NAMES",
]


class ConfigurationError(Exception):
    """Unknown benchmark name or unusable benchmark configuration."""


@dataclass
class ChartGeometry:
    """Smooth embedding of a parameter rectangle with analytic derivatives."""

    name: str
    ambient_dim: int
    phi: Callable[[np.ndarray], np.ndarray]
    dphi: Callable[[np.ndarray], np.ndarray]
    params: dict = field(default_factory=dict)


def flat_chart():
    """Identity chart for flat 2D tests."""
    return ChartGeometry(
        name="flat",
        ambient_dim=2,
        phi=lambda p: np.asarray(p, dtype=float),
        dphi=lambda p: np.eye(2),
    )


def flat3_chart():
    """Flat plate embedded in the z = 0 plane of 3-space."""
    return ChartGeometry(
        name="flat3",
        ambient_dim=3,
        phi=lambda p: np.array([p[0], p[1], 0.0]),
        dphi=lambda p: np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]),
    )


@dataclass
class MapEvaluation:
    """Geometry quantities of one element map at one reference point."""

    F: np.ndarray        # (dim, 2) gradient w.r.t. reference coordinates
    Fdag: np.ndarray     # Moore-Penrose pseudo-inverse, (2, dim)
    J: float             # surface determinant sqrt(det(F^T F))
    nu: np.ndarray       # unit normal (surface case) or None
    Ptau: np.ndarray     # tangent-plane projector (surface case) or None

    def Jb(self, edge):
        """Boundary determinant ||F t|| of a local edge at this point."""
        t, _ = edge_tangent(edge)
        return float(np.linalg.norm(self.F @ t))


class ElementMap:
    """Degree-g isoparametric map of one (possibly curved) triangle."""

    def __init__(self, mesh, geometry, triangle_id, geometry_order=1):
        if geometry_order < 1:
            raise ValueError("geometry order must be >= 1")
        self.geometry_order = geometry_order
        self.ambient_dim = geometry.ambient_dim
        basis = lagrange_basis(geometry_order)
        self._basis = basis
        tri = mesh.triangles[triangle_id]
        pverts = mesh.vertices[tri]  # parameter-space corners
        # affine map of the reference nodes into the parameter triangle
        from .elements import barycentric

        lam = barycentric(basis.nodes)
        pnodes = lam @ pverts
        self.control_points = np.array([geometry.phi(p) for p in pnodes])

    def evaluate(self, point):
        """Evaluate F, its pseudo-inverse, J, normal and projector."""
        pt = np.atleast_2d(point)
        grads = self._basis.grad(pt)[0]  # (nshapes, 2)
        F = self.control_points.T @ grads  # (dim, 2)
        G = F.T @ F
        detG = G[0, 0] * G[1, 1] - G[0, 1] * G[1, 0]
        if detG <= 1e-28:
            raise GeometryError("degenerate element map (J <= 0)")
        J = math.sqrt(detG)
        Fdag = np.linalg.solve(G, F.T)
        nu = Ptau = None
        if self.ambient_dim == 3:
            nu = np.cross(F[:, 0], F[:, 1])
            nu = nu / np.linalg.norm(nu)
            Ptau = np.eye(3) - np.outer(nu, nu)
        elif np.linalg.det(F) <= 0:
            raise GeometryError("flat element map with nonpositive Jacobian")
        return MapEvaluation(F=F, Fdag=Fdag, J=J, nu=nu, Ptau=Ptau)


def element_map_at(mesh, geometry, triangle_id, geometry_order, point):
    """One-shot evaluation of the element map of a triangle."""
    return ElementMap(mesh, geometry, triangle_id, geometry_order).evaluate(point)


# --- benchmark geometries -------------------------------------------------

BENCHMARK_NAMES = (
    "cylinder",
    "hyperboloid",
    "unibend_cylinder",
    "hyperbolic_paraboloid",
    "hemisphere",
)


def _cylinder_chart(R):
    def phi(p):
        th, z = p
        return np.array([R * math.cos(th), R * math.sin(th), z])

    def dphi(p):
        th, z = p
        return np.array([[-R * math.sin(th), 0.0], [R * math.cos(th), 0.0], [0.0, 1.0]])

    return ChartGeometry("cylinder", 3, phi, dphi, {"R": R})


def _hyperboloid_chart(R):
    def r(z):
        return math.sqrt(R * R + z * z)

    def phi(p):
        th, z = p
        return np.array([r(z) * math.cos(th), r(z) * math.sin(th), z])

    def dphi(p):
        th, z = p
        rz = r(z)
        dr = z / rz
        return np.array([
            [-rz * math.sin(th), dr * math.cos(th)],
            [rz * math.cos(th), dr * math.sin(th)],
            [0.0, 1.0],
        ])

    return ChartGeometry("hyperboloid", 3, phi, dphi, {"R": R})


def _unibend_chart(R):
    def phi(p):
        th, y = p
        return np.array([R * math.sin(th), y, R * math.cos(th)])

    def dphi(p):
        th, y = p
        return np.array([[R * math.cos(th), 0.0], [0.0, 1.0], [-R * math.sin(th), 0.0]])

    return ChartGeometry("unibend_cylinder", 3, phi, dphi, {"R": R})


def _hyppar_chart(alpha):
    def phi(p):
        x, y = p
        return np.array([x, y, alpha * (y * y - x * x)])

    def dphi(p):
        x, y = p
        return np.array([[1.0, 0.0], [0.0, 1.0], [-2.0 * alpha * x, 2.0 * alpha * y]])

    return ChartGeometry("hyperbolic_paraboloid", 3, phi, dphi, {"alpha": alpha})


def _hemisphere_chart(R):
    # parameters: azimuth phi_a, polar angle theta_p measured from the pole
    def phi(p):
        pa, tp = p
        return R * np.array([
            math.sin(tp) * math.cos(pa),
            math.sin(tp) * math.sin(pa),
            math.cos(tp),
        ])

    def dphi(p):
        pa, tp = p
        return R * np.array([
            [-math.sin(tp) * math.sin(pa), math.cos(tp) * math.cos(pa)],
            [math.sin(tp) * math.cos(pa), math.cos(tp) * math.sin(pa)],
            [0.0, -math.sin(tp)],
        ])

    return ChartGeometry("hemisphere", 3, phi, dphi, {"R": R})


# parameter rectangle, level-0 grid, boundary markers and chart per benchmark;
# symmetry markers are named sym:<axis> after the normal of the symmetry plane
_BENCHMARKS = {
    "cylinder": dict(
        chart=lambda: _cylinder_chart(1.0),
        xlim=(0.0, math.pi / 2.0), ylim=(0.0, 1.0), grid=(2, 2),
        sides={"left": "sym:y", "right": "sym:x", "bottom": "sym:z", "top": "free"},
    ),
    "hyperboloid": dict(
        chart=lambda: _hyperboloid_chart(1.0),
        xlim=(0.0, math.pi / 2.0), ylim=(0.0, 1.0), grid=(2, 2),
        sides={"left": "sym:y", "right": "sym:x", "bottom": "sym:z", "top": "free"},
    ),
    "unibend_cylinder": dict(
        chart=lambda: _unibend_chart(0.1),
        xlim=(0.0, math.pi / 2.0), ylim=(0.0, 0.025), grid=(8, 1),
        sides={"left": "clamped", "right": "loaded", "bottom": "free", "top": "free"},
    ),
    "hyperbolic_paraboloid": dict(
        chart=lambda: _hyppar_chart(0.2),
        xlim=(0.0, 3.0), ylim=(0.0, 1.0), grid=(2, 2),
        sides={"bottom": "clamped", "right": "sym:x", "left": "free", "top": "free"},
    ),
    "hemisphere": dict(
        chart=lambda: _hemisphere_chart(10.0),
        xlim=(0.0, math.pi / 2.0), ylim=(math.pi / 10.0, math.pi / 2.0), grid=(2, 2),
        sides={"left": "sym:y", "right": "sym:x", "bottom": "clamped", "top": "clamped"},
    ),
}


def make_benchmark_mesh(name, refinement_level=0, structured=True):
    """Structured mesh and chart of the computational subdomain of a benchmark."""
    if name not in _BENCHMARKS:
        raise ConfigurationError(
            f"unknown benchmark '{name}'; choose one of {BENCHMARK_NAMES}"
        )
    if not structured:
        raise ConfigurationError(
            "only structured meshes are generated; import unstructured meshes "
            "through the plain-text mesh format"
        )
    spec = _BENCHMARKS[name]
    m = meshmod.rectangle_mesh(*spec["grid"], spec["xlim"], spec["ylim"], spec["sides"])
    for _ in range(refinement_level):
        m = meshmod.refine_uniform(m)
    return m, spec["chart"]()
