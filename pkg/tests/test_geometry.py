import math

import numpy as np
import pytest

from reggeshell.elements import GeometryError
from reggeshell.geometry import (
    ConfigurationError,
    ElementMap,
    element_map_at,
    flat_chart,
    make_benchmark_mesh,
)
from reggeshell.mesh import LOCAL_EDGES, build_mesh, count_entities, refine_uniform

INTERIOR_POINTS = [(-0.2, 0.3), (0.1, 0.1), (0.4, 0.25)]


class TestFlatMaps:
    def test_identity_chart_affine(self):
        m = build_mesh([(-1, 0), (1, 0), (0, 1)], [(0, 1, 2)])
        ev = element_map_at(m, flat_chart(), 0, 1, (0.0, 0.3))
        assert np.allclose(ev.F, np.eye(2), atol=1e-14)
        assert ev.J == pytest.approx(1.0, abs=1e-14)

    def test_scaled_triangle_jacobian(self):
        m = build_mesh([(-2, 0), (2, 0), (0, 2)], [(0, 1, 2)])
        ev = element_map_at(m, flat_chart(), 0, 1, (0.0, 0.2))
        assert ev.J == pytest.approx(4.0, abs=1e-13)
        assert np.allclose(ev.Fdag, np.linalg.inv(ev.F), atol=1e-13)

    def test_degenerate_triangle_raises(self):
        m = build_mesh([(0, 0), (1, 0), (2, 0)], [(0, 1, 2)])
        with pytest.raises(GeometryError):
            element_map_at(m, flat_chart(), 0, 1, (0.0, 0.2))


class TestSurfaceMaps:
    def test_cylinder_pseudo_inverse(self):
        mesh, chart = make_benchmark_mesh("cylinder")
        emap = ElementMap(mesh, chart, 0, geometry_order=2)
        for pt in INTERIOR_POINTS:
            ev = emap.evaluate(pt)
            assert np.linalg.norm(ev.Fdag @ ev.F - np.eye(2)) < 1e-12

    def test_surface_determinant_definition(self):
        mesh, chart = make_benchmark_mesh("hyperboloid")
        ev = ElementMap(mesh, chart, 1, geometry_order=3).evaluate((0.1, 0.2))
        assert ev.J == pytest.approx(math.sqrt(np.linalg.det(ev.F.T @ ev.F)), rel=1e-14)

    @pytest.mark.parametrize("name", ["cylinder", "hemisphere", "hyperbolic_paraboloid"])
    def test_normal_and_projector(self, name):
        mesh, chart = make_benchmark_mesh(name)
        for tri in range(min(4, mesh.num_triangles)):
            ev = ElementMap(mesh, chart, tri, geometry_order=2).evaluate((0.0, 0.3))
            assert abs(np.linalg.norm(ev.nu) - 1.0) < 1e-14
            assert np.linalg.norm(ev.Ptau @ ev.Ptau - ev.Ptau) < 1e-12
            assert np.trace(ev.Ptau) == pytest.approx(2.0, abs=1e-12)
            # normal orthogonal to the tangent plane
            assert np.linalg.norm(ev.Ptau @ ev.F - ev.F) < 1e-12

    def test_boundary_determinant(self):
        mesh, chart = make_benchmark_mesh("cylinder")
        ev = ElementMap(mesh, chart, 0, geometry_order=2).evaluate((0.0, 0.25))
        from reggeshell.elements import edge_tangent

        for e in range(3):
            t, _ = edge_tangent(e)
            assert ev.Jb(e) == pytest.approx(np.linalg.norm(ev.F @ t), rel=1e-14)


class TestBenchmarkMeshes:
    def test_unknown_name(self):
        with pytest.raises(ConfigurationError):
            make_benchmark_mesh("sphere")

    def test_cylinder_level0(self):
        mesh, chart = make_benchmark_mesh("cylinder", 0)
        assert mesh.num_triangles == 8
        assert chart.params["R"] == 1.0
        # one eighth of the cylinder: quarter circumference, half length
        corner = chart.phi(np.array([math.pi / 2.0, 1.0]))
        assert np.allclose(corner, [0.0, 1.0, 1.0], atol=1e-14)

    def test_hemisphere_markers(self):
        mesh, chart = make_benchmark_mesh("hemisphere")
        assert chart.params["R"] == 10.0
        assert len(mesh.edges_with_marker("clamped")) == 4
        # clamped edges sit on the 18 degree opening and the equator
        for e in mesh.edges_with_marker("clamped"):
            tp = mesh.vertices[mesh.edges[e]][:, 1]
            assert np.all(np.isclose(tp, math.pi / 10) | np.isclose(tp, math.pi / 2))

    def test_hyperbolic_paraboloid_domain(self):
        mesh, chart = make_benchmark_mesh("hyperbolic_paraboloid")
        assert mesh.vertices[:, 0].max() == pytest.approx(3.0)
        assert mesh.vertices[:, 1].max() == pytest.approx(1.0)
        assert len(mesh.edges_with_marker("clamped")) > 0
        assert len(mesh.edges_with_marker("sym:x")) > 0
        z = chart.phi(np.array([1.0, 1.0]))[2]
        assert z == pytest.approx(0.2 * (1 - 1), abs=1e-14)

    @pytest.mark.parametrize("name", ["cylinder", "hyperboloid", "unibend_cylinder",
                                      "hyperbolic_paraboloid", "hemisphere"])
    def test_euler_relation_all_benchmarks(self, name):
        mesh, _ = make_benchmark_mesh(name, 1)
        nt, ne, nv, nvb, nvi = count_entities(mesh)
        assert 3 + ne == 2 * nv + nvi

    @pytest.mark.parametrize("name", ["cylinder", "hemisphere"])
    def test_chart_derivative_consistency(self, name):
        _, chart = make_benchmark_mesh(name)
        p = np.array([0.4, 0.7])
        h = 1e-6
        for d in range(2):
            dp = np.zeros(2)
            dp[d] = h
            fd = (chart.phi(p + dp) - chart.phi(p - dp)) / (2 * h)
            assert np.allclose(chart.dphi(p)[:, d], fd, atol=1e-8)

    def test_unstructured_flag_rejected(self):
        with pytest.raises(ConfigurationError):
            make_benchmark_mesh("cylinder", structured=False)


class TestTangentConvention:
    def test_shared_edge_tangent_dyad_agrees(self):
        # t (x) t must not depend on which adjacent triangle evaluates it
        m = build_mesh([(0, 0), (1, 0), (1, 1), (0, 1)], [(0, 1, 2), (0, 2, 3)])
        shared = [e for e in range(m.num_edges)
                  if sorted(m.edges[e]) == [0, 2]][0]
        dyads = []
        for t in range(2):
            local = list(m.tri_edges[t]).index(shared)
            sign = m.tri_edge_signs[t, local]
            a, b = m.triangles[t][list(LOCAL_EDGES[local])]
            tv = (m.vertices[b] - m.vertices[a]) * sign
            tv = tv / np.linalg.norm(tv)
            dyads.append(np.outer(tv, tv))
        assert np.allclose(dyads[0], dyads[1], atol=1e-15)
