import numpy as np
import pytest
from hypothesis import given, strategies as st

from adaptive_colloc.grid import (
    SourceSpec,
    boundary_nodes,
    gaussian_source,
    interior_nodes,
    make_uniform_mesh,
)


class TestMesh:
    def test_n256(self):
        mesh = make_uniform_mesh(256)
        assert mesh.num_nodes == 65536
        assert mesh.h == 1.0 / 256

    def test_n4_nodes(self):
        mesh = make_uniform_mesh(4)
        xs = np.unique(mesh.coords[:, 0])
        np.testing.assert_array_equal(xs, [0.0, 0.25, 0.5, 0.75])
        ys = np.unique(mesh.coords[:, 1])
        np.testing.assert_array_equal(ys, [0.0, 0.25, 0.5, 0.75])

    @pytest.mark.parametrize("n", [6, 3, 0, -8, 5])
    def test_rejects_bad_sizes(self, n):
        with pytest.raises(ValueError):
            make_uniform_mesh(n)

    def test_coords_exact_multiples(self):
        mesh = make_uniform_mesh(32)
        idx = np.round(mesh.coords / mesh.h).astype(int)
        np.testing.assert_array_equal(idx * mesh.h, mesh.coords)

    def test_row_major_x_fastest(self):
        mesh = make_uniform_mesh(8)
        np.testing.assert_allclose(mesh.coords[1], [mesh.h, 0.0])
        np.testing.assert_allclose(mesh.coords[8], [0.0, mesh.h])


class TestBoundary:
    @pytest.mark.parametrize("n,count", [(4, 12), (256, 1020)])
    def test_counts(self, n, count):
        assert boundary_nodes(make_uniform_mesh(n)).shape == (count, 2)

    def test_subset_of_mesh(self):
        mesh = make_uniform_mesh(8)
        mesh_set = {tuple(p) for p in mesh.coords}
        bpts = boundary_nodes(mesh)
        assert all(tuple(p) in mesh_set for p in bpts)
        assert len({tuple(p) for p in bpts}) == len(bpts)

    def test_boundary_interior_partition(self):
        mesh = make_uniform_mesh(16)
        b = {tuple(p) for p in boundary_nodes(mesh)}
        i = {tuple(p) for p in interior_nodes(mesh)}
        assert b.isdisjoint(i)
        assert len(b) + len(i) == mesh.num_nodes
        assert len(i) == (16 - 2) ** 2


class TestGaussianSource:
    def test_center_value(self):
        spec = SourceSpec(sigma_f=0.1, center=(0.4, 0.6), amplitude=2.5)
        assert gaussian_source(np.array([0.4, 0.6]), spec) == 2.5

    def test_one_sigma_value(self):
        spec = SourceSpec(sigma_f=0.1)
        v = gaussian_source(np.array([0.5 + 0.1, 0.5]), spec)
        np.testing.assert_allclose(v, np.exp(-0.5), rtol=1e-12)

    def test_sharper_sigma_smaller_tail(self):
        p = np.array([0.62, 0.5])
        wide = gaussian_source(p, SourceSpec(sigma_f=0.1))
        sharp = gaussian_source(p, SourceSpec(sigma_f=0.01))
        assert sharp < wide

    @given(st.floats(-0.3, 0.3), st.floats(-0.3, 0.3))
    def test_radial_symmetry(self, dx, dy):
        spec = SourceSpec(sigma_f=0.07)
        a = gaussian_source(np.array([0.5 + dx, 0.5 + dy]), spec)
        b = gaussian_source(np.array([0.5 + dy, 0.5 + dx]), spec)
        assert a == b

    def test_max_at_node_nearest_center(self):
        mesh = make_uniform_mesh(16)
        spec = SourceSpec(sigma_f=0.05, center=(0.47, 0.52))
        vals = gaussian_source(mesh.coords, spec)
        nearest = np.argmin(np.sum((mesh.coords - spec.center) ** 2, axis=1))
        assert np.argmax(vals) == nearest

    def test_invalid_spec(self):
        with pytest.raises(ValueError):
            SourceSpec(sigma_f=0.0)
        with pytest.raises(ValueError):
            SourceSpec(sigma_f=0.1, center=(1.5, 0.5))
