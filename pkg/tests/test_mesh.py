import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mixedfem.mesh import (
    Mesh,
    MeshError,
    build_uniform_square,
    classify_boundary,
    perturb_interior,
)


@pytest.mark.parametrize("n", [1, 2, 3, 7, 16])
def test_uniform_counts(n):
    m = build_uniform_square(n)
    assert m.n_vertices == (n + 1) ** 2
    assert m.n_triangles == 2 * n * n
    assert m.n_edges == 3 * n * n + 2 * n
    assert m.n_vertices - m.n_edges + m.n_triangles == 1
    assert m.h_max == pytest.approx(np.sqrt(2) / n, rel=1e-14)
    m.validate()


def test_n2_counts():
    m = build_uniform_square(2)
    assert (m.n_vertices, m.n_triangles, m.n_edges) == (9, 8, 16)


def test_n128_counts():
    # (n+1)^2 = 16641; 33282 = 2 * 16641 is a doubled count, not the vertex count
    m = build_uniform_square(128)
    assert m.n_vertices == 16641
    assert m.n_triangles == 32768


def test_n1_shares_positive_diagonal():
    m = build_uniform_square(1)
    assert m.n_triangles == 2
    interior = np.flatnonzero(m.edge_incidence == 2)
    assert len(interior) == 1
    ends = {tuple(p) for p in m.vertices[m.edges[interior[0]]]}
    assert ends == {(0.0, 0.0), (1.0, 1.0)}


def test_rejects_zero_subdivisions():
    with pytest.raises(MeshError):
        build_uniform_square(0)


@pytest.mark.parametrize("n", [1, 4, 9])
def test_areas_and_incidence(n):
    m = build_uniform_square(n)
    assert np.all(m.dets > 0)
    assert abs(m.areas.sum() - 1.0) <= 1e-12
    assert set(np.unique(m.edge_incidence)) <= {1, 2}


def test_boundary_flags():
    m = build_uniform_square(2)
    bedges, bverts = classify_boundary(m)
    assert bedges.sum() == 8 and bverts.sum() == 8
    m1 = build_uniform_square(1)
    bedges, bverts = classify_boundary(m1)
    assert bedges.sum() == 4 and bverts.sum() == 4
    assert (~bedges).sum() == 1


def test_boundary_vertices_on_square():
    m = build_uniform_square(5)
    xb = m.vertices[m.boundary_vertices]
    assert np.all(np.any((xb == 0.0) | (xb == 1.0), axis=1))
    xi = m.vertices[~m.boundary_vertices]
    assert np.all((xi > 0) & (xi < 1))


def test_edge_orientation_low_to_high():
    m = build_uniform_square(3)
    assert np.all(m.edges[:, 0] < m.edges[:, 1])
    local = m.triangles[:, [[1, 2], [2, 0], [0, 1]]]
    expect = np.where(local[..., 0] < local[..., 1], 1, -1)
    assert np.array_equal(m.tri_edge_signs, expect)


def test_mesh_is_immutable():
    m = build_uniform_square(2)
    with pytest.raises(ValueError):
        m.vertices[0, 0] = 5.0


def test_perturb_zero_amplitude_identical():
    m = build_uniform_square(8)
    p = perturb_interior(m, 0.0, seed=3)
    assert np.array_equal(p.vertices, m.vertices)
    assert np.array_equal(p.triangles, m.triangles)


def test_perturb_deterministic():
    m = build_uniform_square(16)
    a = perturb_interior(m, 0.25, seed=11)
    b = perturb_interior(m, 0.25, seed=11)
    c = perturb_interior(m, 0.25, seed=12)
    assert np.array_equal(a.vertices, b.vertices)
    assert not np.array_equal(a.vertices, c.vertices)


def test_perturb_valid_and_keeps_boundary():
    m = build_uniform_square(16)
    p = perturb_interior(m, 0.25, seed=0)
    p.validate()
    assert np.all(p.areas > 0)
    assert abs(p.areas.sum() - 1.0) <= 1e-12
    assert np.array_equal(p.vertices[m.boundary_vertices], m.vertices[m.boundary_vertices])
    assert np.array_equal(p.boundary_edges, m.boundary_edges)
    assert np.array_equal(p.boundary_vertices, m.boundary_vertices)


def test_perturb_displacement_bound():
    m = build_uniform_square(10)
    p = perturb_interior(m, 0.3, seed=5)
    shift = np.linalg.norm(p.vertices - m.vertices, axis=1)
    assert shift.max() <= 0.3 * (1.0 / 10) + 1e-15


def test_perturb_rejects_bad_amplitude():
    m = build_uniform_square(4)
    for a in (-0.1, 0.5, 0.9):
        with pytest.raises(MeshError):
            perturb_interior(m, a)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(2, 12), seed=st.integers(0, 2**31), amp=st.floats(0.0, 0.49))
def test_perturb_always_valid(n, seed, amp):
    p = perturb_interior(build_uniform_square(n), amp, seed)
    p.validate()
    assert abs(p.areas.sum() - 1.0) <= 1e-12


def test_validate_catches_inverted_triangle():
    m = build_uniform_square(2)
    tris = m.triangles.copy()
    tris[0] = tris[0, [0, 2, 1]]
    with pytest.raises(MeshError):
        Mesh(m.vertices, tris).validate()


def test_bad_shapes():
    with pytest.raises(MeshError):
        Mesh(np.zeros((3, 3)), [[0, 1, 2]])
    with pytest.raises(MeshError):
        Mesh(np.zeros((3, 2)), [[0, 1]])


def test_to_text_roundtrip():
    m = build_uniform_square(2)
    lines = m.to_text().splitlines()
    v = np.array([[float(t) for t in l.split()[1:]] for l in lines if l.startswith("v ")])
    t = np.array([[int(t) for t in l.split()[1:]] for l in lines if l.startswith("t ")])
    assert np.array_equal(v, m.vertices)
    assert np.array_equal(t, m.triangles)
