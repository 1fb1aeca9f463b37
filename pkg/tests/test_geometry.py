import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import one_tet, regular_tet, write_tetgen_text
from vocaltract.geometry import (
    AreaFunction,
    MeshError,
    MeshParseError,
    Region,
    SliceTopologyWarning,
    TetMesh,
    extract_area_function,
    gen_horn,
    gen_tube,
    load_gmsh,
    load_mesh,
    load_tetgen,
    read_area_function,
    tetgen_paths,
    validate,
    write_area_function,
    write_gmsh,
    write_tetgen,
)
from vocaltract.geometry.area import count_boundary_loops, slice_area
from vocaltract.geometry.mesh import topological_boundary, triangle_vectors

L, R = 0.175, 0.015


# -- TetMesh construction -----------------------------------------------------

def test_single_tet_region_areas(single_tet):
    m = single_tet
    assert m.n_tets == 1
    assert m.region_area(Region.MOUTH) == pytest.approx(0.5)
    assert m.region_area(Region.WALL) == pytest.approx(1.0)
    assert m.region_area(Region.GLOTTIS) == pytest.approx(math.sqrt(3) / 2)
    d = validate(m)
    assert d.watertight
    assert d.total_volume == pytest.approx(1 / 6)


def test_regular_tet_diagnostics():
    d = validate(regular_tet())
    assert d.total_volume == pytest.approx(1 / (6 * math.sqrt(2)), rel=1e-12)
    assert sum(d.n_boundary_faces.values()) == 4
    assert d.n_boundary_faces["WALL"] == 4
    assert d.min_dihedral_deg == pytest.approx(math.degrees(math.acos(1 / 3)))
    assert d.watertight


def test_negative_tet_is_reoriented():
    m = one_tet()
    flipped = TetMesh(m.vertices, m.tets[:, [0, 2, 1, 3]], m.faces, m.face_tags)
    assert np.all(flipped.volumes() > 0)


def test_degenerate_tet_rejected():
    v = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]])
    with pytest.raises(MeshError, match="degenerate"):
        TetMesh(v, [[0, 1, 2, 3]], np.zeros((0, 3)), [])


def test_unknown_tag_rejected():
    with pytest.raises(MeshError, match="unknown boundary marker 7"):
        one_tet(tags=(1, 2, 7, 3))


def test_index_out_of_range():
    m = one_tet()
    with pytest.raises(MeshError, match="out of range"):
        TetMesh(m.vertices, [[0, 1, 2, 4]], m.faces, m.face_tags)


def test_arrays_read_only(single_tet):
    with pytest.raises(ValueError):
        single_tet.vertices[0, 0] = 5.0


def test_deleted_face_not_watertight(tube_coarse):
    d = validate(tube_coarse.without_faces([0]))
    assert not d.watertight
    assert d.n_untagged_boundary == 1
    assert any("no region tag" in s for s in d.defects)


def test_duplicate_vertices_reported(single_tet):
    v = np.vstack([single_tet.vertices, single_tet.vertices[:1] + 1e-14])
    m = TetMesh(v, single_tet.tets, single_tet.faces, single_tet.face_tags)
    assert validate(m).n_duplicate_vertices == 1


# -- generators ---------------------------------------------------------------

def test_tube_volume_and_wall(tube_coarse):
    d = validate(tube_coarse)
    exact = math.pi * R**2 * L
    assert exact == pytest.approx(1.237e-4, rel=1e-3)
    assert abs(d.total_volume - exact) / exact < 0.02
    assert abs(d.region_area["WALL"] - 2 * math.pi * R * L) / (2 * math.pi * R * L) < 0.02
    assert d.watertight


def test_tube_refinement_reduces_volume_error(tube_coarse):
    exact = math.pi * R**2 * L
    fine = gen_tube(L, R, 0.0025)
    assert abs(validate(fine).total_volume - exact) < abs(validate(tube_coarse).total_volume - exact)


def test_tube_tagging(tube_coarse):
    v = tube_coarse.vertices
    for region, x in ((Region.MOUTH, L), (Region.GLOTTIS, 0.0)):
        f = tube_coarse.region_faces(region)
        assert np.allclose(v[f][..., 0], x)
    # caps are simply connected: a single boundary loop
    for region in (Region.MOUTH, Region.GLOTTIS):
        f = tube_coarse.region_faces(region)
        edges = np.sort(np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]]), axis=1)
        _, counts = np.unique(edges, axis=0, return_counts=True)
        n_boundary_edges = np.count_nonzero(counts == 1)
        n_v = len(np.unique(f))
        # Euler characteristic of a disk: V - E + F = 1
        assert n_v - len(counts) + len(f) == 1
        assert n_boundary_edges > 0


@pytest.mark.parametrize("args", [(0, R, 0.005), (L, -1, 0.005), (L, R, 0), (L, R, R)])
def test_tube_bad_parameters(args):
    with pytest.raises(MeshError):
        gen_tube(*args)


def test_constant_horn_matches_tube():
    A = math.pi * R**2
    horn = gen_horn(AreaFunction([(0.0, A), (L, A)]), 0.005)
    tube = gen_tube(L, R, 0.005)
    assert validate(horn).total_volume == pytest.approx(validate(tube).total_volume, rel=1e-6)
    assert horn.n_tets == tube.n_tets


def test_constant_horn_nominal_area():
    # 7.07e-4 m^2 is pi * 0.015^2 rounded to three digits
    horn = gen_horn(AreaFunction([(0.0, 7.07e-4), (L, 7.07e-4)]), 0.005)
    tube = gen_tube(L, R, 0.005)
    assert validate(horn).total_volume == pytest.approx(validate(tube).total_volume, rel=5e-4)


def test_cone_frustum_volume():
    r0, r1 = 0.01, 0.02
    horn = gen_horn(AreaFunction.from_radii([0.0, L], [r0, r1]), 0.004)
    exact = math.pi * L / 3 * (r0**2 + r0 * r1 + r1**2)
    assert abs(validate(horn).total_volume - exact) / exact < 0.02
    assert validate(horn).watertight


def test_single_station_rejected():
    with pytest.raises(MeshError):
        AreaFunction([(0.0, 1e-4)])


@pytest.mark.parametrize("stations", [[(0, 1e-4), (0, 2e-4)], [(0, 1e-4), (0.1, 0)], [(0, 1e-4), (0.1, np.nan)]])
def test_area_function_invariants(stations):
    with pytest.raises(MeshError):
        AreaFunction(stations)


# -- area slicing ---------------------------------------------------------------

def test_tube_area_function(tube_coarse):
    af = extract_area_function(tube_coarse, 20)
    assert len(af.stations) == 20
    assert np.all(np.abs(af.areas - math.pi * R**2) / (math.pi * R**2) < 0.03)
    assert af.x[0] == pytest.approx(0, abs=1e-9) and af.x[-1] == pytest.approx(L, abs=1e-9)


def test_cone_area_function():
    cone = AreaFunction.from_radii([0.0, L], [0.01, 0.02])
    af = extract_area_function(gen_horn(cone, 0.004), 20)
    rel = np.abs(af.areas - cone.area_at(af.x)) / cone.area_at(af.x)
    assert rel.max() < 0.03


def test_area_function_needs_two_stations(tube_coarse):
    with pytest.raises(MeshError):
        extract_area_function(tube_coarse, 1)


def test_slice_single_tet_exact():
    v = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]])
    t = np.array([[0, 1, 2, 3]])
    # plane x = 0.5 cuts a right triangle with legs 0.5
    assert slice_area(v, t, [0.5, 0, 0], [1, 0, 0]) == pytest.approx(0.125, rel=1e-14)
    # plane x + y + z = 0.5: equilateral triangle with side 0.5*sqrt(2)
    a = slice_area(v, t, [0.5, 0, 0], [1, 1, 1])
    assert a == pytest.approx(math.sqrt(3) / 4 * 0.5, rel=1e-12)


def test_two_loop_slice_warns():
    # two separate tubes side by side look like a non-tube-like cross-section
    a = gen_tube(L, 0.005, 0.002)
    b = a.vertices + [0, 0.02, 0]
    v = np.vstack([a.vertices, b])
    n = a.n_vertices
    m = TetMesh(v, np.vstack([a.tets, a.tets + n]), np.vstack([a.faces, a.faces + n]),
                np.concatenate([a.face_tags, a.face_tags]))
    with pytest.warns(SliceTopologyWarning):
        af = extract_area_function(m, 5)
    assert af.notes


def test_area_function_file_roundtrip(tmp_path):
    af = AreaFunction([(0.0, 1e-4), (0.05, 3.3e-4), (0.175, 2e-4)])
    p = tmp_path / "a.txt"
    write_area_function(af, p)
    back = read_area_function(p)
    assert np.array_equal(back.x, af.x) and np.array_equal(back.areas, af.areas)


def test_area_scale():
    af = AreaFunction([(0.0, 1e-4), (0.1, 2e-4)])
    assert np.allclose(af.scaled(3).areas, 3 * af.areas)


# -- file formats ---------------------------------------------------------------

def test_tetgen_roundtrip_bit_exact(tmp_path):
    m = gen_tube(0.05, 0.015, 0.008)
    assert 500 <= m.n_tets <= 3000
    paths = write_tetgen(m, tmp_path / "t")
    back = load_tetgen(*paths)
    assert np.array_equal(back.vertices, m.vertices)
    assert np.array_equal(back.tets, m.tets)
    assert np.array_equal(back.faces, m.faces)
    assert np.array_equal(back.face_tags, m.face_tags)


def test_load_mesh_accepts_any_of_the_triple(tmp_path, tube_coarse):
    write_tetgen(tube_coarse, tmp_path / "t")
    for name in ("t", "t.node", "t.face"):
        assert load_mesh(tmp_path / name).n_tets == tube_coarse.n_tets
    assert [p.suffix for p in tetgen_paths(tmp_path / "t.ele")] == [".node", ".ele", ".face"]


def test_gmsh_roundtrip(tmp_path, tube_coarse):
    write_gmsh(tube_coarse, tmp_path / "t.msh")
    back = load_gmsh(tmp_path / "t.msh")
    assert np.array_equal(back.vertices, tube_coarse.vertices)
    assert np.array_equal(back.tets, tube_coarse.tets)
    assert np.array_equal(back.face_tags, tube_coarse.face_tags)


NODES = [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)]
FACES = [(1, 3, 2, 1), (1, 2, 4, 2), (1, 4, 3, 2), (2, 3, 4, 3)]


def test_load_single_tet_file(tmp_path):
    base = write_tetgen_text(tmp_path, "one", NODES, [(1, 2, 3, 4)], FACES)
    m = load_tetgen(*tetgen_paths(base))
    assert m.n_tets == 1
    assert m.region_area(Region.MOUTH) == pytest.approx(0.5)
    assert m.region_area(Region.GLOTTIS) == pytest.approx(math.sqrt(3) / 2)


def test_marker_7_rejected(tmp_path):
    faces = FACES[:3] + [(2, 3, 4, 7)]
    base = write_tetgen_text(tmp_path, "bad", NODES, [(1, 2, 3, 4)], faces)
    with pytest.raises(MeshParseError, match="unknown boundary marker"):
        load_tetgen(*tetgen_paths(base))


def test_custom_marker_map(tmp_path):
    faces = [(a, b, c, {1: 10, 2: 20, 3: 30}[g]) for a, b, c, g in FACES]
    base = write_tetgen_text(tmp_path, "m", NODES, [(1, 2, 3, 4)], faces)
    m = load_tetgen(*tetgen_paths(base), markers={10: Region.MOUTH, 20: Region.WALL, 30: Region.GLOTTIS})
    assert m.region_area(Region.MOUTH) == pytest.approx(0.5)


def test_parse_error_has_line_number(tmp_path):
    base = write_tetgen_text(tmp_path, "p", NODES, [(1, 2, 3, 4)], FACES)
    with open(f"{base}.ele", "w") as fh:
        fh.write("1 4 0\n1 1 2 x 4\n")
    with pytest.raises(MeshParseError, match=r"\.ele:2"):
        load_tetgen(*tetgen_paths(base))


def test_non_watertight_file_rejected(tmp_path):
    base = write_tetgen_text(tmp_path, "h", NODES, [(1, 2, 3, 4)], FACES[:3])
    with pytest.raises(MeshError, match="watertight|no region tag"):
        load_tetgen(*tetgen_paths(base))
    m = load_tetgen(*tetgen_paths(base), strict=False)
    assert not validate(m).watertight


# -- properties -----------------------------------------------------------------

@st.composite
def tubes(draw):
    length = draw(st.floats(0.02, 0.1))
    radius = draw(st.floats(0.006, 0.02))
    h = draw(st.floats(0.4, 0.9)) * radius
    return gen_tube(length, radius, h)


@settings(max_examples=15, deadline=None)
@given(tubes())
def test_mesh_invariants(m):
    d = validate(m)
    assert d.watertight
    assert d.n_duplicate_vertices == 0
    # tag partition
    assert sum(d.n_boundary_faces.values()) == len(m.faces) == len(topological_boundary(m.tets)[0])
    # volume additivity
    assert d.total_volume == float(m.volumes().sum())
    assert np.all(m.volumes() > 0)
    # divergence consistency
    vec = triangle_vectors(m.vertices, m.faces)
    assert np.linalg.norm(vec.sum(axis=0)) <= 1e-10 * np.linalg.norm(vec, axis=1).sum()
    # every face is oriented outward: the signed volume sum of face cones equals the mesh volume
    c = m.vertices[m.faces]
    cone = np.einsum("ij,ij->i", c[:, 0], np.cross(c[:, 1], c[:, 2])).sum() / 6
    assert cone == pytest.approx(d.total_volume, rel=1e-9)


@settings(max_examples=10, deadline=None)
@given(st.lists(st.floats(0.004, 0.02), min_size=2, max_size=6))
def test_horn_volume_bounds(radii):
    x = np.linspace(0, 0.1, len(radii))
    af = AreaFunction.from_radii(x, radii)
    m = gen_horn(af, 0.6 * max(radii))
    d = validate(m)
    assert d.watertight
    # piecewise-frustum volume bounds the inscribed polygonal mesh from above
    r = np.asarray(radii)
    exact = sum(math.pi * (x[i + 1] - x[i]) / 3 * (r[i]**2 + r[i] * r[i + 1] + r[i + 1]**2)
                for i in range(len(r) - 1))
    assert 0.8 * exact < d.total_volume < exact


@settings(max_examples=20, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.2, 1))
def test_slice_area_integrates_to_volume(nx, ny, nz):
    from scipy.integrate import quad
    v = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]])
    n = np.array([nx, ny, nz]) / np.linalg.norm([nx, ny, nz])
    s = v @ n
    kinks = np.sort(s)
    area = lambda u: slice_area(v, np.array([[0, 1, 2, 3]]), u * n, n)
    vol = quad(area, kinks[0], kinks[-1], points=kinks[1:-1], epsabs=1e-13, epsrel=1e-11)[0]
    assert vol == pytest.approx(1 / 6, rel=1e-8)
