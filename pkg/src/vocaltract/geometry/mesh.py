"""Tetrahedral mesh container, boundary bookkeeping and integrity diagnostics."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

DUPLICATE_TOL = 1e-12  # m
_DEGENERATE_REL = 1e-14


class MeshError(ValueError):
    """Raised when mesh data violates a structural or geometric contract."""


class Region(enum.IntEnum):
    """Boundary region tags; the integer values double as TetGen face markers."""

    MOUTH = 1
    WALL = 2
    GLOTTIS = 3


def signed_volumes(vertices: np.ndarray, tets: np.ndarray) -> np.ndarray:
    p = vertices[tets]
    d = p[:, 1:, :] - p[:, :1, :]
    return np.linalg.det(d) / 6.0


def triangle_vectors(vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """Return (a1 - a0) x (a2 - a0) / 2 per face: area-weighted normals."""
    p = vertices[faces]
    return 0.5 * np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])


def triangle_areas(vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    return np.linalg.norm(triangle_vectors(vertices, faces), axis=1)


# local faces of a positively oriented tet (v0..v3), each listed so that the
# right-hand normal points out of the tet
_TET_FACES = np.array([[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]])


def _face_table(tets: np.ndarray):
    """All 4*nt tet faces, oriented outward, plus sorted keys for matching."""
    faces = tets[:, _TET_FACES].reshape(-1, 3)
    keys = np.sort(faces, axis=1)
    return faces, keys


def topological_boundary(tets: np.ndarray) -> tuple[np.ndarray, np.ndarray, int]:
    """Faces used by exactly one tet.

    Returns
    -------
    faces : (m, 3) int array, outward-oriented if the tets are positive
    owners : (m,) index of the owning tet
    n_overused : number of faces shared by more than two tets
    """
    faces, keys = _face_table(tets)
    _, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.ravel()
    once = counts[inverse] == 1
    owners = np.nonzero(once)[0] // 4
    return faces[once], owners, int(np.count_nonzero(counts > 2))


@dataclass(frozen=True, eq=False)
class TetMesh:
    """Vertices, tetrahedra and tagged boundary triangles.

    Tets are reoriented on construction so every signed volume is positive;
    degenerate tets are rejected. Whether the tagged faces tile the boundary
    is a property checked by :func:`validate`, not enforced here, so that
    defective meshes can still be inspected.
    """

    vertices: np.ndarray
    tets: np.ndarray
    faces: np.ndarray
    face_tags: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=float)
        t = np.ascontiguousarray(self.tets, dtype=np.int64)
        f = np.ascontiguousarray(self.faces, dtype=np.int64).reshape(-1, 3)
        g = np.ascontiguousarray(self.face_tags, dtype=np.int64).ravel()
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError(f"vertices must have shape (n, 3), got {v.shape}")
        if t.ndim != 2 or t.shape[1] != 4:
            raise MeshError(f"tets must have shape (n, 4), got {t.shape}")
        if len(t) == 0:
            raise MeshError("mesh has no tetrahedra")
        if not np.all(np.isfinite(v)):
            raise MeshError("non-finite vertex coordinates")
        if len(g) != len(f):
            raise MeshError("face_tags length does not match faces")
        for name, arr in (("tet", t), ("face", f)):
            if arr.size and (arr.min() < 0 or arr.max() >= len(v)):
                raise MeshError(f"{name} vertex index out of range")
        bad = ~np.isin(g, [r.value for r in Region])
        if np.any(bad):
            raise MeshError(f"unknown boundary marker {int(g[bad][0])}")
        vol = signed_volumes(v, t)
        scale = np.ptp(v, axis=0).max() ** 3
        degenerate = np.abs(vol) <= _DEGENERATE_REL * scale
        if np.any(degenerate):
            raise MeshError(f"degenerate tet {int(np.nonzero(degenerate)[0][0])} (zero volume)")
        neg = vol < 0
        if np.any(neg):
            t = t.copy()
            t[neg, 2], t[neg, 3] = t[neg, 3].copy(), t[neg, 2].copy()
        for name, arr in (("vertices", v), ("tets", t), ("faces", f), ("face_tags", g)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_tets(self) -> int:
        return len(self.tets)

    def volumes(self) -> np.ndarray:
        if "volumes" not in self._cache:
            self._cache["volumes"] = signed_volumes(self.vertices, self.tets)
        return self._cache["volumes"]

    def region_faces(self, region: Region) -> np.ndarray:
        return self.faces[self.face_tags == int(region)]

    def region_area(self, region: Region) -> float:
        return float(triangle_areas(self.vertices, self.region_faces(region)).sum())

    def region_vertices(self, region: Region) -> np.ndarray:
        return np.unique(self.region_faces(region))

    def region_centroid(self, region: Region) -> np.ndarray:
        f = self.region_faces(region)
        if len(f) == 0:
            raise MeshError(f"mesh has no {region.name} faces")
        a = triangle_areas(self.vertices, f)
        c = self.vertices[f].mean(axis=1)
        return (a[:, None] * c).sum(axis=0) / a.sum()

    def has_region(self, region: Region) -> bool:
        return bool(np.any(self.face_tags == int(region)))

    def scaled(self, s: float) -> "TetMesh":
        return TetMesh(self.vertices * s, self.tets, self.faces, self.face_tags)

    def without_faces(self, idx) -> "TetMesh":
        keep = np.ones(len(self.faces), dtype=bool)
        keep[idx] = False
        return TetMesh(self.vertices, self.tets, self.faces[keep], self.face_tags[keep])


def tag_boundary(vertices, tets, tagger) -> TetMesh:
    """Build a mesh whose boundary faces are all topological boundary faces.

    ``tagger`` maps an (m, 3) array of face centroids to m Region values.
    """
    tets = np.asarray(tets, dtype=np.int64)
    vertices = np.asarray(vertices, dtype=float)
    vol = signed_volumes(vertices, tets)
    neg = vol < 0
    if np.any(neg):
        tets = tets.copy()
        tets[neg, 2], tets[neg, 3] = tets[neg, 3].copy(), tets[neg, 2].copy()
    faces, _, _ = topological_boundary(tets)
    tags = np.asarray(tagger(vertices[faces].mean(axis=1)), dtype=np.int64)
    return TetMesh(vertices, tets, faces, tags)


@dataclass(frozen=True)
class MeshDiagnostics:
    n_vertices: int
    n_tets: int
    n_boundary_faces: dict
    min_volume: float
    max_volume: float
    min_dihedral_deg: float
    watertight: bool
    region_area: dict
    total_volume: float
    n_duplicate_vertices: int = 0
    n_untagged_boundary: int = 0
    n_spurious_faces: int = 0
    n_nonmanifold_faces: int = 0
    closure: float = 0.0
    defects: tuple = ()

    def as_lines(self) -> list[str]:
        lines = [
            f"n_vertices={self.n_vertices}",
            f"n_tets={self.n_tets}",
        ]
        for r in Region:
            lines.append(f"n_faces_{r.name.lower()}={self.n_boundary_faces.get(r.name, 0)}")
        lines += [
            f"min_volume={self.min_volume:.6e}",
            f"max_volume={self.max_volume:.6e}",
            f"min_dihedral_deg={self.min_dihedral_deg:.4f}",
            f"watertight={'true' if self.watertight else 'false'}",
        ]
        for r in Region:
            lines.append(f"area_{r.name.lower()}={self.region_area.get(r.name, 0.0):.6e}")
        lines.append(f"total_volume={self.total_volume:.6e}")
        lines.append(f"duplicate_vertices={self.n_duplicate_vertices}")
        for d in self.defects:
            lines.append(f"defect={d}")
        return lines


def min_dihedral_angles(vertices: np.ndarray, tets: np.ndarray) -> np.ndarray:
    """Smallest interior dihedral angle of each tet, in degrees."""
    p = vertices[tets]
    # outward area normals of the four faces
    n = np.stack(
        [np.cross(p[:, f[1]] - p[:, f[0]], p[:, f[2]] - p[:, f[0]]) for f in _TET_FACES],
        axis=1,
    )
    n /= np.linalg.norm(n, axis=2, keepdims=True)
    best = np.full(len(tets), 180.0)
    for i in range(4):
        for j in range(i + 1, 4):
            cosang = -np.einsum("ij,ij->i", n[:, i], n[:, j])
            ang = np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0)))
            best = np.minimum(best, ang)
    return best


def count_duplicate_vertices(vertices: np.ndarray, tol: float = DUPLICATE_TOL) -> int:
    from scipy.spatial import cKDTree

    pairs = cKDTree(vertices).query_pairs(tol)
    return len(pairs)


def validate(mesh: TetMesh) -> MeshDiagnostics:
    """Compute diagnostics; never raises for a constructed TetMesh."""
    vol = mesh.volumes()
    bfaces, _, n_over = topological_boundary(mesh.tets)
    bkeys = {tuple(k) for k in np.sort(bfaces, axis=1).tolist()}
    tkeys = [tuple(k) for k in np.sort(mesh.faces, axis=1).tolist()]
    tagged_count: dict = {}
    for k in tkeys:
        tagged_count[k] = tagged_count.get(k, 0) + 1
    untagged = sum(1 for k in bkeys if k not in tagged_count)
    spurious = sum(1 for k in tagged_count if k not in bkeys)
    repeated = sum(1 for c in tagged_count.values() if c > 1)
    defects = []
    if untagged:
        defects.append(f"{untagged} boundary face(s) carry no region tag (hole in boundary)")
    if spurious:
        defects.append(f"{spurious} tagged face(s) are not on the topological boundary")
    if repeated:
        defects.append(f"{repeated} boundary face(s) tagged more than once")
    if n_over:
        defects.append(f"{n_over} face(s) shared by more than two tets")
    n_dup = count_duplicate_vertices(mesh.vertices)
    if n_dup:
        defects.append(f"{n_dup} duplicate vertex pair(s) within {DUPLICATE_TOL} m")

    # net area vector over the oriented topological boundary
    areas_vec = triangle_vectors(mesh.vertices, bfaces)
    total_area = np.linalg.norm(areas_vec, axis=1).sum()
    closure = float(np.linalg.norm(areas_vec.sum(axis=0)) / total_area) if total_area else 0.0

    watertight = not (untagged or spurious or repeated or n_over)
    counts = {r.name: int(np.count_nonzero(mesh.face_tags == int(r))) for r in Region}
    area = {r.name: mesh.region_area(r) for r in Region}
    return MeshDiagnostics(
        n_vertices=mesh.n_vertices,
        n_tets=mesh.n_tets,
        n_boundary_faces=counts,
        min_volume=float(vol.min()),
        max_volume=float(vol.max()),
        min_dihedral_deg=float(min_dihedral_angles(mesh.vertices, mesh.tets).min()),
        watertight=watertight,
        region_area=area,
        total_volume=float(vol.sum()),
        n_duplicate_vertices=n_dup,
        n_untagged_boundary=untagged,
        n_spurious_faces=spurious,
        n_nonmanifold_faces=n_over,
        closure=closure,
        defects=tuple(defects),
    )
