"""Cross-sectional area functions and exact planar slicing of tet meshes."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .mesh import MeshError, Region


class SliceTopologyWarning(UserWarning):
    """A slice plane cuts the boundary in more than one closed loop."""


@dataclass(frozen=True, eq=False)
class AreaFunction:
    """Axial stations ``x`` (m, strictly increasing) with areas ``A`` (m^2).

    Between stations the equivalent radius ``sqrt(A / pi)`` is interpolated
    linearly, which is also how :func:`gen_horn` builds its wall.
    """

    stations: np.ndarray
    notes: tuple = field(default=(), compare=False)

    def __post_init__(self):
        s = np.array(self.stations, dtype=float)
        if s.ndim != 2 or s.shape[1] != 2:
            raise MeshError("area function stations must be (x, A) pairs")
        if len(s) < 2:
            raise MeshError("area function needs at least 2 stations")
        if not np.all(np.isfinite(s)):
            raise MeshError("area function contains non-finite values")
        if np.any(s[:, 1] <= 0):
            raise MeshError("area function areas must be positive")
        if np.any(np.diff(s[:, 0]) <= 0):
            raise MeshError("area function stations must be strictly increasing in x")
        s.setflags(write=False)
        object.__setattr__(self, "stations", s)

    @classmethod
    def from_radii(cls, x, r) -> "AreaFunction":
        x = np.asarray(x, dtype=float)
        r = np.asarray(r, dtype=float)
        return cls(np.column_stack([x, np.pi * r**2]))

    @property
    def x(self) -> np.ndarray:
        return self.stations[:, 0]

    @property
    def areas(self) -> np.ndarray:
        return self.stations[:, 1]

    @property
    def radii(self) -> np.ndarray:
        return np.sqrt(self.areas / np.pi)

    @property
    def length(self) -> float:
        return float(self.x[-1] - self.x[0])

    def radius_at(self, x) -> np.ndarray:
        return np.interp(x, self.x, self.radii)

    def area_at(self, x) -> np.ndarray:
        return np.pi * self.radius_at(x) ** 2

    def scaled(self, k: float) -> "AreaFunction":
        return AreaFunction(np.column_stack([self.x, k * self.areas]))


def read_area_function(path) -> AreaFunction:
    """Two-column text ``x_m A_m2``; '#' starts a comment."""
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise MeshError(f"{path}:{lineno}: expected 2 columns, got {len(parts)}")
            try:
                rows.append((float(parts[0]), float(parts[1])))
            except ValueError:
                raise MeshError(f"{path}:{lineno}: non-numeric value") from None
    return AreaFunction(np.array(rows).reshape(-1, 2))


def write_area_function(area: AreaFunction, path) -> None:
    with open(path, "w") as fh:
        fh.write("# x_m\tA_m2\n")
        for x, a in area.stations:
            fh.write(f"{x:.9e}\t{a:.9e}\n")


def slice_area(vertices, tets, origin, normal) -> float:
    """Exact area of the intersection of a tet complex with a plane.

    Points with zero signed distance count as lying on the positive side,
    so a plane through a layer of mesh faces is counted exactly once.
    """
    normal = np.asarray(normal, dtype=float)
    normal = normal / np.linalg.norm(normal)
    sd = (vertices - origin) @ normal
    s = sd[tets]
    neg = s < 0
    n_neg = neg.sum(axis=1)
    total = 0.0
    p = vertices[tets]

    # one vertex isolated on its side: triangular section
    for k in (1, 3):
        sel = n_neg == k
        if not np.any(sel):
            continue
        ss, pp, nn = s[sel], p[sel], neg[sel]
        lone = np.argmax(nn if k == 1 else ~nn, axis=1)
        others = np.array([[j for j in range(4) if j != i] for i in range(4)])[lone]
        rows = np.arange(len(ss))
        q = []
        for c in range(3):
            o = others[:, c]
            t = ss[rows, lone] / (ss[rows, lone] - ss[rows, o])
            q.append(pp[rows, lone] + t[:, None] * (pp[rows, o] - pp[rows, lone]))
        tri = 0.5 * np.linalg.norm(np.cross(q[1] - q[0], q[2] - q[0]), axis=1)
        total += tri.sum()

    # two-two split: planar quadrilateral
    sel = n_neg == 2
    if np.any(sel):
        ss, pp, nn = s[sel], p[sel], neg[sel]
        order = np.argsort(~nn, axis=1, kind="stable")  # negatives first
        a, b, c, d = (order[:, i] for i in range(4))
        rows = np.arange(len(ss))

        def cut(i, j):
            t = ss[rows, i] / (ss[rows, i] - ss[rows, j])
            return pp[rows, i] + t[:, None] * (pp[rows, j] - pp[rows, i])

        q0, q1, q2, q3 = cut(a, c), cut(a, d), cut(b, d), cut(b, c)
        quad = 0.5 * np.linalg.norm(np.cross(q2 - q0, q3 - q1), axis=1)
        total += quad.sum()
    return float(total)


def count_boundary_loops(vertices, faces, origin, normal) -> int:
    """Number of closed curves in which a plane cuts a triangulated surface."""
    sd = (vertices - origin) @ np.asarray(normal, dtype=float)
    pos = sd[faces] >= 0
    n_pos = pos.sum(axis=1)
    cut = (n_pos == 1) | (n_pos == 2)
    if not np.any(cut):
        return 0
    f = faces[cut]
    pf = pos[cut]
    edge_ids = {}
    rows, cols = [], []
    for tri, side in zip(f.tolist(), pf.tolist()):
        ends = []
        for i, j in ((0, 1), (1, 2), (2, 0)):
            if side[i] != side[j]:
                key = (min(tri[i], tri[j]), max(tri[i], tri[j]))
                ends.append(edge_ids.setdefault(key, len(edge_ids)))
        rows.append(ends[0])
        cols.append(ends[1])
    n = len(edge_ids)
    g = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    ncomp, _ = connected_components(g, directed=False)
    return int(ncomp)


def centerline(mesh):
    """Return (origin, unit axis, length) from the GLOTTIS to the MOUTH centroid."""
    g = mesh.region_centroid(Region.GLOTTIS)
    m = mesh.region_centroid(Region.MOUTH)
    axis = m - g
    length = float(np.linalg.norm(axis))
    if length == 0:
        raise MeshError("GLOTTIS and MOUTH centroids coincide")
    return g, axis / length, length


def extract_area_function(mesh, n_stations: int) -> AreaFunction:
    """Slice ``mesh`` at ``n_stations`` equispaced planes normal to the centerline.

    Stations run from the glottis (x=0) to the mouth (x=length). The two end
    planes are moved inward by 1e-9 of the length so that they cut the
    interior rather than the caps. Slices that cut the wall in more than one
    loop are reported through a :class:`SliceTopologyWarning` and recorded in
    ``AreaFunction.notes``.
    """
    if int(n_stations) != n_stations or n_stations < 2:
        raise MeshError("n_stations must be an integer >= 2")
    origin, axis, length = centerline(mesh)
    xs = np.linspace(0.0, length, int(n_stations))
    eps = 1e-9 * length
    areas = []
    notes = []
    for k, x in enumerate(xs):
        xc = min(max(x, eps), length - eps)
        o = origin + xc * axis
        areas.append(slice_area(mesh.vertices, mesh.tets, o, axis))
        loops = count_boundary_loops(mesh.vertices, mesh.region_faces(Region.WALL), o, axis)
        if loops > 1:
            notes.append(f"station {k} (x={x:.6g} m): slice cuts the wall in {loops} loops")
    if notes:
        warnings.warn("; ".join(notes), SliceTopologyWarning, stacklevel=2)
    return AreaFunction(np.column_stack([xs, areas]), notes=tuple(notes))
