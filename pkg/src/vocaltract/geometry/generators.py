"""Structured tube and horn tetrahedralizations along the x-axis.

A triangulated disk (concentric rings) is extruded through axial layers;
every prism is split into three tets using a rule that only depends on the
global vertex order, so neighbouring prisms always agree on the diagonal of
their shared quadrilateral face.
"""

from __future__ import annotations

import math

import numpy as np

from .mesh import MeshError, Region, TetMesh, tag_boundary
from .area import AreaFunction


def _ring_counts(radius: float, target_h: float) -> list[int]:
    n_rings = math.ceil(radius / target_h - 1e-12)
    return [max(6, math.ceil(2 * math.pi * (k * radius / n_rings) / target_h - 1e-12))
            for k in range(1, n_rings + 1)]


def _stitch(inner: list[int], th_in: np.ndarray, outer: list[int], th_out: np.ndarray):
    """Triangulate the annulus between two closed rings by angular merge."""
    tris = []
    ni, no = len(inner), len(outer)
    i = j = 0
    while i < ni or j < no:
        a_in = th_in[i + 1] if i < ni else np.inf
        a_out = th_out[j + 1] if j < no else np.inf
        if a_out <= a_in:
            tris.append((inner[i % ni], outer[j % no], outer[(j + 1) % no]))
            j += 1
        else:
            tris.append((inner[i % ni], outer[j % no], inner[(i + 1) % ni]))
            i += 1
    return tris


def disk_triangulation(radius: float, target_h: float) -> tuple[np.ndarray, np.ndarray]:
    """Unit-free disk mesh: (points (n, 2), triangles (m, 3)).

    The outer boundary is an inscribed polygon, so the area slightly
    under-approximates pi * radius**2.
    """
    counts = _ring_counts(radius, target_h)
    n_rings = len(counts)
    pts = [(0.0, 0.0)]
    rings = []
    for k, n in enumerate(counts, start=1):
        rk = k * radius / n_rings
        # stagger alternate rings to avoid slivers
        phase = 0.5 * (k % 2) * 2 * math.pi / n
        th = phase + 2 * math.pi * np.arange(n) / n
        start = len(pts)
        pts.extend(zip(rk * np.cos(th), rk * np.sin(th)))
        rings.append((list(range(start, start + n)), np.append(th, th[0] + 2 * math.pi)))
    tris = []
    first, _ = rings[0]
    for j in range(len(first)):
        tris.append((0, first[j], first[(j + 1) % len(first)]))
    for (inner, thi), (outer, tho) in zip(rings[:-1], rings[1:]):
        n = len(outer)
        # start the outer ring at the point angularly closest to the inner start
        s = int(np.argmin(np.abs(np.angle(np.exp(1j * (tho[:-1] - thi[0]))))))
        rel = np.angle(np.exp(1j * (tho[s] - thi[0])))
        steps = np.mod(np.diff(np.concatenate([tho[s:-1], tho[:s] + 2 * math.pi, [tho[s] + 2 * math.pi]])), 2 * math.pi)
        tho_r = thi[0] + rel + np.concatenate([[0.0], np.cumsum(steps)])
        outer_r = outer[s:] + outer[:s]
        tris.extend(_stitch(inner, thi, outer_r, tho_r))
    pts = np.asarray(pts)
    tris = np.asarray(tris, dtype=np.int64)
    # counter-clockwise orientation in the (y, z) plane
    p = pts[tris]
    cross = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (
        p[:, 1, 1] - p[:, 0, 1]
    ) * (p[:, 2, 0] - p[:, 0, 0])
    flip = cross < 0
    tris[flip, 1], tris[flip, 2] = tris[flip, 2].copy(), tris[flip, 1].copy()
    return pts, tris


def _extrude(disk_pts, disk_tris, xs, radius_scale) -> np.ndarray:
    npd = len(disk_pts)
    n_layers = len(xs) - 1
    verts = np.empty(((n_layers + 1) * npd, 3))
    for k, (x, s) in enumerate(zip(xs, radius_scale)):
        verts[k * npd:(k + 1) * npd, 0] = x
        verts[k * npd:(k + 1) * npd, 1:] = disk_pts * s
    tri = np.sort(disk_tris, axis=1)
    tets = []
    for k in range(n_layers):
        b = tri + k * npd
        t = b + npd
        v0, v1, v2 = b[:, 0], b[:, 1], b[:, 2]
        w0, w1, w2 = t[:, 0], t[:, 1], t[:, 2]
        tets.append(np.stack([v0, v1, v2, w2], axis=1))
        tets.append(np.stack([v0, v1, w1, w2], axis=1))
        tets.append(np.stack([v0, w0, w1, w2], axis=1))
    # interleave so element order is layer-major, prism-major
    tets = np.stack(tets, axis=0).reshape(n_layers, 3, -1, 4).transpose(0, 2, 1, 3).reshape(-1, 4)
    return verts, tets


def _tagger(length: float):
    eps = 1e-9 * length

    def tag(centroids):
        x = centroids[:, 0]
        out = np.full(len(x), int(Region.WALL))
        out[np.abs(x) <= eps] = int(Region.GLOTTIS)
        out[np.abs(x - length) <= eps] = int(Region.MOUTH)
        return out

    return tag


def gen_tube(length: float, radius: float, target_h: float) -> TetMesh:
    """Straight circular tube on [0, length] along x.

    The cap at x=0 is tagged GLOTTIS, the cap at x=length MOUTH, the lateral
    surface WALL.
    """
    if not (length > 0 and radius > 0 and target_h > 0):
        raise MeshError("length, radius and target_h must be positive")
    if not target_h < radius:
        raise MeshError("target_h must be smaller than radius")
    pts, tris = disk_triangulation(radius, target_h)
    n_layers = math.ceil(length / target_h - 1e-12)
    xs = np.linspace(0.0, length, n_layers + 1)
    verts, tets = _extrude(pts, tris, xs, np.ones(n_layers + 1))
    return tag_boundary(verts, tets, _tagger(length))


def gen_horn(area: AreaFunction, target_h: float) -> TetMesh:
    """Axisymmetric horn following ``area``; radius varies linearly between stations.

    The glottis cap sits at the first station, which is moved to x=0.
    """
    if not isinstance(area, AreaFunction):
        area = AreaFunction(area)
    if not target_h > 0:
        raise MeshError("target_h must be positive")
    x0, x1 = area.x[0], area.x[-1]
    length = x1 - x0
    r_max = float(area.radii.max())
    if not target_h < r_max:
        raise MeshError("target_h must be smaller than the widest radius")
    pts, tris = disk_triangulation(r_max, target_h)
    n_layers = math.ceil(length / target_h - 1e-12)
    xs = np.linspace(0.0, length, n_layers + 1)
    scale = area.radius_at(xs + x0) / r_max
    verts, tets = _extrude(pts, tris, xs, scale)
    return tag_boundary(verts, tets, _tagger(length))
