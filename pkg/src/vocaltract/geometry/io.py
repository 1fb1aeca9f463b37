"""TetGen .node/.ele/.face and Gmsh MSH 2.2 ASCII readers, plus a TetGen writer."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .mesh import MeshError, Region, TetMesh, validate

DEFAULT_MARKERS = {1: Region.MOUTH, 2: Region.WALL, 3: Region.GLOTTIS}
GMSH_NAMES = {"mouth": Region.MOUTH, "wall": Region.WALL, "glottis": Region.GLOTTIS}


class MeshParseError(MeshError):
    def __init__(self, path, lineno, msg):
        super().__init__(f"{path}:{lineno}: {msg}")
        self.path = str(path)
        self.lineno = lineno


def _data_lines(path):
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                yield lineno, line.split()


def _ints(path, lineno, tokens):
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise MeshParseError(path, lineno, f"expected integers, got {' '.join(tokens)!r}") from None


def _floats(path, lineno, tokens):
    try:
        return [float(t) for t in tokens]
    except ValueError:
        raise MeshParseError(path, lineno, f"expected numbers, got {' '.join(tokens)!r}") from None


def _read_table(path, kind, min_cols):
    """Return (header fields, list of (lineno, tokens)) for a TetGen file."""
    lines = _data_lines(path)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise MeshParseError(path, 0, f"empty {kind} file") from None
    head = _ints(path, lineno, header)
    n = head[0]
    rows = []
    for lineno, tokens in lines:
        if len(rows) == n:
            raise MeshParseError(path, lineno, f"more {kind} records than the header count {n}")
        if len(tokens) < min_cols:
            raise MeshParseError(path, lineno, f"{kind} record needs {min_cols} fields, got {len(tokens)}")
        rows.append((lineno, tokens))
    if len(rows) != n:
        raise MeshParseError(path, lineno, f"header announces {n} {kind} records, found {len(rows)}")
    return head, rows


def load_tetgen(node_path, ele_path, face_path, markers=None, strict: bool = True) -> TetMesh:
    """Read a TetGen mesh triple and map face markers to regions.

    Node numbering may start at 0 or 1 (TetGen writes whichever it read);
    element and face records reference node ids, which are mapped to
    0-based positions. With ``strict`` (the default) the mesh must be
    watertight and free of duplicate vertices.
    """
    markers = DEFAULT_MARKERS if markers is None else {int(k): Region(v) for k, v in markers.items()}

    head, rows = _read_table(node_path, "node", 4)
    if len(head) < 2 or head[1] != 3:
        raise MeshParseError(node_path, 1, "node header must read 'N 3 <attrs> <boundary>'")
    node_ids = []
    coords = []
    for lineno, tokens in rows:
        node_ids.append(_ints(node_path, lineno, tokens[:1])[0])
        coords.append(_floats(node_path, lineno, tokens[1:4]))
    node_ids = np.asarray(node_ids, dtype=np.int64)
    first = int(node_ids.min()) if len(node_ids) else 0
    if not np.array_equal(node_ids, np.arange(first, first + len(node_ids))):
        raise MeshParseError(node_path, rows[0][0] if rows else 1, "node ids must be consecutive")
    n_nodes = len(node_ids)

    def by_id(path, lineno, idx):
        local = [i - first for i in idx]
        for i, raw in zip(local, idx):
            if not 0 <= i < n_nodes:
                raise MeshParseError(path, lineno, f"node id {raw} out of range")
        return local

    head, rows = _read_table(ele_path, "element", 5)
    if len(head) >= 2 and head[1] != 4:
        raise MeshParseError(ele_path, 1, f"only 4-node tetrahedra are supported, got {head[1]}")
    tets = [by_id(ele_path, ln, _ints(ele_path, ln, tok[1:5])) for ln, tok in rows]

    head, rows = _read_table(face_path, "face", 4)
    if len(head) < 2 or head[1] != 1:
        raise MeshParseError(face_path, 1, "face file must carry boundary markers (header 'N 1')")
    faces, tags = [], []
    for ln, tok in rows:
        if len(tok) < 5:
            raise MeshParseError(face_path, ln, "face record needs a boundary marker")
        vals = _ints(face_path, ln, tok[1:5])
        if vals[3] not in markers:
            raise MeshParseError(face_path, ln, f"unknown boundary marker {vals[3]}")
        faces.append(by_id(face_path, ln, vals[:3]))
        tags.append(int(markers[vals[3]]))

    mesh = TetMesh(
        np.asarray(coords, dtype=float).reshape(-1, 3),
        np.asarray(tets, dtype=np.int64).reshape(-1, 4),
        np.asarray(faces, dtype=np.int64).reshape(-1, 3),
        np.asarray(tags, dtype=np.int64),
    )
    if strict:
        _require_sound(mesh, face_path)
    return mesh


def _require_sound(mesh: TetMesh, where) -> None:
    diag = validate(mesh)
    if diag.n_duplicate_vertices:
        raise MeshError(f"{where}: {diag.n_duplicate_vertices} duplicate vertex pair(s)")
    if not diag.watertight:
        raise MeshError(f"{where}: non-watertight boundary: " + "; ".join(diag.defects))


def write_tetgen(mesh: TetMesh, basename, markers=None) -> tuple[Path, Path, Path]:
    """Write ``basename.node/.ele/.face`` with 1-based ids, deterministically.

    Coordinates are written with 17 significant digits so a reload is bit-exact.
    """
    markers = DEFAULT_MARKERS if markers is None else markers
    to_marker = {Region(v): int(k) for k, v in markers.items()}
    base = Path(basename)
    node, ele, face = (base.with_name(base.name + ext) for ext in (".node", ".ele", ".face"))
    with open(node, "w") as fh:
        fh.write(f"{mesh.n_vertices} 3 0 0\n")
        for i, (x, y, z) in enumerate(mesh.vertices.tolist(), start=1):
            fh.write(f"{i} {x!r} {y!r} {z!r}\n")
    with open(ele, "w") as fh:
        fh.write(f"{mesh.n_tets} 4 0\n")
        for i, t in enumerate((mesh.tets + 1).tolist(), start=1):
            fh.write(f"{i} {t[0]} {t[1]} {t[2]} {t[3]}\n")
    with open(face, "w") as fh:
        fh.write(f"{len(mesh.faces)} 1\n")
        for i, (f, g) in enumerate(zip((mesh.faces + 1).tolist(), mesh.face_tags.tolist()), start=1):
            fh.write(f"{i} {f[0]} {f[1]} {f[2]} {to_marker[Region(g)]}\n")
    return node, ele, face


def tetgen_paths(basename) -> tuple[Path, Path, Path]:
    """Resolve a basename (or any one of the three files) to the file triple."""
    p = Path(basename)
    if p.suffix in (".node", ".ele", ".face"):
        p = p.with_suffix("")
    return tuple(p.with_name(p.name + ext) for ext in (".node", ".ele", ".face"))


def load_gmsh(path, names=None, strict: bool = True) -> TetMesh:
    """Read a Gmsh MSH 2.2 ASCII file.

    Triangles (type 2) become boundary faces tagged through the
    ``$PhysicalNames`` entry of their physical group; tetrahedra (type 4)
    form the volume. Other element types are ignored.
    """
    names = GMSH_NAMES if names is None else {k.lower(): Region(v) for k, v in names.items()}
    with open(path) as fh:
        lines = [ln.strip() for ln in fh]
    sections = {}
    i = 0
    while i < len(lines):
        ln = lines[i]
        if ln.startswith("$") and not ln.startswith("$End"):
            name = ln[1:]
            j = i + 1
            while j < len(lines) and lines[j] != f"$End{name}":
                j += 1
            if j == len(lines):
                raise MeshParseError(path, i + 1, f"section ${name} is not terminated")
            sections[name] = (i + 2, lines[i + 1:j])
            i = j
        i += 1
    if "MeshFormat" not in sections:
        raise MeshParseError(path, 1, "missing $MeshFormat")
    start, body = sections["MeshFormat"]
    fmt = body[0].split()
    if not fmt or not fmt[0].startswith("2") or (len(fmt) > 1 and fmt[1] != "0"):
        raise MeshParseError(path, start, "only ASCII MSH 2.x is supported")

    phys = {}
    if "PhysicalNames" in sections:
        start, body = sections["PhysicalNames"]
        for k, ln in enumerate(body[1:], start=start + 1):
            tok = ln.split(maxsplit=2)
            dim, tag = _ints(path, k, tok[:2])
            label = tok[2].strip().strip('"').lower()
            if dim == 2:
                phys[tag] = label

    if "Nodes" not in sections:
        raise MeshParseError(path, 1, "missing $Nodes")
    start, body = sections["Nodes"]
    ids, coords = [], []
    for k, ln in enumerate(body[1:], start=start + 1):
        tok = ln.split()
        ids.append(_ints(path, k, tok[:1])[0])
        coords.append(_floats(path, k, tok[1:4]))
    index = {nid: pos for pos, nid in enumerate(ids)}

    if "Elements" not in sections:
        raise MeshParseError(path, 1, "missing $Elements")
    start, body = sections["Elements"]
    tets, faces, tags = [], [], []
    for k, ln in enumerate(body[1:], start=start + 1):
        vals = _ints(path, k, ln.split())
        etype, ntags = vals[1], vals[2]
        tg = vals[3:3 + ntags]
        nodes = vals[3 + ntags:]
        try:
            local = [index[n] for n in nodes]
        except KeyError as e:
            raise MeshParseError(path, k, f"unknown node id {e.args[0]}") from None
        if etype == 4:
            tets.append(local[:4])
        elif etype == 2:
            phys_tag = tg[0] if tg else None
            label = phys.get(phys_tag)
            if label not in names:
                raise MeshParseError(path, k, f"unknown boundary marker {label or phys_tag!r}")
            faces.append(local[:3])
            tags.append(int(names[label]))
    mesh = TetMesh(
        np.asarray(coords, dtype=float).reshape(-1, 3),
        np.asarray(tets, dtype=np.int64).reshape(-1, 4),
        np.asarray(faces, dtype=np.int64).reshape(-1, 3),
        np.asarray(tags, dtype=np.int64),
    )
    if strict:
        _require_sound(mesh, path)
    return mesh


def write_gmsh(mesh: TetMesh, path) -> None:
    """Write MSH 2.2 ASCII with physical surfaces mouth/wall/glottis (tags 1/2/3)."""
    with open(path, "w") as fh:
        fh.write("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n")
        fh.write("$PhysicalNames\n4\n")
        for r in Region:
            fh.write(f'2 {int(r)} "{r.name.lower()}"\n')
        fh.write('3 10 "air"\n$EndPhysicalNames\n')
        fh.write(f"$Nodes\n{mesh.n_vertices}\n")
        for i, (x, y, z) in enumerate(mesh.vertices.tolist(), start=1):
            fh.write(f"{i} {x!r} {y!r} {z!r}\n")
        fh.write("$EndNodes\n")
        n_el = len(mesh.faces) + mesh.n_tets
        fh.write(f"$Elements\n{n_el}\n")
        k = 1
        for f, g in zip((mesh.faces + 1).tolist(), mesh.face_tags.tolist()):
            fh.write(f"{k} 2 2 {g} {g} {f[0]} {f[1]} {f[2]}\n")
            k += 1
        for t in (mesh.tets + 1).tolist():
            fh.write(f"{k} 4 2 10 10 {t[0]} {t[1]} {t[2]} {t[3]}\n")
            k += 1
        fh.write("$EndElements\n")


def load_mesh(path, strict: bool = True, markers=None) -> TetMesh:
    """Load ``*.msh`` as Gmsh, anything else as a TetGen basename."""
    if str(path).endswith(".msh"):
        return load_gmsh(path, strict=strict)
    node, ele, face = tetgen_paths(path)
    return load_tetgen(node, ele, face, markers=markers, strict=strict)
