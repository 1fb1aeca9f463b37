"""P1 finite element matrices for the Helmholtz resonance problem.

For a test function psi vanishing on the mouth opening the weak form reads

    lam**2 * int(phi psi) + lam * c * int_glottis(phi psi) + c**2 * int(grad phi . grad psi) = 0,

which gives the quadratic pencil ``(lam**2 M + lam C + K) x = 0`` with

    M_ij = int phi_i phi_j
    C_ij = c * int_glottis phi_i phi_j
    K_ij = c**2 * int grad phi_i . grad phi_j

All element integrals are exact closed forms.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse as sp

from .geometry.mesh import MeshError, Region, TetMesh, triangle_areas


class GlottisBC(enum.Enum):
    ROBIN = "robin"
    NEUMANN = "neumann"

    @classmethod
    def parse(cls, value) -> "GlottisBC":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


@dataclass(frozen=True)
class MaterialParams:
    """Speed of sound (m/s) and air density (kg/m^3); defaults are dry air at 305 K."""

    c: float = 350.0
    rho0: float = 1.225

    def __post_init__(self):
        if not (self.c > 0 and self.rho0 > 0):
            raise ValueError("c and rho0 must be strictly positive")


class AssemblyError(MeshError):
    pass


def _gradients(p: np.ndarray):
    """Barycentric gradients (..., 4, 3) and signed volumes of tets p (..., 4, 3)."""
    d = p[..., 1:, :] - p[..., :1, :]
    det = np.linalg.det(d)
    inv = np.linalg.inv(d)  # columns are grad(lambda_1..3)
    g = np.swapaxes(inv, -1, -2)
    g0 = -g.sum(axis=-2, keepdims=True)
    return np.concatenate([g0, g], axis=-2), det / 6.0


def element_stiffness(tet_vertices) -> np.ndarray:
    """``V * grad(phi_i) . grad(phi_j)`` for one tet given as a (4, 3) array."""
    p = np.asarray(tet_vertices, dtype=float)
    if p.shape != (4, 3):
        raise ValueError("tet_vertices must have shape (4, 3)")
    vol = np.linalg.det(p[1:] - p[0]) / 6.0
    if not vol > 1e-14 * np.ptp(p, axis=0).max() ** 3:
        raise AssemblyError("degenerate or inverted tet (non-positive volume)")
    g, vol = _gradients(p)
    return vol * g @ g.T


def element_mass(tet_vertices) -> np.ndarray:
    """Exact P1 mass matrix ``(V / 20) * (1 + delta_ij)``."""
    p = np.asarray(tet_vertices, dtype=float)
    if p.shape != (4, 3):
        raise ValueError("tet_vertices must have shape (4, 3)")
    vol = np.linalg.det(p[1:] - p[0]) / 6.0
    if not vol > 1e-14 * np.ptp(p, axis=0).max() ** 3:
        raise AssemblyError("degenerate or inverted tet (non-positive volume)")
    return vol / 20.0 * (np.ones((4, 4)) + np.eye(4))


_TRI_MASS = (np.ones((3, 3)) + np.eye(3)) / 12.0
_TET_MASS = (np.ones((4, 4)) + np.eye(4)) / 20.0


def _coo(rows_idx, local, n) -> sp.csr_matrix:
    k = rows_idx.shape[1]
    r = np.repeat(rows_idx, k, axis=1).ravel()
    c = np.tile(rows_idx, (1, k)).ravel()
    m = sp.coo_matrix((local.ravel(), (r, c)), shape=(n, n)).tocsr()
    m.sum_duplicates()
    return m


def _symmetrize(m: sp.csr_matrix) -> sp.csr_matrix:
    # element matrices are symmetric, so this only removes round-off asymmetry
    out = ((m + m.T) * 0.5).tocsr()
    out.sort_indices()
    return out


@dataclass(frozen=True)
class FullMatrices:
    """Global matrices on all mesh vertices, before Dirichlet elimination."""

    K: sp.csr_matrix
    C: sp.csr_matrix
    M: sp.csr_matrix


def assemble_full(mesh: TetMesh, params: MaterialParams = MaterialParams(),
                  glottis_bc=GlottisBC.ROBIN) -> FullMatrices:
    glottis_bc = GlottisBC.parse(glottis_bc)
    n = mesh.n_vertices
    p = mesh.vertices[mesh.tets]
    g, vol = _gradients(p)
    if np.any(vol <= 0):
        raise AssemblyError("mesh contains non-positive tets")
    ke = vol[:, None, None] * np.einsum("eik,ejk->eij", g, g)
    me = vol[:, None, None] * _TET_MASS
    K = _symmetrize(_coo(mesh.tets, params.c**2 * ke, n))
    M = _symmetrize(_coo(mesh.tets, me, n))
    if glottis_bc is GlottisBC.ROBIN:
        gf = mesh.region_faces(Region.GLOTTIS)
        if len(gf) == 0:
            raise AssemblyError("ROBIN glottis requested but the mesh has no GLOTTIS faces")
        area = triangle_areas(mesh.vertices, gf)
        ce = params.c * area[:, None, None] * _TRI_MASS
        C = _symmetrize(_coo(gf, ce, n))
    else:
        C = sp.csr_matrix((n, n))
    return FullMatrices(K, C, M)


@dataclass(frozen=True, eq=False)
class QuadraticPencil:
    """``lam**2 M + lam C + K`` restricted to the free (non-mouth) vertices.

    ``free_dofs[i]`` is the mesh vertex carried by reduced DOF ``i``.
    """

    K: sp.csr_matrix
    C: sp.csr_matrix
    M: sp.csr_matrix
    dirichlet_dofs: np.ndarray
    free_dofs: np.ndarray
    glottis_bc: GlottisBC = GlottisBC.ROBIN
    n_elements: int = 0

    def __post_init__(self):
        shapes = {self.K.shape, self.C.shape, self.M.shape}
        if len(shapes) != 1:
            raise ValueError(f"K, C, M dimension mismatch: {sorted(shapes)}")
        n, m = self.K.shape
        if n != m:
            raise ValueError("pencil matrices must be square")

    @property
    def n(self) -> int:
        return self.K.shape[0]

    @classmethod
    def from_matrices(cls, K, C, M, glottis_bc=GlottisBC.ROBIN) -> "QuadraticPencil":
        K, C, M = (sp.csr_matrix(x) for x in (K, C, M))
        n = K.shape[0]
        return cls(K, C, M, np.array([], dtype=np.int64), np.arange(n), GlottisBC.parse(glottis_bc))

    def evaluate(self, lam) -> sp.csr_matrix:
        return (lam * lam) * self.M + lam * self.C + self.K

    def expand(self, x: np.ndarray, n_vertices: int | None = None) -> np.ndarray:
        """Scatter a reduced DOF vector back onto all mesh vertices (zero on the mouth)."""
        nv = n_vertices or (len(self.free_dofs) + len(self.dirichlet_dofs))
        out = np.zeros(nv, dtype=np.result_type(x, float))
        out[self.free_dofs] = x
        return out


def assemble_pencil(mesh: TetMesh, params: MaterialParams = MaterialParams(),
                    glottis_bc=GlottisBC.ROBIN) -> QuadraticPencil:
    """Assemble K, C, M and eliminate the vertices of the mouth opening."""
    glottis_bc = GlottisBC.parse(glottis_bc)
    if not mesh.has_region(Region.MOUTH):
        raise AssemblyError(
            "mesh has no MOUTH faces: without the Dirichlet opening the pencil is "
            "singular at lam=0 and non-dissipative in a different way"
        )
    full = assemble_full(mesh, params, glottis_bc)
    dirichlet = mesh.region_vertices(Region.MOUTH)
    mask = np.ones(mesh.n_vertices, dtype=bool)
    mask[dirichlet] = False
    free = np.nonzero(mask)[0]

    def restrict(a):
        r = a[free][:, free].tocsr()
        r.sort_indices()
        return r

    return QuadraticPencil(
        restrict(full.K), restrict(full.C), restrict(full.M),
        dirichlet_dofs=dirichlet, free_dofs=free, glottis_bc=glottis_bc,
        n_elements=mesh.n_tets,
    )


def write_matrix_market(pencil: QuadraticPencil, basename) -> list[str]:
    """Dump K, C, M as ``<basename>_K.mtx`` etc. in symmetric coordinate format."""
    paths = []
    for name in ("K", "C", "M"):
        path = f"{basename}_{name}.mtx"
        scipy.io.mmwrite(path, getattr(pencil, name), symmetry="symmetric",
                         comment=f"vocaltract {name} matrix, {pencil.n} free DOFs")
        paths.append(path)
    return paths
