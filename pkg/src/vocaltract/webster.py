"""Straight-axis Webster horn resonances on an area function.

The 1D weak form, glottis at x=0 and mouth at x=L (Dirichlet):

    lam**2 int(A u v) + lam c A(0) u(0) v(0) + c**2 int(A u' v') = 0

is discretized with P1 elements whose area weight is the trapezoid mean of
the interpolated end areas. The quadratic pencil is solved densely through a
companion linearization, with no Krylov parameters shared with the 3D path.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .fem import GlottisBC, MaterialParams
from .geometry.area import AreaFunction

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class WebsterProblem:
    area: AreaFunction
    params: MaterialParams = field(default_factory=MaterialParams)
    glottis_bc: GlottisBC = GlottisBC.NEUMANN
    n_cells: int = 400

    def __post_init__(self):
        if self.n_cells < 16:
            raise ValueError("n_cells must be >= 16")
        object.__setattr__(self, "glottis_bc", GlottisBC.parse(self.glottis_bc))


def webster_matrices(problem: WebsterProblem):
    """Dense (K, C, M) on the free nodes 0..n_cells-1 (the mouth node is removed)."""
    af = problem.area
    c = problem.params.c
    x = np.linspace(af.x[0], af.x[-1], problem.n_cells + 1)
    h = np.diff(x)
    a_nodes = af.area_at(x)
    a_cell = 0.5 * (a_nodes[:-1] + a_nodes[1:])
    n = problem.n_cells + 1
    K = np.zeros((n, n))
    M = np.zeros((n, n))
    i = np.arange(problem.n_cells)
    ks = c * c * a_cell / h
    ms = a_cell * h / 6.0
    for (di, dj), sk, sm in (((0, 0), 1, 2), ((1, 1), 1, 2), ((0, 1), -1, 1), ((1, 0), -1, 1)):
        np.add.at(K, (i + di, i + dj), sk * ks)
        np.add.at(M, (i + di, i + dj), sm * ms)
    C = np.zeros((n, n))
    if problem.glottis_bc is GlottisBC.ROBIN:
        C[0, 0] = c * a_nodes[0]
    return K[:-1, :-1], C[:-1, :-1], M[:-1, :-1]


def webster_resonances(problem: WebsterProblem, n_wanted: int = 4,
                       frequency_floor: float = 50.0) -> list[tuple[complex, float]]:
    """Lowest ``n_wanted`` (lam, R_Hz) pairs with Im(lam) > 0 above the floor."""
    K, C, M = webster_matrices(problem)
    n = K.shape[0]
    # M is SPD, so the companion pair reduces to a standard eigenproblem
    cf = sla.cho_factor(M)
    A = np.block([[np.zeros((n, n)), np.eye(n)], [-sla.cho_solve(cf, K), -sla.cho_solve(cf, C)]])
    lam = sla.eig(A, right=False)
    lam = lam[np.isfinite(lam)]
    lam = lam[lam.imag > TWO_PI * frequency_floor]
    lam = lam[np.argsort(lam.imag, kind="stable")][:n_wanted]
    return [(complex(l), float(l.imag / TWO_PI)) for l in lam]
