"""Resonances of the quadratic pencil via companion linearization and shift-invert Arnoldi.

With ``y = [x; lam x]`` the pencil ``lam**2 M + lam C + K`` becomes the
generalized problem ``A y = lam B y`` with

    A = [[0, I], [-K, -C]],   B = [[I, 0], [0, M]].

Shift-invert iterates with ``(A - sigma B)^{-1} B``. Its action only needs
one sparse LU factorization of the n-by-n matrix ``Q(sigma) = sigma**2 M +
sigma C + K`` (a block elimination of the 2n-by-2n system), and ARPACK's
complex Arnoldi finds the eigenvalues nearest ``sigma``.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fem import QuadraticPencil

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


class EigenSolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    n_wanted: int = 4
    shift: complex = 1j * TWO_PI * 300.0  # rad/s
    max_krylov: int | None = None
    tol: float = 1e-8
    frequency_floor: float = 50.0  # Hz
    max_iter: int = 5000

    def __post_init__(self):
        if self.n_wanted < 1:
            raise ValueError("n_wanted must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        if self.frequency_floor < 0:
            raise ValueError("frequency_floor must be >= 0")


@dataclass(frozen=True, eq=False)
class Mode:
    lam: complex
    eigvec: np.ndarray = field(repr=False)
    residual: float

    @property
    def frequency(self) -> float:
        """Resonance frequency ``Im(lam) / 2 pi`` in Hz."""
        return self.lam.imag / TWO_PI

    @property
    def damping(self) -> float:
        return -self.lam.real


@dataclass(frozen=True, eq=False)
class ResonanceSet:
    modes: tuple
    provenance: str = ""
    n_elements: int = 0
    n_dofs: int = 0

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([m.frequency for m in self.modes])

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([m.lam for m in self.modes])

    def __len__(self):
        return len(self.modes)

    def to_table(self) -> str:
        lines = [
            f"# {self.provenance}" if self.provenance else "# resonances",
            f"# elements={self.n_elements} dofs={self.n_dofs}",
            "# mode\tR_Hz\tdamping_1/s\tresidual",
        ]
        for j, m in enumerate(self.modes, start=1):
            lines.append(f"{j}\t{m.frequency:.10g}\t{m.damping:.10g}\t{m.residual:.3e}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps({
            "provenance": self.provenance,
            "n_elements": self.n_elements,
            "n_dofs": self.n_dofs,
            "modes": [
                {"R_Hz": m.frequency, "lambda_re": m.lam.real, "lambda_im": m.lam.imag,
                 "damping": m.damping, "residual": m.residual}
                for m in self.modes
            ],
        }, indent=2, sort_keys=True)


def linearize(pencil: QuadraticPencil):
    """First companion pair ``(A, B)`` of size 2n, as CSR matrices."""
    K, C, M = pencil.K, pencil.C, pencil.M
    if not (K.shape == C.shape == M.shape):
        raise ValueError("K, C, M dimension mismatch")
    n = K.shape[0]
    eye = sp.identity(n, format="csr")
    A = sp.bmat([[None, eye], [-K, -C]], format="csr")
    B = sp.bmat([[eye, None], [None, M]], format="csr")
    return A, B


def _norm(a) -> float:
    return float(spla.norm(a, 1)) if a.nnz else 0.0


def residual(pencil: QuadraticPencil, lam: complex, phi, norms=None) -> float:
    """``|Q(lam) phi| / ((|lam|^2 |M| + |lam| |C| + |K|) |phi|)``, matrix 1-norms."""
    phi = np.asarray(phi)
    nphi = np.linalg.norm(phi)
    if nphi == 0:
        raise ValueError("residual of the zero vector is undefined")
    nk, nc, nm = norms if norms is not None else (_norm(pencil.K), _norm(pencil.C), _norm(pencil.M))
    r = (lam * lam) * (pencil.M @ phi) + lam * (pencil.C @ phi) + pencil.K @ phi
    a = abs(lam)
    return float(np.linalg.norm(r) / ((a * a * nm + a * nc + nk) * nphi))


class ShiftInvert:
    """Applies ``(A - sigma B)^{-1} B`` of the companion pair using an LU of Q(sigma)."""

    def __init__(self, pencil: QuadraticPencil, sigma: complex, max_cond: float | None = 1e12):
        self.pencil = pencil
        self.sigma = complex(sigma)
        q = pencil.evaluate(self.sigma).astype(complex).tocsc()
        try:
            self.lu = spla.splu(q)
        except RuntimeError as e:
            raise EigenSolverError(f"Q(sigma) is singular at sigma={sigma}: {e}") from None
        d = self.lu.U.diagonal()
        if np.any(d == 0) or not np.all(np.isfinite(d)):
            raise EigenSolverError(f"Q(sigma) is singular at sigma={sigma}")
        if max_cond is not None:
            # one solve estimates |Q^-1|; a shift on an eigenvalue can pass
            # the pivot test yet swamp Arnoldi with a single huge Ritz value
            b = np.exp(1j * np.arange(pencil.n))
            growth = np.linalg.norm(self.lu.solve(b)) * _norm(q) / np.linalg.norm(b)
            if not growth < max_cond:
                raise EigenSolverError(f"Q(sigma) is nearly singular at sigma={sigma}")
        self.CsM = (pencil.C + self.sigma * pencil.M).tocsr()
        n = pencil.n
        self.operator = spla.LinearOperator((2 * n, 2 * n), matvec=self.apply, dtype=complex)

    def apply(self, v):
        n = self.pencil.n
        v = np.asarray(v).ravel()
        b1 = v[:n]
        b2 = self.pencil.M @ v[n:]
        x1 = -self.lu.solve(b2 + self.CsM @ b1)
        x2 = b1 + self.sigma * x1
        return np.concatenate([x1, x2])


def _factor(pencil, sigma):
    try:
        return ShiftInvert(pencil, sigma)
    except EigenSolverError:
        perturbed = sigma * (1 + 1e-3) + 1e-3 * abs(sigma) * 1j + 1e-6
        log.warning("shift %s singular, retrying at %s", sigma, perturbed)
        return ShiftInvert(pencil, perturbed)


def _pick_vector(pencil, lam, y):
    """Best of the two block estimates of the pencil eigenvector from y = [x; lam x]."""
    n = pencil.n
    cands = [y[:n]]
    if lam != 0:
        cands.append(y[n:] / lam)
    best = min(cands, key=lambda x: residual(pencil, lam, x) if np.linalg.norm(x) else np.inf)
    return best / np.linalg.norm(best)


def _inverse_steps(pencil, lam, x, op: ShiftInvert, norms, tol, steps):
    for _ in range(steps):
        r = residual(pencil, lam, x, norms)
        if r <= 0.1 * tol:
            break
        y = op.apply(np.concatenate([x, lam * x]))
        if not np.all(np.isfinite(y)):
            break
        x_new = _pick_vector(pencil, lam, y)
        lam_new = _quadratic_rayleigh(pencil, x_new, lam)
        if residual(pencil, lam_new, x_new, norms) < r:
            lam, x = lam_new, x_new
        else:
            break
    return lam, x


def _polish(pencil, lam, x, norms, tol, steps=3):
    """Inverse iteration with a fixed shift at the estimate, refining the eigenvalue.

    Iterating with the Arnoldi shift's factorization would pull every vector
    toward the eigenvalue nearest that shift, so a local factorization is used.
    """
    if residual(pencil, lam, x, norms) <= 0.1 * tol:
        return lam, x
    try:
        local = ShiftInvert(pencil, lam * (1 + 1e-10), max_cond=None)
    except EigenSolverError:
        return lam, x
    return _inverse_steps(pencil, lam, x, local, norms, tol, steps)


def _quadratic_rayleigh(pencil, x, near):
    """Root of ``x^H Q(lam) x = 0`` closest to ``near``."""
    xh = x.conj()
    m = xh @ (pencil.M @ x)
    c = xh @ (pencil.C @ x)
    k = xh @ (pencil.K @ x)
    if m == 0:
        return near
    roots = np.roots([m, c, k])
    return complex(roots[np.argmin(np.abs(roots - near))])


def nearest_eigenpairs(pencil: QuadraticPencil, sigma: complex, k: int,
                       tol: float = 1e-12, max_iter: int = 5000, ncv: int | None = None,
                       op: ShiftInvert | None = None):
    """The ``k`` pencil eigenvalues nearest ``sigma`` with normalized eigenvectors.

    Returns (eigenvalues, vectors as columns), ordered by distance to sigma.
    """
    op = op or _factor(pencil, sigma)
    n2 = 2 * pencil.n
    if k >= n2 - 1:
        raise EigenSolverError(f"k={k} too large for a linearization of size {n2}")
    if ncv is None:
        ncv = min(n2, max(2 * k + 1, 20))
    v0 = np.ones(n2, dtype=complex)  # deterministic start
    try:
        mu, Y = spla.eigs(op.operator, k=k, which="LM", tol=tol, maxiter=max_iter,
                          ncv=ncv, v0=v0)
    except spla.ArpackNoConvergence as e:
        raise EigenSolverError(f"Arnoldi did not converge: {e}") from None
    lam = op.sigma + 1.0 / mu
    order = np.argsort(np.abs(lam - op.sigma), kind="stable")
    lam = lam[order]
    Y = Y[:, order]
    X = np.column_stack([_pick_vector(pencil, l, Y[:, j]) for j, l in enumerate(lam)]) if k else Y
    return lam, X, op


def _covered(box, center, radius) -> bool:
    """Whether the closed rectangle lies in the open disk (its corners suffice)."""
    (x0, x1), (y0, y1) = box
    return all(abs(complex(x, y) - center) < radius * (1 - 1e-9) for x in (x0, x1) for y in (y0, y1))


def solve_resonances(pencil: QuadraticPencil, config: SolverConfig = SolverConfig(),
                     provenance: str = "") -> ResonanceSet:
    """Lowest ``n_wanted`` resonances with ``Im lam > 0`` above the frequency floor.

    The Krylov request grows until the converged disk around the shift covers
    the rectangle ``-X <= Re <= 0``, ``floor <= Im <= Im(last)``, where X is the
    largest damping among the resonances in that disk. Within the rectangle the result
    does not depend on the shift. A strongly damped mode lower than ``last``
    but outside the rectangle can be missed when it is far from the shift.
    """
    n2 = 2 * pencil.n
    norms = (_norm(pencil.K), _norm(pencil.C), _norm(pencil.M))
    floor_w = TWO_PI * config.frequency_floor
    k = min(n2 - 2, 2 * config.n_wanted + 4)
    op = _factor(pencil, config.shift)
    while True:
        ncv = None if config.max_krylov is None else min(config.max_krylov, n2)
        if ncv is not None and ncv <= k:
            ncv = min(n2, k + 1 + max(k, 10))
        lam, X, _ = nearest_eigenpairs(pencil, op.sigma, k, tol=min(1e-12, config.tol * 1e-3),
                                       max_iter=config.max_iter, ncv=ncv, op=op)
        radius = float(np.abs(lam - op.sigma).max())
        # overdamped (real) eigenvalues pick up roundoff-level imaginary parts
        keep = (lam.imag > floor_w) & (lam.imag > 1e-8 * np.abs(lam))
        found = [(lam[i], X[:, i]) for i in np.nonzero(keep)[0]]
        cand = _merge_duplicates(sorted(found, key=lambda t: t[0].imag))
        if k >= n2 - 2:
            break
        if len(cand) >= config.n_wanted:
            top = cand[config.n_wanted - 1][0].imag
            damping = max(0.0, max(-l.real for l, _ in cand))
            if _covered(((-damping, 0.0), (floor_w, top)), op.sigma, radius):
                break
        k = min(n2 - 2, 2 * k)
        log.debug("growing Krylov request to k=%d", k)

    modes = []
    for lam_j, x in cand[:config.n_wanted]:
        lam_j, x = _polish(pencil, lam_j, x, norms, config.tol)
        r = residual(pencil, lam_j, x, norms)
        if r > config.tol:
            raise EigenSolverError(
                f"mode at {lam_j.imag / TWO_PI:.3f} Hz has residual {r:.2e} > tol {config.tol:.1e}")
        modes.append(Mode(complex(lam_j), x, r))
    if len(modes) < config.n_wanted:
        log.warning("only %d of %d requested modes found", len(modes), config.n_wanted)
    modes.sort(key=lambda m: m.frequency)
    return ResonanceSet(tuple(modes), provenance=provenance, n_elements=pencil.n_elements,
                        n_dofs=pencil.n)


def _merge_duplicates(cand, rtol=1e-6):
    """Drop eigenpairs found twice: same eigenvalue and parallel eigenvector."""
    out = []
    for lam, x in cand:
        if any(abs(lam - l) <= rtol * abs(l) and abs(np.vdot(y, x)) >= 1 - 1e-6 for l, y in out):
            continue
        out.append((lam, x))
    return out


def dense_pencil_eigenvalues(K, C, M) -> np.ndarray:
    """All eigenvalues from the symmetric linearization, solved densely.

    Uses ``[[-K, 0], [0, M]] y = lam [[C, M], [M, 0]] y``, a different
    linearization from :func:`linearize`, so it can serve as an oracle. The
    pencil is first scaled (Fan, Lin and Van Dooren) so |K| and |M| balance.
    """
    import scipy.linalg as sla

    K, C, M = (np.asarray(a.todense() if sp.issparse(a) else a, dtype=float) for a in (K, C, M))
    n = K.shape[0]
    nk, nc, nm = (np.linalg.norm(a, 2) for a in (K, C, M))
    gamma = math.sqrt(nk / nm) if nk > 0 and nm > 0 else 1.0
    delta = 2.0 / (nk + nc * gamma) if nk + nc * gamma > 0 else 1.0
    K, C, M = delta * K, gamma * delta * C, gamma * gamma * delta * M
    Z = np.zeros((n, n))
    A = np.block([[-K, Z], [Z, M]])
    B = np.block([[C, M], [M, Z]])
    w = sla.eig(A, B, right=False)
    return gamma * w[np.isfinite(w)]
