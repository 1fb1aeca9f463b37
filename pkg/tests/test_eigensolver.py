import json
import math

import numpy as np
import pytest
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from conftest import random_pencil
from vocaltract.eigensolver import (
    EigenSolverError,
    ResonanceSet,
    SolverConfig,
    dense_pencil_eigenvalues,
    linearize,
    nearest_eigenpairs,
    residual,
    solve_resonances,
)
from vocaltract.fem import GlottisBC, MaterialParams, QuadraticPencil, assemble_pencil

TWO_PI = 2 * math.pi


def scalar(k, c, m):
    return QuadraticPencil.from_matrices([[k]], [[c]], [[m]])


def assert_same_spectrum(a, b, rtol):
    assert len(a) == len(b)
    for x in a:
        assert np.min(np.abs(b - x)) <= rtol * abs(x)


def companion_eigenvalues(pencil):
    import scipy.linalg as sla
    A, B = linearize(pencil)
    return sla.eig(A.toarray(), B.toarray(), right=False)


def test_scalar_oscillator():
    w = np.sort_complex(companion_eigenvalues(scalar(1, 0, 1)))
    assert np.allclose(w, [-1j, 1j], atol=1e-14)


def test_scalar_critical_damping():
    w = companion_eigenvalues(scalar(1, 2, 1))
    assert np.allclose(w, -1, atol=1e-7)


def test_linearization_matches_dense_quadratic():
    rng = np.random.default_rng(5)
    pen = QuadraticPencil.from_matrices(*random_pencil(rng, 5))
    a = companion_eigenvalues(pen)
    assert_same_spectrum(a, dense_pencil_eigenvalues(pen.K, pen.C, pen.M), 1e-8)
    # eigenvalues are roots of det Q(lam)
    for lam in a:
        s = np.linalg.svd(pen.evaluate(lam).toarray(), compute_uv=False)
        assert s[-1] <= 1e-8 * s[0]


def test_linearize_shapes_and_mismatch():
    pen = scalar(1, 0, 1)
    A, B = linearize(pen)
    assert A.shape == B.shape == (2, 2)
    with pytest.raises(ValueError):
        QuadraticPencil.from_matrices(np.eye(2), np.eye(3), np.eye(2))


def test_residual_examples():
    pen = scalar(1, 0, 1)
    assert residual(pen, 1j, [1.0]) == 0.0
    r = residual(pen, 1j * (1 + 1e-3), [1.0])
    assert 1e-5 < r < 1e-2
    with pytest.raises(ValueError):
        residual(pen, 1j, [0.0])


def test_residual_of_non_eigenpair():
    rng = np.random.default_rng(1)
    pen = QuadraticPencil.from_matrices(*random_pencil(rng, 20))
    assert residual(pen, 1000j, rng.standard_normal(20)) > 1e-8


@pytest.mark.parametrize("seed", range(10))
def test_nearest_eigenpairs_against_dense(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(10, 120))
    pen = QuadraticPencil.from_matrices(*random_pencil(rng, n))
    dense = dense_pencil_eigenvalues(pen.K, pen.C, pen.M)
    sigma = 1j * np.median(np.abs(dense.imag))
    lam, X, _ = nearest_eigenpairs(pen, sigma, 6)
    ref = dense[np.argsort(np.abs(dense - sigma))][:6]
    for l in lam:
        assert np.min(np.abs(ref - l)) <= 1e-7 * abs(l)
    for j, l in enumerate(lam):
        assert residual(pen, l, X[:, j]) < 1e-10


def test_conjugate_shift_finds_conjugates():
    rng = np.random.default_rng(3)
    pen = QuadraticPencil.from_matrices(*random_pencil(rng, 60))
    sigma = 1500j
    up, _, _ = nearest_eigenpairs(pen, sigma, 4)
    down, _, _ = nearest_eigenpairs(pen, np.conj(sigma), 4)
    assert_same_spectrum(np.conj(up), down, 1e-9)


def test_shift_on_eigenvalue_is_perturbed():
    pen = QuadraticPencil.from_matrices(np.diag([4.0, 9.0, 16.0, 25.0]), np.zeros((4, 4)), np.eye(4))
    lam, _, op = nearest_eigenpairs(pen, 2j, 2)
    assert op.sigma != 2j
    assert np.min(np.abs(lam - 2j)) < 1e-10


def test_shift_on_eigenvalue_of_dense_pencil():
    # pivots stay nonzero here, only the conditioning shows the hit
    rng = np.random.default_rng(11)
    K, C, M = random_pencil(rng, 25, damped=False)
    pen = QuadraticPencil.from_matrices(K, C, M)
    dense = dense_pencil_eigenvalues(K, C, M)
    up = np.sort(dense.imag[dense.imag > 0])
    res = solve_resonances(pen, SolverConfig(n_wanted=4, shift=1j * up[12], frequency_floor=0.0))
    assert np.allclose(res.frequencies * TWO_PI, up[:4], rtol=1e-9)


def test_close_eigenvalues_are_kept_apart():
    w = np.array([1000.0, 1000.2, 1003.0, 1010.0, 1500.0, 2000.0])
    pen = QuadraticPencil.from_matrices(np.diag(w**2), np.zeros((6, 6)), np.eye(6))
    res = solve_resonances(pen, SolverConfig(n_wanted=4, shift=1200j, frequency_floor=0.0))
    assert np.allclose(res.frequencies * TWO_PI, w[:4], rtol=1e-9)


def test_overdamped_modes_are_not_resonances():
    # second DOF: c^2 > 4 k m, a pair of real eigenvalues near -1
    w = np.array([1e3, 2e3, 3e3, 4e3, 5e3, 6e3])
    pen = QuadraticPencil.from_matrices(np.diag(np.r_[1.0, w**2]), np.diag(np.r_[1e3, np.zeros(6)]), np.eye(7))
    res = solve_resonances(pen, SolverConfig(n_wanted=2, shift=0.5j, frequency_floor=0.0))
    assert np.allclose(res.frequencies * TWO_PI, w[:2], rtol=1e-9)
    assert all(abs(m.lam.real) < 1e-6 for m in res.modes)


@pytest.fixture(scope="module")
def tube_pencils(tube_004):
    return {bc: assemble_pencil(tube_004, MaterialParams(), bc) for bc in GlottisBC}


@pytest.fixture(scope="module")
def neumann_modes(tube_pencils):
    return solve_resonances(tube_pencils[GlottisBC.NEUMANN], SolverConfig())


def test_quarter_wave_tube(neumann_modes):
    R = neumann_modes.frequencies
    assert len(R) == 4
    assert np.all(np.abs(R - [500, 1500, 2500, 3500]) / [500, 1500, 2500, 3500] < 0.01)
    assert np.all(np.diff(R) > 0)


def test_neumann_spectrum_is_imaginary(neumann_modes):
    for m in neumann_modes.modes:
        assert abs(m.lam.real) <= 1e-6 * abs(m.lam)
        assert m.residual <= 1e-8


def test_robin_tube_is_dissipative(tube_pencils):
    res = solve_resonances(tube_pencils[GlottisBC.ROBIN], SolverConfig())
    assert len(res) == 4
    for m in res.modes:
        assert m.lam.real < 0
        assert m.residual <= 1e-8
        assert m.frequency > 50


@pytest.mark.parametrize("f_shift", [100.0, 800.0])
def test_shift_invariance(tube_pencils, neumann_modes, f_shift):
    res = solve_resonances(tube_pencils[GlottisBC.NEUMANN], SolverConfig(shift=1j * TWO_PI * f_shift))
    assert np.allclose(res.frequencies, neumann_modes.frequencies, rtol=1e-8)


def test_frequency_floor(tube_pencils, neumann_modes):
    res = solve_resonances(tube_pencils[GlottisBC.NEUMANN], SolverConfig(frequency_floor=1000.0, n_wanted=2))
    assert np.allclose(res.frequencies, neumann_modes.frequencies[1:3], rtol=1e-8)


def test_eigenvector_shape(tube_pencils, neumann_modes):
    pen = tube_pencils[GlottisBC.NEUMANN]
    phi = neumann_modes.modes[0].eigvec
    assert phi.shape == (pen.n,)
    assert np.linalg.norm(phi) == pytest.approx(1.0)


def test_exports(neumann_modes):
    table = neumann_modes.to_table()
    rows = [l for l in table.splitlines() if not l.startswith("#")]
    assert len(rows) == 4
    assert float(rows[0].split("\t")[1]) == pytest.approx(neumann_modes.frequencies[0])
    data = json.loads(neumann_modes.to_json())
    assert [m["R_Hz"] for m in data["modes"]] == pytest.approx(list(neumann_modes.frequencies))


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(n_wanted=0)
    with pytest.raises(ValueError):
        SolverConfig(tol=0)


def test_too_many_modes_requested():
    pen = scalar(1, 0, 1)
    with pytest.raises(EigenSolverError):
        nearest_eigenpairs(pen, 0.5j, 2)
