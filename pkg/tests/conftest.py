import numpy as np
import pytest

from vocaltract.geometry import Region, TetMesh, gen_tube


def one_tet(scale=1.0, tags=(1, 2, 2, 3)):
    v = scale * np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]])
    t = np.array([[0, 1, 2, 3]])
    f = np.array([[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]])
    return TetMesh(v, t, f, np.array(tags))


def regular_tet(tag=Region.WALL):
    s = 1 / np.sqrt(2)
    v = np.array([[1, 0, -s], [-1, 0, -s], [0, 1, s], [0, -1, s]]) / 2.0
    f = np.array([[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]])
    return TetMesh(v, np.array([[0, 1, 2, 3]]), f, np.full(4, int(tag)))


@pytest.fixture
def single_tet():
    return one_tet()


@pytest.fixture(scope="session")
def tube_coarse():
    return gen_tube(0.175, 0.015, 0.005)


@pytest.fixture(scope="session")
def tube_004():
    return gen_tube(0.175, 0.015, 0.004)


def write_tetgen_text(tmp_path, name, nodes, eles, faces):
    """Write raw TetGen files; ``faces`` rows are (a, b, c, marker), ids 1-based."""
    base = tmp_path / name
    with open(f"{base}.node", "w") as fh:
        fh.write(f"# test nodes\n{len(nodes)} 3 0 0\n")
        for i, p in enumerate(nodes, start=1):
            fh.write(f"{i} {p[0]} {p[1]} {p[2]}\n")
    with open(f"{base}.ele", "w") as fh:
        fh.write(f"{len(eles)} 4 0\n")
        for i, e in enumerate(eles, start=1):
            fh.write(f"{i} " + " ".join(map(str, e)) + "\n")
    with open(f"{base}.face", "w") as fh:
        fh.write(f"{len(faces)} 1\n")
        for i, f in enumerate(faces, start=1):
            fh.write(f"{i} " + " ".join(map(str, f)) + "\n")
    return base


def random_pencil(rng, n, damped=True):
    """Sparse-ish SPD K and M and a PSD low-rank C, scaled like an acoustic problem."""
    import scipy.sparse as sp

    def spd(scale):
        a = rng.standard_normal((n, n)) * (rng.random((n, n)) < 0.2)
        return sp.csr_matrix(scale * (a @ a.T / n + np.eye(n)))

    K = spd(1e6 * (1 + rng.random()))
    M = spd(1.0)
    if damped:
        b = rng.standard_normal((n, max(1, n // 10)))
        C = sp.csr_matrix(50.0 * rng.random() * b @ b.T)
    else:
        C = sp.csr_matrix((n, n))
    return K, C, M


RANGES = ((250, 800), (600, 2300), (1800, 3300), (3000, 4500))


def random_vowel(rng, min_gap=300.0):
    """Four (frequency, bandwidth) pairs in vowel-plausible ranges, >= min_gap Hz apart."""
    while True:
        f = [rng.uniform(lo, hi) for lo, hi in RANGES]
        if np.all(np.diff(f) >= min_gap):
            return [(fi, rng.uniform(40, 120)) for fi in f]
