import math

import numpy as np
import pytest

from src.utils.model_core import DotParameters

DOT_A = DotParameters(s0=22.0, d0=215.0, g_e=0.395, g_h=0.395)
DOT_B = DotParameters(s0=284.0, d0=473.0, g_e=1.21, g_h=0.13)
DOT_C = DotParameters(s0=-16.0, d0=215.0, g_e=0.4, g_h=0.4)


@pytest.fixture
def dot_a():
    """GaAs-barrier dot, S grows with field."""
    return DOT_A


@pytest.fixture
def dot_b():
    """AlGaAs-barrier dot, S shrinks with field."""
    return DOT_B


@pytest.fixture
def dot_c():
    """GaAs-barrier dot with negative S0; crosses near 2.58 T."""
    return DOT_C


def random_dots(n, seed=1234):
    """Valid dots with sigma0 = 0, d0 in [50, 800], |s0| < min(300, 1.5 d0), |g| <= 2."""
    rng = np.random.default_rng(seed)
    dots = []
    while len(dots) < n:
        d0 = rng.uniform(50.0, 800.0)
        s_max = min(300.0, 1.5 * d0)
        dots.append(
            DotParameters(
                s0=rng.uniform(-s_max, s_max) * 0.999,
                d0=d0,
                g_e=rng.uniform(-2.0, 2.0),
                g_h=rng.uniform(-2.0, 2.0),
            )
        )
    return dots


def jacobi_eigh(matrix, tol=1e-15, max_sweeps=50):
    """Cyclic Jacobi eigen-decomposition of a small dense symmetric matrix.

    Returns (eigenvalues, eigenvectors as columns), unsorted.
    """
    a = [list(map(float, row)) for row in matrix]
    n = len(a)
    v = [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]
    scale = max(1.0, max(abs(x) for row in a for x in row))
    for _ in range(max_sweeps):
        off = math.sqrt(sum(a[p][q] ** 2 for p in range(n) for q in range(n) if p != q))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if a[p][q] == 0.0:
                    continue
                theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp, akq = a[k][p], a[k][q]
                    a[k][p] = c * akp - s * akq
                    a[k][q] = s * akp + c * akq
                for k in range(n):
                    apk, aqk = a[p][k], a[q][k]
                    a[p][k] = c * apk - s * aqk
                    a[q][k] = s * apk + c * aqk
                for k in range(n):
                    vkp, vkq = v[k][p], v[k][q]
                    v[k][p] = c * vkp - s * vkq
                    v[k][q] = s * vkp + c * vkq
    eigenvalues = [a[i][i] for i in range(n)]
    return eigenvalues, v


@pytest.fixture(scope="session")
def random_dot_set():
    return random_dots(1000)


@pytest.fixture
def jacobi():
    return jacobi_eigh
