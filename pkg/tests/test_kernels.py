import math

import numpy as np
import pytest

from alphaproj import kernels, relative_alpha_entropy

BACKENDS = kernels.backends()


def test_compiled_backend_built():
    assert "cython" in BACKENDS
    assert kernels.BACKEND == "cython"


@pytest.fixture(params=sorted(BACKENDS))
def k(request):
    return BACKENDS[request.param]


@pytest.mark.parametrize("alpha", [0.3, 0.5, 1.0, 1.5, 4.0])
def test_batch_divergence_matches_scalar(k, alpha):
    rng = np.random.default_rng(0)
    P = rng.dirichlet(np.ones(5), size=50)
    P[::7, 2] = 0.0
    P /= P.sum(axis=1, keepdims=True)
    Q = rng.dirichlet(np.ones(5))
    Q[4] = 0.0
    Q /= Q.sum()
    got = k.batch_divergence(P, Q, alpha)
    want = np.array([relative_alpha_entropy(p, Q, alpha) for p in P])
    finite = np.isfinite(want)
    np.testing.assert_array_equal(np.isfinite(got), finite)
    np.testing.assert_allclose(got[finite], want[finite], rtol=1e-12, atol=1e-14)


def test_batch_divergence_infinities(k):
    assert k.batch_divergence([1.0, 0.0], [0.0, 1.0], 0.5)[0] == math.inf
    assert k.batch_divergence([0.5, 0.5, 0.0], [0.0, 0.0, 1.0], 2.0)[0] == math.inf
    assert math.isfinite(k.batch_divergence([0.5, 0.5, 0.0], [1.0, 0.0, 0.0], 2.0)[0])


def test_lattice_min_exhaustive(k):
    # brute force over all compositions of 12 into 3 parts
    N, alpha = 12, 2.0
    F = np.array([[1.0, -1.0, 0.5]])
    R = np.array([0.2, 0.3, 0.5])
    best, best_val = None, math.inf
    for a in range(N + 1):
        for b in range(N + 1 - a):
            c = np.array([a, b, N - a - b])
            if abs(F[0] @ c) > 0.1 * N:
                continue
            v = relative_alpha_entropy(c / N, R, alpha)
            if v < best_val:
                best, best_val = c, v
    counts, val, kept = k.lattice_min(N, F, 0.1, R, alpha)
    np.testing.assert_array_equal(counts, best)
    assert val == pytest.approx(best_val, rel=1e-12)


def test_lattice_min_empty(k):
    counts, val, kept = k.lattice_min(10, np.array([[1.0, 2.0, 3.0]]), 0.0, np.full(3, 1 / 3), 0.5)
    assert counts is None and kept == 0


def test_backends_agree_on_lattice():
    if len(BACKENDS) < 2:
        pytest.skip("compiled backend not built")
    py, cy = BACKENDS["python"], BACKENDS["cython"]
    rng = np.random.default_rng(5)
    for _ in range(10):
        n = rng.integers(3, 6)
        F = rng.normal(size=(2, n))
        R = rng.dirichlet(np.ones(n))
        alpha = rng.choice([0.5, 2.0])
        a = py.lattice_min(20, F, 0.3, R, alpha)
        b = cy.lattice_min(20, F, 0.3, R, alpha)
        assert a[2] == b[2]
        if a[0] is not None:
            np.testing.assert_array_equal(a[0], b[0])
            assert a[1] == pytest.approx(b[1], rel=1e-13)


def test_backends_agree_on_box():
    if len(BACKENDS) < 2:
        pytest.skip("compiled backend not built")
    py, cy = BACKENDS["python"], BACKENDS["cython"]
    center = np.array([0.3, 0.3, 0.2, 0.2])
    B = np.linalg.qr(np.random.default_rng(1).normal(size=(4, 2)))[0]
    R = np.array([0.1, 0.2, 0.3, 0.4])
    a = py.box_min(center, B, 0.01, 5, R, 0.5)
    b = cy.box_min(center, B, 0.01, 5, R, 0.5)
    np.testing.assert_allclose(a[0], b[0], atol=1e-15)
    np.testing.assert_array_equal(a[2], b[2])


def test_box_min_brute(k):
    center = np.array([0.3, 0.3, 0.4])
    B = np.array([[1.0], [-1.0], [0.0]]) / math.sqrt(2)
    R = np.array([0.5, 0.2, 0.3])
    P, val, z = k.box_min(center, B, 0.02, 10, R, 2.0)
    cands = [center + 0.02 * j * B[:, 0] for j in range(-10, 11)]
    vals = [relative_alpha_entropy(c, R, 2.0) if np.all(c >= 0) else math.inf for c in cands]
    j = int(np.argmin(vals))
    np.testing.assert_allclose(P, cands[j], atol=1e-15)
    assert z[0] == j - 10


@pytest.mark.parametrize("value,expected", [("1", "python"), ("0", "cython"), ("", "cython")])
def test_backend_switch(value, expected):
    import os
    import subprocess
    import sys

    env = dict(os.environ, ALPHAPROJ_PURE_PYTHON=value)
    out = subprocess.run([sys.executable, "-c", "import alphaproj; print(alphaproj.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == expected
