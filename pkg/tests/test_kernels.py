"""The compiled kernels and the pure-Python fallback must agree."""

import numpy as np
import pytest

from oracles import leibniz_det, partitions_up_to
from schurfit import _kernels_py, kernels
from schurfit.schur import _strip_graph

compiled = pytest.importorskip("schurfit._kernels")


def test_backend_is_reported():
    assert kernels.BACKEND in {"cython", "python"}


def test_fallback_is_forced_by_env(monkeypatch):
    import importlib

    monkeypatch.setenv("SCHURFIT_PURE_PYTHON", "1")
    mod = importlib.reload(kernels)
    try:
        assert mod.BACKEND == "python"
        assert mod.det is _kernels_py.det
    finally:
        monkeypatch.delenv("SCHURFIT_PURE_PYTHON")
        importlib.reload(kernels)


@pytest.mark.parametrize("parts", list(partitions_up_to(7, 4)))
def test_strip_sum_backends_agree(parts):
    rng = np.random.default_rng(sum(parts))
    graph = _strip_graph(parts)
    for _ in range(5):
        pts = rng.uniform(-2, 2, len(parts))
        a = compiled.strip_sum(*graph, pts, parts[0])
        b = _kernels_py.strip_sum(*graph, pts, parts[0])
        assert a == b


@pytest.mark.parametrize("k", range(0, 8))
def test_det_backends_agree(k):
    rng = np.random.default_rng(k)
    for _ in range(10):
        a = rng.normal(size=(k, k))
        assert compiled.det(a) == _kernels_py.det(a)
        if 0 < k <= 6:
            assert compiled.det(a) == pytest.approx(leibniz_det(a), rel=1e-11, abs=1e-13)


def test_det_singular_pivot():
    a = np.zeros((5, 5))
    assert compiled.det(a) == _kernels_py.det(a) == 0.0


def test_det_rejects_rectangular():
    for impl in (compiled, _kernels_py):
        with pytest.raises(ValueError):
            impl.det(np.ones((2, 3)))


@pytest.mark.parametrize("parts", list(partitions_up_to(8, 6)))
def test_bialternant_backends_agree(parts):
    k = len(parts)
    exps = np.array([lam + k - 1 - i for i, lam in enumerate(parts)], dtype=np.float64)
    rng = np.random.default_rng(sum(parts) * 11 + k)
    for _ in range(5):
        pts = rng.uniform(-2, 2, k)
        assert compiled.bialternant(exps, pts) == _kernels_py.bialternant(exps, pts)


def test_bialternant_rejects_length_mismatch():
    for impl in (compiled, _kernels_py):
        with pytest.raises(ValueError):
            impl.bialternant(np.array([1.0, 0.0]), np.array([1.0, 2.0, 3.0]))
