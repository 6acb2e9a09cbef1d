import importlib

import numpy as np
import pytest

from treecast import MinTitConfig, Mode, ResidualPanel, shrinkage_covariance
from treecast.kernels import (
    STATUS_CONVERGED,
    STATUS_DIVERGED,
    STATUS_MAXIT,
    available_backends,
)

mintit_mod = importlib.import_module("treecast.mintit")
sweep_py = importlib.import_module("treecast._sweep_py")

from conftest import fig_hierarchy, random_hierarchy


def pack_random_problem(seed, hierarchy=None):
    rng = np.random.default_rng(seed)
    h = hierarchy or fig_hierarchy()
    resid = ResidualPanel(rng.standard_normal((50, h.n_nodes)), h.labels)
    cov = shrinkage_covariance(resid)
    packed = mintit_mod._pack_subproblems(h, resid, Mode.GLOBAL, cov)
    forecasts = np.ascontiguousarray(rng.standard_normal((h.n_nodes, 3)))
    return forecasts, packed


class TestPythonKernel:
    def test_converges_and_reports_norms(self):
        forecasts, packed = pack_random_problem(0)
        work = forecasts.copy()
        status, sweeps, norms = sweep_py.run_sweeps(
            work, *packed, eps=1e-8, maxit=500
        )
        assert status == STATUS_CONVERGED
        assert len(norms) == sweeps
        assert norms[-1] < 1e-8

    def test_maxit_status(self):
        forecasts, packed = pack_random_problem(1)
        work = forecasts.copy()
        status, sweeps, norms = sweep_py.run_sweeps(
            work, *packed, eps=0.0, maxit=7
        )
        assert status == STATUS_MAXIT
        assert sweeps == 7
        assert len(norms) == 7

    def test_divergence_status(self):
        forecasts, packed = pack_random_problem(2)
        indices, offsets, mats, mat_offsets = packed
        work = 1e300 * forecasts.copy()
        status, sweeps, _ = sweep_py.run_sweeps(
            work, indices, offsets, mats * 1e20, mat_offsets, eps=0.0, maxit=50
        )
        assert status == STATUS_DIVERGED
        assert sweeps >= 1

    def test_empty_problem_converges_immediately(self):
        work = np.ones((3, 2))
        status, sweeps, norms = sweep_py.run_sweeps(
            work,
            np.empty(0, dtype=np.int64),
            np.zeros(1, dtype=np.int64),
            np.empty(0, dtype=np.float64),
            np.zeros(1, dtype=np.int64),
            eps=1e-12,
            maxit=10,
        )
        assert status == STATUS_CONVERGED
        assert sweeps == 1
        np.testing.assert_array_equal(work, np.ones((3, 2)))


@pytest.mark.skipif(
    "compiled" not in available_backends(), reason="compiled kernel not built"
)
class TestBackendAgreement:
    def test_results_match_python_twin(self):
        backends = available_backends()
        rng = np.random.default_rng(3)
        for seed in range(10):
            h = random_hierarchy(rng, max_nodes=25)
            forecasts, packed = pack_random_problem(seed, hierarchy=h)
            out = {}
            meta = {}
            for name, run in backends.items():
                work = forecasts.copy()
                meta[name] = run(work, *packed, eps=1e-10, maxit=200)
                out[name] = work
            np.testing.assert_allclose(
                out["python"], out["compiled"], rtol=1e-12, atol=1e-12
            )
            assert meta["python"][0] == meta["compiled"][0]
            assert meta["python"][1] == meta["compiled"][1]
            np.testing.assert_allclose(
                meta["python"][2], meta["compiled"][2], rtol=1e-9, atol=1e-12
            )

    def test_env_var_forces_python_backend(self):
        import subprocess
        import sys

        code = (
            "from treecast.kernels import BACKEND; print(BACKEND)"
        )
        result = subprocess.run(
            [sys.executable, "-c", code],
            capture_output=True,
            text=True,
            env={
                "PYTHONPATH": "src",
                "TREECAST_FORCE_PYTHON_KERNEL": "1",
                "PATH": "/usr/bin:/bin",
            },
        )
        assert result.stdout.strip() == "python"
