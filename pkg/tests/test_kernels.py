import subprocess
import sys

import numpy as np
import pytest

from async_dca import _kernels
from async_dca import (
    StochasticMatrix,
    ergodic_coefficient,
    initial_state,
    max_discrepancy,
    step,
    stream,
)
from _samplers import random_stochastic

BACKENDS = ["numpy"] + (["numba"] if _kernels.HAS_NUMBA else [])


def _random_inputs(seed, trials=6, steps=40, n=5):
    rng = np.random.default_rng(seed)
    A = random_stochastic(rng, n)
    masks = rng.random((trials, steps, n)) < 0.4
    x0 = rng.uniform(-1.0, 1.0, (trials, n))
    return A, masks, x0


def test_backends_agree_on_trajectories():
    if len(BACKENDS) < 2:
        pytest.skip("numba unavailable")
    A, masks, x0 = _random_inputs(1)
    out_np = _kernels.get_backend("numpy")["trajectory_batch"](A, masks, x0, True)
    out_nb = _kernels.get_backend("numba")["trajectory_batch"](A, masks, x0, True)
    for a, b in zip(out_np, out_nb):
        assert np.allclose(a, b, atol=1e-12, rtol=0)


def test_backends_agree_on_walks():
    if len(BACKENDS) < 2:
        pytest.skip("numba unavailable")
    rng = np.random.default_rng(2)
    labels = np.array([1, 2, 4, 3, 2, 4])
    starts = rng.integers(0, 6, (300, 2))
    uniforms = rng.random((300, 99))
    args = (labels, starts, uniforms, 0.2, 0.4, 0.7)
    hits_np = _kernels.get_backend("numpy")["walk_match_batch"](*args)
    hits_nb = _kernels.get_backend("numba")["walk_match_batch"](*args)
    assert np.array_equal(hits_np, hits_nb)


@pytest.mark.parametrize("backend", BACKENDS)
def test_trajectory_kernel_matches_engine(backend):
    # the per-step engine is an independent implementation of the same
    # dynamics; the kernel must reproduce its deltas and coefficients
    A_arr, masks, x0 = _random_inputs(3, trials=4, steps=25, n=4)
    kern = _kernels.get_backend(backend)["trajectory_batch"]
    deltas, lams, x_final, viol_c, viol_m, row_err = kern(A_arr, masks, x0, True)
    A = StochasticMatrix(A_arr)
    for t in range(masks.shape[0]):
        state = initial_state(x0[t])
        assert deltas[t, 0] == pytest.approx(max_discrepancy(x0[t]), abs=1e-12)
        for k in range(masks.shape[1]):
            members = frozenset(int(j) + 1 for j in np.nonzero(masks[t, k])[0])
            state = step(state, A, members)
            assert deltas[t, k + 1] == pytest.approx(state.delta(), abs=1e-9)
            assert lams[t, k + 1] == pytest.approx(
                ergodic_coefficient(state.product), abs=1e-9
            )
        assert np.allclose(x_final[t], state.x, atol=1e-9)
    assert viol_c.max() <= 1e-9
    assert viol_m.max() <= 1e-10
    assert row_err.max() <= 1e-10


@pytest.mark.parametrize("backend", BACKENDS)
def test_trajectory_kernel_lambda_off(backend):
    A, masks, x0 = _random_inputs(4)
    kern = _kernels.get_backend(backend)["trajectory_batch"]
    full = kern(A, masks, x0, True)
    lean = kern(A, masks, x0, False)
    assert np.array_equal(full[0], lean[0])  # same deltas
    assert (lean[1] == 1.0).all()


@pytest.mark.parametrize("backend", BACKENDS)
def test_walk_kernel_respects_initial_matches(backend):
    labels = np.array([1, 2, 1, 2])
    starts = np.array([[0, 2], [0, 1], [1, 1]])
    uniforms = np.full((3, 10), 0.99)  # always move both: distance never changes
    kern = _kernels.get_backend(backend)["walk_match_batch"]
    hits = kern(labels, starts, uniforms, 0.2, 0.4, 0.7)
    assert hits[0] == 1          # labels equal at start
    assert hits[1] == -1         # odd distance on alternating labels never matches
    assert hits[2] == 1          # identical positions


def test_env_flag_selects_backend():
    code = "import async_dca; print(async_dca.backend_name())"
    for choice in BACKENDS:
        out = subprocess.run(
            [sys.executable, "-c", code],
            capture_output=True, text=True,
            env={"ASYNC_DCA_KERNELS": choice, "PATH": "/usr/bin:/bin"},
        )
        assert out.stdout.strip() == choice, out.stderr
    bad = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True, text=True,
        env={"ASYNC_DCA_KERNELS": "cuda", "PATH": "/usr/bin:/bin"},
    )
    assert bad.returncode != 0
    assert "ASYNC_DCA_KERNELS" in bad.stderr


def test_default_backend_prefers_numba():
    if not _kernels.HAS_NUMBA:
        pytest.skip("numba unavailable")
    assert _kernels.backend_name() in ("numba", "numpy")
