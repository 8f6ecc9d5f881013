"""Hot inner loops: trajectory evolution and cycle-walk simulation.

Two interchangeable backends:

* ``numba`` -- ``@njit``-compiled per-trial loops (default when numba imports)
* ``numpy`` -- pure-numpy fallback vectorised across trials

Selection is made once at import from the ``ASYNC_DCA_KERNELS`` environment
variable (``auto`` | ``numba`` | ``numpy``).  Both backends consume the same
pre-drawn randomness, so results agree to floating-point noise; see
``benchmarks/bench_kernels.py`` for a side-by-side comparison.
"""
from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

    def njit(*args, **kwargs):  # type: ignore
        def wrap(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return wrap


# ---------------------------------------------------------------------------
# numpy backend
# ---------------------------------------------------------------------------

def _ergodic_batch_numpy(P: np.ndarray) -> np.ndarray:
    """Ergodic coefficient of each matrix in a (T, n, n) stack."""
    n = P.shape[1]
    if n == 1:
        return np.zeros(P.shape[0])
    shared = np.minimum(P[:, :, None, :], P[:, None, :, :]).sum(axis=3)
    shared[:, np.eye(n, dtype=bool)] = np.inf
    lam = 1.0 - shared.reshape(P.shape[0], -1).min(axis=1)
    return np.clip(lam, 0.0, 1.0)


def trajectory_batch_numpy(A, masks, x0, track_lambda=True):
    A = np.ascontiguousarray(A, dtype=np.float64)
    masks = np.ascontiguousarray(masks, dtype=bool)
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    T, K, n = masks.shape
    x = x0.copy()
    deltas = np.empty((T, K + 1))
    lams = np.ones((T, K + 1))
    viol_contract = np.zeros(T)
    viol_mono = np.zeros(T)
    row_err = np.zeros(T)
    deltas[:, 0] = x.max(axis=1) - x.min(axis=1)
    d0 = deltas[:, 0]
    if track_lambda:
        P = np.broadcast_to(np.eye(n), (T, n, n)).copy()
        lams[:, 0] = _ergodic_batch_numpy(P)
    for k in range(K):
        m = masks[:, k, :]
        x = np.where(m, x @ A.T, x)
        deltas[:, k + 1] = x.max(axis=1) - x.min(axis=1)
        if track_lambda:
            P = np.where(m[:, :, None], np.matmul(A, P), P)
            lam_k = _ergodic_batch_numpy(P)
            lams[:, k + 1] = lam_k
            viol_contract = np.maximum(viol_contract, deltas[:, k + 1] - lam_k * d0)
            viol_mono = np.maximum(viol_mono, lam_k - lams[:, k])
            row_err = np.maximum(row_err, np.abs(P.sum(axis=2) - 1.0).max(axis=1))
    return deltas, lams, x, viol_contract, viol_mono, row_err


def walk_match_batch_numpy(labels, starts, uniforms, t_move_j, t_move_i, t_stay):
    labels = np.asarray(labels, dtype=np.int64)
    starts = np.asarray(starts, dtype=np.int64)
    uniforms = np.asarray(uniforms, dtype=np.float64)
    l = labels.shape[0]
    T, steps = uniforms.shape
    i = starts[:, 0].copy()
    j = starts[:, 1].copy()
    hits = np.where(labels[i] == labels[j], 1, -1).astype(np.int64)
    for k in range(steps):
        alive = hits < 0
        if not alive.any():
            break
        u = uniforms[:, k]
        move_j = alive & (u < t_move_j)
        move_i = alive & (u >= t_move_j) & (u < t_move_i)
        move_b = alive & (u >= t_stay)
        j = np.where(move_j | move_b, (j - 1) % l, j)
        i = np.where(move_i | move_b, (i - 1) % l, i)
        matched = alive & (labels[i] == labels[j])
        hits[matched] = k + 2
    return hits


# ---------------------------------------------------------------------------
# numba backend
# ---------------------------------------------------------------------------

@njit(cache=True)
def _ergodic_scalar(P):
    n = P.shape[0]
    if n == 1:
        return 0.0
    shared_min = 1.0e308
    for a in range(n):
        for b in range(a + 1, n):
            s = 0.0
            for c in range(n):
                pa = P[a, c]
                pb = P[b, c]
                s += pa if pa < pb else pb
            if s < shared_min:
                shared_min = s
    lam = 1.0 - shared_min
    if lam < 0.0:
        lam = 0.0
    elif lam > 1.0:
        lam = 1.0
    return lam


@njit(cache=True)
def _trajectory_batch_numba(A, masks, x0, track_lambda):
    T, K, n = masks.shape
    deltas = np.empty((T, K + 1))
    lams = np.ones((T, K + 1))
    xf = np.empty((T, n))
    viol_contract = np.zeros(T)
    viol_mono = np.zeros(T)
    row_err = np.zeros(T)
    for t in range(T):
        x = x0[t].copy()
        xn = np.empty(n)
        P = np.eye(n)
        Pn = np.empty((n, n))
        d0 = x.max() - x.min()
        deltas[t, 0] = d0
        if track_lambda:
            lams[t, 0] = _ergodic_scalar(P)
        for k in range(K):
            for r in range(n):
                if masks[t, k, r]:
                    s = 0.0
                    for c in range(n):
                        s += A[r, c] * x[c]
                    xn[r] = s
                    if track_lambda:
                        for c in range(n):
                            s2 = 0.0
                            for m in range(n):
                                s2 += A[r, m] * P[m, c]
                            Pn[r, c] = s2
                else:
                    xn[r] = x[r]
                    if track_lambda:
                        for c in range(n):
                            Pn[r, c] = P[r, c]
            for r in range(n):
                x[r] = xn[r]
                if track_lambda:
                    for c in range(n):
                        P[r, c] = Pn[r, c]
            dk = x.max() - x.min()
            deltas[t, k + 1] = dk
            if track_lambda:
                lk = _ergodic_scalar(P)
                lams[t, k + 1] = lk
                v = dk - lk * d0
                if v > viol_contract[t]:
                    viol_contract[t] = v
                inc = lk - lams[t, k]
                if inc > viol_mono[t]:
                    viol_mono[t] = inc
                for r in range(n):
                    rs = 0.0
                    for c in range(n):
                        rs += P[r, c]
                    e = abs(rs - 1.0)
                    if e > row_err[t]:
                        row_err[t] = e
        for r in range(n):
            xf[t, r] = x[r]
    return deltas, lams, xf, viol_contract, viol_mono, row_err


def trajectory_batch_numba(A, masks, x0, track_lambda=True):
    A = np.ascontiguousarray(A, dtype=np.float64)
    masks = np.ascontiguousarray(masks, dtype=bool)
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    return _trajectory_batch_numba(A, masks, x0, track_lambda)


@njit(cache=True)
def _walk_match_numba(labels, starts, uniforms, t_move_j, t_move_i, t_stay):
    l = labels.shape[0]
    T, steps = uniforms.shape
    hits = np.full(T, -1, dtype=np.int64)
    for t in range(T):
        i = starts[t, 0]
        j = starts[t, 1]
        if labels[i] == labels[j]:
            hits[t] = 1
            continue
        for k in range(steps):
            u = uniforms[t, k]
            if u < t_move_j:
                j = j - 1 if j > 0 else l - 1
            elif u < t_move_i:
                i = i - 1 if i > 0 else l - 1
            elif u < t_stay:
                pass
            else:
                i = i - 1 if i > 0 else l - 1
                j = j - 1 if j > 0 else l - 1
            if labels[i] == labels[j]:
                hits[t] = k + 2
                break
    return hits


def walk_match_batch_numba(labels, starts, uniforms, t_move_j, t_move_i, t_stay):
    labels = np.ascontiguousarray(labels, dtype=np.int64)
    starts = np.ascontiguousarray(starts, dtype=np.int64)
    uniforms = np.ascontiguousarray(uniforms, dtype=np.float64)
    return _walk_match_numba(labels, starts, uniforms, t_move_j, t_move_i, t_stay)


# ---------------------------------------------------------------------------
# backend selection
# ---------------------------------------------------------------------------

_BACKENDS = {
    "numpy": {
        "trajectory_batch": trajectory_batch_numpy,
        "walk_match_batch": walk_match_batch_numpy,
    },
    "numba": {
        "trajectory_batch": trajectory_batch_numba,
        "walk_match_batch": walk_match_batch_numba,
    },
}


def _select_backend() -> str:
    choice = os.environ.get("ASYNC_DCA_KERNELS", "auto").strip().lower()
    if choice in ("", "auto"):
        return "numba" if HAS_NUMBA else "numpy"
    if choice not in _BACKENDS:
        raise RuntimeError(
            f"ASYNC_DCA_KERNELS={choice!r}: expected 'auto', 'numba' or 'numpy'"
        )
    if choice == "numba" and not HAS_NUMBA:
        raise RuntimeError("ASYNC_DCA_KERNELS=numba but numba is not importable")
    return choice


_BACKEND = _select_backend()


def backend_name() -> str:
    return _BACKEND


def get_backend(name: str | None = None) -> dict:
    """Kernel table for an explicit backend (used by tests and benchmarks)."""
    return _BACKENDS[name or _BACKEND]


def trajectory_batch(A, masks, x0, track_lambda=True):
    """Evolve a batch of asynchronous-update trajectories.

    Parameters
    ----------
    A : (n, n) row-stochastic coupling matrix.
    masks : (T, K, n) bool; ``masks[t, k, i]`` is True when agent ``i+1``
        updates at step ``k+1`` of trial ``t``.
    x0 : (T, n) initial states.
    track_lambda : also accumulate the left product and its ergodic
        coefficient (skipping it roughly halves the cost of long runs).

    Returns
    -------
    deltas : (T, K+1) max-minus-min discrepancy after each step.
    lams : (T, K+1) ergodic coefficient of the accumulated product
        (all ones when ``track_lambda`` is off).
    x_final : (T, n) final states.
    viol_contract : (T,) max over k of ``delta_k - lam_k * delta_0``.
    viol_mono : (T,) max over k of ``lam_k - lam_{k-1}``.
    row_err : (T,) max row-sum error of the accumulated product.
    """
    return _BACKENDS[_BACKEND]["trajectory_batch"](A, masks, x0, track_lambda)


def walk_match_batch(labels, starts, uniforms, t_move_j, t_move_i, t_stay):
    """First label-match times for a batch of backward cycle walks.

    ``labels`` maps 0-based cycle positions to labels; ``starts`` is (T, 2)
    0-based initial positions; ``uniforms`` is (T, k_max - 1) pre-drawn
    uniforms, one per transition.  Thresholds partition [0, 1) into the four
    moves: j steps back, i steps back, both stay, both step back.  Returns
    (T,) first times (1-based) at which the two labels coincide, -1 if never
    within the horizon.
    """
    return _BACKENDS[_BACKEND]["walk_match_batch"](
        labels, starts, uniforms, t_move_j, t_move_i, t_stay
    )
