"""Independent oracle implementations the library code must agree with.

Everything here is written as plain loops or brute-force enumeration, on
purpose: these are the reference answers, kept free of the library's own
shortcuts.
"""
from itertools import product

import numpy as np


def half_l1_coefficient(A):
    """(1/2) max over row pairs of the L1 distance between the rows."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if n == 1:
        return 0.0
    worst = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            worst = max(worst, 0.5 * float(np.abs(A[i] - A[j]).sum()))
    return worst


def pairwise_min_coefficient(A):
    """1 - min over row pairs of the summed entrywise minima, by plain loops."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if n == 1:
        return 0.0
    best = float("inf")
    for i in range(n):
        for j in range(i + 1, n):
            s = 0.0
            for c in range(n):
                s += min(A[i, c], A[j, c])
            best = min(best, s)
    return 1.0 - best


def rows_share_support(A):
    """Scrambling oracle: every pair of rows has a commonly positive column."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            if not ((A[i] > 0) & (A[j] > 0)).any():
                return False
    return True


def zero_one_discrepancy_sup(A):
    """max of Delta(Ax) over nonconstant 0/1 vectors x (Delta(x) = 1)."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    best = 0.0
    for bits in product((0.0, 1.0), repeat=n):
        if len(set(bits)) < 2:
            continue
        y = A @ np.array(bits)
        best = max(best, float(y.max() - y.min()))
    return best


def power_sia_oracle(A, squarings=20):
    """SIA by power iteration: the coefficient of A^(2^m) either collapses
    toward 0 (powers converge to rank one) or sticks at exactly 1 (some pair
    of rows keeps disjoint support forever, as under periodicity or multiple
    closed classes).  Raises if the sample is ambiguous.
    """
    B = np.asarray(A, dtype=float).copy()
    for _ in range(squarings):
        if half_l1_coefficient(B) < 1.0 - 1e-6:
            return True
        B = B @ B
    lam = half_l1_coefficient(B)
    if lam < 1.0 - 1e-6:
        return True
    if lam > 1.0 - 1e-9:
        return False
    raise AssertionError(f"power oracle undecided: coefficient {lam}")


def bfs_reachable(n, edges, start):
    adj = {u: [] for u in range(1, n + 1)}
    for u, v in edges:
        adj[u].append(v)
    seen = {start}
    queue = [start]
    while queue:
        u = queue.pop()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def bfs_roots(n, edges):
    """Roots by brute force: BFS from every node."""
    full = set(range(1, n + 1))
    return {r for r in full if bfs_reachable(n, edges, r) == full}
