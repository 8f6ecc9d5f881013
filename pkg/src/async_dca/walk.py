"""Backward random walks along a labelled cycle and their geometric bounds.

Two tokens sit on a directed cycle and, while their labels differ, each
step either moves one of them to its cycle predecessor, moves both, or
leaves both in place; each single-token move must carry probability at
least ``gamma`` and the stay-or-move-both alternative at least ``gamma``
combined.  Once the labels coincide the pair freezes.

The distance between the tokens then performs a birth/death chain on
``{0, .., l-1}`` with an absorbing 0.  Its transition matrix dominates a
fixed band matrix ``W`` entrywise, and any column-stochastic sequence that
dominates ``W`` (with the same sign pattern) converges geometrically to
the absorbing state, which yields the certified lower bound
``P(match by k) >= 1 - c0 * beta^k`` used throughout.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DimensionError, ValidationError
from .graphs import LabelledCycle, build_graph, roots
from .matrices import ColumnStochasticMatrix
from .rng import stream

GAMMA_MAX = 1.0 / 3.0


def cycle_distance(cycle: LabelledCycle, i: int, j: int) -> int:
    """Steps from position i to position j along the cycle direction.

    Satisfies d(i, i) = 0, 0 <= d <= l-1, and d(i, j) + d(j, i) = l for
    distinct positions.
    """
    cycle._check_position(i)
    cycle._check_position(j)
    return (j - i) % cycle.length


def _check_gamma(gamma: float) -> float:
    if not 0.0 < gamma <= GAMMA_MAX:
        raise ValidationError(f"gamma must lie in (0, 1/3], got {gamma}")
    return float(gamma)


def lower_bound_matrix(l: int, gamma: float) -> np.ndarray:
    """Entrywise lower bound for the distance chain of an l-cycle walk.

    Column d is the distribution of the next distance given the current
    one: column 0 is absorbing; every other column carries ``gamma`` on
    staying, on stepping down (reaching 0 from distance 1), and on stepping
    up (wrapping to 0 from distance l-1).  The transpose's graph is rooted
    with node 1 as the unique, self-looped root.
    """
    if l < 2:
        raise ValidationError("the distance chain needs l >= 2")
    gamma = _check_gamma(gamma)
    W = np.zeros((l, l))
    W[0, 0] = 1.0
    W[0, 1] = gamma
    W[0, l - 1] = gamma
    for d in range(1, l):
        W[d, d] = gamma
    for d in range(1, l - 1):
        W[d + 1, d] = gamma
    for d in range(2, l):
        W[d - 1, d] = gamma
    return W


def uniform_completion(W: np.ndarray) -> ColumnStochasticMatrix:
    """Admissible chain obtained by normalising each column's support."""
    arr = np.asarray(W, dtype=np.float64)
    support = (arr > 0).astype(np.float64)
    sums = support.sum(axis=0)
    if (sums == 0).any():
        raise ValidationError("every column of W needs at least one positive entry")
    return ColumnStochasticMatrix(support / sums)


@dataclass(frozen=True, eq=False)
class RateCertificate:
    """Certified envelope ||P_k ... P_1 - e1 1^T||_max <= c0 * beta^k."""

    c0: float
    beta: float
    errors: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.errors, dtype=np.float64).copy()
        arr.setflags(write=False)
        object.__setattr__(self, "errors", arr)


def _fit_envelope(errors: np.ndarray) -> tuple:
    ks = np.arange(1, len(errors) + 1)
    positive = errors > 0
    if not positive.any():
        return 0.0, 0.5
    tail = positive & (ks >= max(2, len(errors) // 2))
    if tail.sum() >= 2:
        slope = np.polyfit(ks[tail], np.log(errors[tail]), 1)[0]
        beta = float(np.exp(slope))
    else:
        ratios = errors[1:][positive[1:] & positive[:-1]] / errors[:-1][positive[1:] & positive[:-1]]
        beta = float(ratios.max()) if ratios.size else 0.5
    if not beta < 1.0:
        raise ValidationError(f"no geometric decay detected (fitted rate {beta})")
    beta = min(max(beta, 1e-12), 1.0 - 1e-12)
    c0 = float((errors[positive] / beta ** ks[positive]).max())
    return c0, beta


def product_convergence_rate(p_seq, W) -> RateCertificate:
    """Fit and verify a geometric envelope for left products of chains.

    Every matrix must dominate ``W`` entrywise, carry the same sign pattern,
    and be column stochastic; ``W`` transposed must be rooted with node 1
    as its unique, self-looped root.  The returned pair satisfies
    ``errors[k-1] <= c0 * beta**k`` for every prefix length k supplied.
    """
    Warr = np.asarray(W, dtype=np.float64)
    if Warr.ndim != 2 or Warr.shape[0] != Warr.shape[1]:
        raise DimensionError(f"W must be square, got shape {Warr.shape}")
    if (Warr < 0).any():
        raise ValidationError("W must be entrywise nonnegative")
    rep = roots(build_graph(Warr.T))
    if not (rep.rooted and rep.roots == frozenset({1}) and Warr[0, 0] > 0):
        raise ValidationError(
            "W^T's graph must be rooted with node 1 as the unique self-looped root"
        )
    l = Warr.shape[0]
    mats = []
    for idx, P in enumerate(p_seq):
        arr = P.entries if isinstance(P, ColumnStochasticMatrix) else np.asarray(P, np.float64)
        ColumnStochasticMatrix(arr, tol=1e-9)
        if arr.shape != Warr.shape:
            raise DimensionError(f"matrix {idx + 1} has shape {arr.shape}, W has {Warr.shape}")
        if (arr < Warr - 1e-12).any():
            raise ValidationError(f"matrix {idx + 1} drops below the lower bound W")
        if ((arr > 0) != (Warr > 0)).any():
            raise ValidationError(f"matrix {idx + 1} is not of the same type as W")
        mats.append(arr)
    if not mats:
        raise ValidationError("need at least one matrix")
    target = np.zeros((l, l))
    target[0, :] = 1.0
    prod = np.eye(l)
    errors = np.empty(len(mats))
    for k, arr in enumerate(mats):
        prod = arr @ prod
        errors[k] = np.abs(prod - target).max()
    c0, beta = _fit_envelope(errors)
    return RateCertificate(c0=c0, beta=beta, errors=errors)


def default_move_probabilities(gamma: float) -> tuple:
    """(move j, move i, stay, move both); the residual splits evenly."""
    gamma = _check_gamma(gamma)
    residual = 1.0 - 2.0 * gamma
    return (gamma, gamma, residual / 2.0, residual / 2.0)


def _check_move_probabilities(gamma: float, move_probs) -> tuple:
    gamma = _check_gamma(gamma)
    if move_probs is None:
        move_probs = default_move_probabilities(gamma)
    p = tuple(float(v) for v in move_probs)
    if len(p) != 4 or any(v < 0 for v in p):
        raise ValidationError("move probabilities are 4 nonnegative numbers")
    if abs(sum(p) - 1.0) > 1e-12:
        raise ValidationError(f"move probabilities sum to {sum(p)!r}, not 1")
    if p[0] < gamma - 1e-12 or p[1] < gamma - 1e-12 or p[2] + p[3] < gamma - 1e-12:
        raise ValidationError(
            "each single move needs probability >= gamma and stay-or-move-both "
            "needs combined probability >= gamma"
        )
    return p


@dataclass(frozen=True, eq=False)
class DistanceChain:
    """Exact distance chain of a walk with the given move probabilities."""

    l: int
    gamma: float
    move_probs: tuple
    matrix: ColumnStochasticMatrix

    @classmethod
    def for_walk(cls, l: int, gamma: float, move_probs=None) -> "DistanceChain":
        if l < 2:
            raise ValidationError("the distance chain needs l >= 2")
        p_j, p_i, p_stay, p_both = _check_move_probabilities(gamma, move_probs)
        P = np.zeros((l, l))
        P[0, 0] = 1.0
        for d in range(1, l):
            down = d - 1
            up = d + 1 if d < l - 1 else 0
            P[down, d] += p_j
            P[up, d] += p_i
            P[d, d] += p_stay + p_both
        return cls(l=l, gamma=float(gamma), move_probs=(p_j, p_i, p_stay, p_both),
                   matrix=ColumnStochasticMatrix(P))

    def evolve(self, xi1, steps: int) -> np.ndarray:
        """Distribution trajectory: row m is xi after m transitions."""
        xi = np.asarray(xi1, dtype=np.float64)
        if xi.shape != (self.l,):
            raise DimensionError(f"xi1 must have length {self.l}")
        if (xi < 0).any() or abs(xi.sum() - 1.0) > 1e-12:
            raise ValidationError("xi1 must be a probability vector")
        out = np.empty((steps + 1, self.l))
        out[0] = xi
        for m in range(steps):
            out[m + 1] = self.matrix.entries @ out[m]
        return out

    def rate_certificate(self, k_max: int) -> RateCertificate:
        W = lower_bound_matrix(self.l, self.gamma)
        return product_convergence_rate([self.matrix] * k_max, W)


@dataclass(frozen=True, eq=False)
class WalkTrajectory:
    """Recorded (i_k, j_k) positions, 1-based, and the first label-match time."""

    positions: np.ndarray
    hit_time: int | None

    def __post_init__(self):
        arr = np.asarray(self.positions, dtype=np.int64).copy()
        arr.setflags(write=False)
        object.__setattr__(self, "positions", arr)

    @property
    def matched(self) -> bool:
        return self.hit_time is not None


def simulate_backward_walk(cycle: LabelledCycle, gamma: float, k_max: int, rng,
                           i1: int | None = None, j1: int | None = None,
                           move_probs=None) -> WalkTrajectory:
    """Run one walk until the labels match or ``k_max`` steps have passed.

    Starting positions default to uniform draws.  The trajectory records the
    positions up to and including the match (the pair is frozen afterwards).
    """
    p = _check_move_probabilities(gamma, move_probs)
    l = cycle.length
    if i1 is None or j1 is None:
        start = rng.integers(0, l, size=2)
        i = int(start[0]) + 1 if i1 is None else int(i1)
        j = int(start[1]) + 1 if j1 is None else int(j1)
    else:
        i, j = int(i1), int(j1)
    cycle._check_position(i)
    cycle._check_position(j)
    t1, t2, t3 = p[0], p[0] + p[1], p[0] + p[1] + p[2]
    positions = [(i, j)]
    hit = 1 if cycle.label(i) == cycle.label(j) else None
    k = 1
    while hit is None and k < k_max:
        u = rng.random()
        if u < t1:
            j = cycle.predecessor(j)
        elif u < t2:
            i = cycle.predecessor(i)
        elif u < t3:
            pass
        else:
            i = cycle.predecessor(i)
            j = cycle.predecessor(j)
        k += 1
        positions.append((i, j))
        if cycle.label(i) == cycle.label(j):
            hit = k
    return WalkTrajectory(positions=np.array(positions, dtype=np.int64), hit_time=hit)


@dataclass(frozen=True, eq=False)
class MatchCurve:
    """Empirical match probabilities against the certified lower bound.

    ``bound[k-1] = 1 - c0 * beta**k`` where (c0, beta) absorb the one-step
    offset between the walk clock (positions exist from time 1) and the
    number of transitions applied.
    """

    k: np.ndarray
    empirical: np.ndarray
    bound: np.ndarray
    c0: float
    beta: float
    hits: np.ndarray

    def to_rows(self):
        for idx in range(len(self.k)):
            yield int(self.k[idx]), float(self.empirical[idx]), float(self.bound[idx])


def match_probability_curve(cycle: LabelledCycle, gamma: float, k_max: int,
                            trials: int, seed: int, move_probs=None) -> MatchCurve:
    """Monte Carlo match-by-k curve with its distance-chain lower bound.

    Each trial runs on its own substream of ``seed``; starting positions are
    uniform and independent.  The empirical curve is cumulative, hence
    non-decreasing, and dominates the bound whenever the walk's moves meet
    the ``gamma`` floors.
    """
    if trials < 1 or k_max < 1:
        raise ValidationError("need trials >= 1 and k_max >= 1")
    p = _check_move_probabilities(gamma, move_probs)
    l = cycle.length
    labels = np.array(cycle.labels, dtype=np.int64)
    starts = np.empty((trials, 2), dtype=np.int64)
    uniforms = np.empty((trials, max(k_max - 1, 0)))
    for t in range(trials):
        rng = stream(seed, t)
        starts[t] = rng.integers(0, l, size=2)
        uniforms[t] = rng.random(max(k_max - 1, 0))
    t1, t2, t3 = p[0], p[0] + p[1], p[0] + p[1] + p[2]
    hits = _kernels.walk_match_batch(labels, starts, uniforms, t1, t2, t3)

    counts = np.bincount(hits[hits > 0], minlength=k_max + 1)
    empirical = np.cumsum(counts)[1:] / trials

    chain = DistanceChain.for_walk(l, gamma, move_probs)
    cert = chain.rate_certificate(k_max)
    c0 = cert.c0 / cert.beta if cert.c0 > 0 else 0.0
    ks = np.arange(1, k_max + 1)
    bound = 1.0 - c0 * cert.beta ** ks
    return MatchCurve(k=ks, empirical=empirical, bound=bound,
                      c0=c0, beta=cert.beta, hits=hits)
