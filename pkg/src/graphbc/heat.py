"""Graph heat equation: direct solver, occupation probabilities, ``U^f`` and ``Lambda``.

Sources ``f`` live on ``Z_T x B`` and are stored as arrays of shape
``(T, |B|)``; they are read as zero outside that set. Trajectories are
arrays of shape ``(2T, n)`` indexed by time ``0 .. 2T-1``. Vectorisation
is time-major: entry ``t * |B| + b`` of a flattened source is ``f(t, b)``.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

from .fpt import FptTensor
from .graph import Graph, laplacian_matrix

__all__ = [
    "direct_heat_solve",
    "terminal_map_matrix",
    "occupation_naive",
    "occupation_renewal",
    "assemble_Uf",
    "uf_nested",
    "trajectory_matrix",
    "assemble_lambda",
]


def _check_source(f: np.ndarray, T: int, nb: int) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != (T, nb):
        raise ValueError(f"source has shape {f.shape}, expected {(T, nb)}")
    return f


def direct_heat_solve(g: Graph, f: np.ndarray, T: int) -> np.ndarray:
    """Explicit solve of ``U(t+1) = U(t) + Lap U(t) + f(t)``, ``U(0) = 0``.

    Needs the full ``mu``; used as the reference solver. Returns ``U`` on
    ``Z_{2T} x X``.
    """
    f = _check_source(f, T, g.n_boundary)
    step = np.eye(g.n) + laplacian_matrix(g)
    u = np.zeros((2 * T, g.n))
    for t in range(2 * T - 1):
        u[t + 1] = step @ u[t]
        if t < T:
            u[t + 1, g.boundary] += f[t]
    return u


def terminal_map_matrix(g: Graph, T: int) -> np.ndarray:
    """``[W]``: the ``|X| x T|B|`` matrix of ``f -> U^f(T)`` from the direct solver."""
    nb = g.n_boundary
    cols = []
    for k in range(T * nb):
        e = np.zeros(T * nb)
        e[k] = 1.0
        cols.append(direct_heat_solve(g, e.reshape(T, nb), T)[T])
    return np.column_stack(cols)


def occupation_naive(r: FptTensor, t: int, x: int, y: int) -> float:
    """``P(H_t^x = y)`` by summing over all visit-time sequences ending at ``t``.

    Literal evaluation of the decomposition by the times ``t_1 < ... < t_j = t``
    at which the walk is at ``y``; the number of terms is ``2^(t-1)``.
    """
    if not 1 <= t <= 2 * r.T - 1:
        raise ValueError(f"t={t} outside 1..{2 * r.T - 1}")
    total = r.entry(t, x, y)
    for j in range(2, t + 1):
        for inner in combinations(range(1, t), j - 1):
            times = inner + (t,)
            term = r.entry(times[0], x, y)
            for a, b in zip(times, times[1:]):
                term *= r.entry(b - a, y, y)
            total += term
    return total


def occupation_renewal(r: FptTensor, horizon: int | None = None) -> np.ndarray:
    """Occupation probabilities ``u[t, i, j] = P(H_t^{x_i} = y_j)`` for ``t < horizon``.

    Uses the first-visit renewal equation
    ``u(t) = r(t, x, y) + sum_{s=1}^{t-1} u(s) r(t-s, y, y)`` with
    ``u(0) = [x == y]``. Every target must also be a source. ``horizon``
    defaults to ``2T``.
    """
    horizon = 2 * r.T if horizon is None else horizon
    if horizon > 2 * r.T:
        raise ValueError("horizon exceeds the range of the passage data")
    try:
        diag_rows = [r.sources.index(y) for y in r.targets]
    except ValueError as exc:
        raise ValueError("every target must also be a source") from exc
    nt = len(r.targets)
    ret = r.r[:, diag_rows, np.arange(nt)]  # ret[t-1, j] = r(t, y_j, y_j)
    u = np.zeros((horizon, len(r.sources), nt))
    u[0] = np.array([[float(s == y) for y in r.targets] for s in r.sources])
    for t in range(1, horizon):
        acc = r.r[t - 1].copy()
        for s in range(1, t):
            acc += u[s] * ret[t - s - 1]
        u[t] = acc
    return u


def _require_square(r: FptTensor):
    if r.sources != r.targets:
        raise ValueError("passage data must be on B x B with matching orderings")


def assemble_Uf(r: FptTensor, f: np.ndarray) -> np.ndarray:
    """``U^f`` on ``Z_{2T} x B`` from the passage data on ``B x B``.

    ``U(t, x) = sum_{s=1}^{t} sum_y f(s-1, y) u_y(t-s, x)``.
    """
    _require_square(r)
    T = r.T
    f = _check_source(f, T, len(r.sources))
    u = occupation_renewal(r)
    out = np.zeros((2 * T, len(r.sources)))
    for t in range(1, 2 * T):
        for s in range(1, min(t, T) + 1):
            out[t] += u[t - s] @ f[s - 1]
    return out


def uf_nested(r: FptTensor, f: np.ndarray, t: int, x: int) -> float:
    """``U^f(t, x)`` by the closed nested-sum formula (exponential cost)."""
    _require_square(r)
    T = r.T
    f = _check_source(f, T, len(r.sources))
    B = r.sources
    xi = B.index(x)

    def src(s, yi):
        return f[s, yi] if 0 <= s < T else 0.0

    if t == 0:
        return 0.0
    if t == 1:
        return float(src(0, xi))
    total = sum(src(t - 2, yi) * r.entry(1, x, y) for yi, y in enumerate(B))
    for s in range(1, t - 1):
        for yi, y in enumerate(B):
            total += src(s - 1, yi) * occupation_naive(r, t - s, x, y)
    return float(total + src(t - 1, xi))


def trajectory_matrix(r: FptTensor) -> np.ndarray:
    """``2T|B| x T|B|`` matrix whose column ``k`` is the flattened ``U^{e_k}``.

    Block ``(t, s)`` is the occupation matrix ``u(t - s - 1)`` for ``t > s``
    and zero otherwise.
    """
    _require_square(r)
    T, nb = r.T, len(r.sources)
    u = occupation_renewal(r)
    m = np.zeros((2 * T * nb, T * nb))
    for t in range(1, 2 * T):
        for s in range(min(t, T)):
            m[t * nb : (t + 1) * nb, s * nb : (s + 1) * nb] = u[t - s - 1]
    return m


def assemble_lambda(r: FptTensor) -> np.ndarray:
    """Source-to-solution map ``f -> U^f|_{Z_T x B}`` as a ``T|B| x T|B|`` matrix."""
    nb = len(r.sources)
    return trajectory_matrix(r)[: r.T * nb]
