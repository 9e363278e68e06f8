"""Weighted graph model, Laplacian, inner products and harmonic functions.

Vertices are stored interior-first: indices ``0 .. n_interior-1`` are the
unobserved vertices ``X \\ B`` and the remaining ``|B|`` indices are the
observation set ``B``. Every matrix and vector in the package uses this
ordering.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from os import PathLike
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .numerics import NumericError, singular_values, sym_eigen

__all__ = [
    "GraphError",
    "Graph",
    "AssumptionReport",
    "load_graph",
    "graph_to_dict",
    "dump_graph",
    "combinatorial_laplacian",
    "laplacian_matrix",
    "laplacian_apply",
    "weighted_inner_product",
    "transition_kernel",
    "check_assumptions",
    "harmonic_residual",
    "solve_dirichlet",
    "harmonic_basis",
    "boundary_laplacian",
]


class GraphError(ValueError):
    """Invalid graph document or a graph violating the model assumptions."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Graph:
    """Finite, simple, undirected, connected weighted graph with observation set.

    Parameters
    ----------
    ids : tuple of str
        Vertex identifiers, interior vertices first, then the observation set.
    weights : ndarray, shape (n, n)
        Symmetric edge weights, zero where there is no edge.
    mu : ndarray, shape (n,)
        Vertex centrality; ``nan`` marks an unknown value.
    n_interior : int
        Number of unobserved vertices.
    T : int or None
        Optional horizon carried along from the graph document.
    """

    ids: tuple[str, ...]
    weights: np.ndarray
    mu: np.ndarray
    n_interior: int
    T: int | None = None
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "weights", _frozen(self.weights))
        object.__setattr__(self, "mu", _frozen(self.mu))
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "_index", {v: i for i, v in enumerate(self.ids)})
        self._validate()

    def _validate(self):
        n = len(self.ids)
        w = self.weights
        if len(self._index) != n:
            raise GraphError("duplicate vertex id")
        if w.shape != (n, n) or self.mu.shape != (n,):
            raise GraphError("weights/mu shape does not match vertex count")
        if not 0 <= self.n_interior < n:
            raise GraphError("observation set B must be nonempty")
        if np.any(np.diag(w) != 0):
            raise GraphError("self-loop")
        if not np.array_equal(w, w.T):
            raise GraphError("edge weights are not symmetric")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise GraphError("non-positive weight")
        known = ~np.isnan(self.mu)
        if np.any(self.mu[known] <= 0) or np.any(np.isinf(self.mu)):
            raise GraphError("vertex centrality must be positive")
        if not _connected(w):
            raise GraphError("disconnected graph")

    @classmethod
    def from_edges(
        cls,
        vertices: Sequence[str],
        edges: Iterable[tuple[str, str, float]],
        boundary: Sequence[str],
        mu: Mapping[str, float | None] | Sequence[float | None] | None = None,
        T: int | None = None,
    ) -> "Graph":
        """Build a graph, reordering vertices so that the interior comes first.

        ``boundary`` fixes the order of ``B``; interior vertices keep the order
        in which they appear in ``vertices``.
        """
        vertices = [str(v) for v in vertices]
        boundary = [str(b) for b in boundary]
        if not boundary:
            raise GraphError("observation set B must be nonempty")
        vset = set(vertices)
        if len(vset) != len(vertices):
            raise GraphError("duplicate vertex id")
        missing = [b for b in boundary if b not in vset]
        if missing:
            raise GraphError(f"boundary vertex not in X: {missing}")
        if len(set(boundary)) != len(boundary):
            raise GraphError("duplicate boundary vertex")
        bset = set(boundary)
        order = [v for v in vertices if v not in bset] + boundary
        index = {v: i for i, v in enumerate(order)}
        n = len(order)
        w = np.zeros((n, n))
        for u, v, wt in edges:
            u, v = str(u), str(v)
            if u not in index or v not in index:
                raise GraphError(f"edge ({u}, {v}) references an unknown vertex")
            if u == v:
                raise GraphError(f"self-loop at {u}")
            wt = float(wt)
            if not wt > 0 or not np.isfinite(wt):
                raise GraphError(f"non-positive weight on edge ({u}, {v})")
            i, j = index[u], index[v]
            if w[i, j] != 0:
                raise GraphError(f"multi-edge between {u} and {v}")
            w[i, j] = w[j, i] = wt
        if mu is None:
            m = np.full(n, np.nan)
        elif isinstance(mu, Mapping):
            m = np.array([np.nan if mu.get(v) is None else float(mu[v]) for v in order])
        else:
            given = dict(zip(vertices, mu))
            m = np.array([np.nan if given[v] is None else float(given[v]) for v in order])
        return cls(tuple(order), w, m, n - len(boundary), T)

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def n_boundary(self) -> int:
        return self.n - self.n_interior

    @property
    def interior(self) -> slice:
        return slice(0, self.n_interior)

    @property
    def boundary(self) -> slice:
        return slice(self.n_interior, self.n)

    @property
    def interior_ids(self) -> tuple[str, ...]:
        return self.ids[: self.n_interior]

    @property
    def boundary_ids(self) -> tuple[str, ...]:
        return self.ids[self.n_interior :]

    @property
    def mu_boundary(self) -> np.ndarray:
        return self.mu[self.boundary]

    @property
    def mu_known(self) -> bool:
        return not np.any(np.isnan(self.mu))

    @property
    def degree(self) -> np.ndarray:
        return np.count_nonzero(self.weights, axis=1)

    @property
    def edges(self) -> list[tuple[str, str, float]]:
        iu, ju = np.nonzero(np.triu(self.weights))
        return [(self.ids[i], self.ids[j], float(self.weights[i, j])) for i, j in zip(iu, ju)]

    def index(self, vertex: str) -> int:
        return self._index[vertex]

    def with_mu(self, mu: np.ndarray) -> "Graph":
        return Graph(self.ids, self.weights, np.asarray(mu, dtype=float), self.n_interior, self.T)

    def mask_interior(self) -> "Graph":
        """Copy with ``mu`` on ``X \\ B`` replaced by ``nan``."""
        m = np.array(self.mu)
        m[self.interior] = np.nan
        return self.with_mu(m)

    def require_mu(self, where: slice | None = None) -> np.ndarray:
        m = self.mu if where is None else self.mu[where]
        if np.any(np.isnan(m)):
            raise GraphError("vertex centrality unknown at some required vertex")
        return m


def _connected(w: np.ndarray) -> bool:
    n = w.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        x = queue.popleft()
        for y in np.flatnonzero(w[x]):
            if not seen[y]:
                seen[y] = True
                queue.append(y)
    return bool(seen.all())


def load_graph(source: str | PathLike | Mapping[str, Any]) -> Graph:
    """Read a graph document (JSON). ``source`` is a path, a JSON string or a dict.

    Schema::

        {"vertices": [{"id": "a", "mu": 1.0}, {"id": "b", "mu": null}, ...],
         "edges":    [{"u": "a", "v": "b", "w": 0.25}, ...],
         "boundary": ["a", ...],
         "T": 9}                       # optional
    """
    if isinstance(source, Mapping):
        doc = source
    else:
        text = None
        if isinstance(source, PathLike) or (isinstance(source, str) and not source.lstrip().startswith("{")):
            try:
                text = Path(source).read_text()
            except OSError as exc:
                raise GraphError(f"cannot read graph document: {exc}") from exc
        else:
            text = source
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise GraphError(f"parse failure: {exc}") from exc
    try:
        vertices = [str(v["id"]) for v in doc["vertices"]]
        mu = [v.get("mu") for v in doc["vertices"]]
        edges = [(e["u"], e["v"], e["w"]) for e in doc["edges"]]
        boundary = list(doc["boundary"])
    except (KeyError, TypeError) as exc:
        raise GraphError(f"parse failure: missing or malformed field {exc}") from exc
    T = doc.get("T")
    if T is not None and (not isinstance(T, int) or T < 1):
        raise GraphError("T must be a positive integer")
    return Graph.from_edges(vertices, edges, boundary, mu, T)


def graph_to_dict(g: Graph) -> dict:
    doc = {
        "vertices": [
            {"id": v, "mu": None if np.isnan(m) else float(m)} for v, m in zip(g.ids, g.mu)
        ],
        "edges": [{"u": u, "v": v, "w": w} for u, v, w in g.edges],
        "boundary": list(g.boundary_ids),
    }
    if g.T is not None:
        doc["T"] = g.T
    return doc


def dump_graph(g: Graph, path: str | PathLike) -> None:
    Path(path).write_text(json.dumps(graph_to_dict(g), indent=2) + "\n")


def combinatorial_laplacian(g: Graph) -> np.ndarray:
    """``D - W``; this is ``-mu_x * Laplacian`` and does not involve ``mu``."""
    w = np.asarray(g.weights)
    return np.diag(w.sum(axis=1)) - w


def laplacian_matrix(g: Graph) -> np.ndarray:
    """Matrix of ``(Lap u)(x) = (1/mu_x) sum_y w_xy (u(y) - u(x))``."""
    mu = g.require_mu()
    return -combinatorial_laplacian(g) / mu[:, None]


def laplacian_apply(g: Graph, u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape[0] != g.n:
        raise GraphError(f"function has {u.shape[0]} values, graph has {g.n} vertices")
    return laplacian_matrix(g) @ u


def weighted_inner_product(g: Graph, f: np.ndarray, h: np.ndarray, domain: str = "X") -> float:
    """``sum_x mu_x f(x) h(x)`` over ``domain`` in {"X", "B", "interior"}.

    The last axis of ``f`` and ``h`` indexes vertices of the domain; any
    leading axes (e.g. time) are summed over as well, which gives the
    space-time product on ``Z_T x domain``.
    """
    where = {"X": slice(None), "B": g.boundary, "interior": g.interior}
    if domain not in where:
        raise ValueError(f"unknown domain {domain!r}")
    mu = g.require_mu(where[domain])
    f = np.asarray(f, dtype=float)
    h = np.asarray(h, dtype=float)
    if f.shape != h.shape or f.shape[-1] != mu.shape[0]:
        raise GraphError(f"domain mismatch: {f.shape}, {h.shape} on {domain} of size {mu.shape[0]}")
    return float(np.sum(mu * f * h))


def transition_kernel(g: Graph) -> np.ndarray:
    """Row-stochastic one-step transition matrix of the lazy random walk."""
    mu = g.require_mu()
    w = np.asarray(g.weights)
    p = w / mu[:, None]
    stay = 1.0 - p.sum(axis=1)
    if np.any(stay < -1e-15):
        bad = [g.ids[i] for i in np.flatnonzero(stay < -1e-15)]
        raise GraphError(f"sub-stochasticity violated (mu_x < sum_y w_xy) at {bad}")
    p[np.diag_indices_from(p)] = np.maximum(stay, 0.0)
    return p


@dataclass(frozen=True)
class AssumptionReport:
    substochastic: bool
    unique_continuation: bool
    eigen_margin: float
    eigenvalues: np.ndarray = field(repr=False)


def check_assumptions(g: Graph, tol: float = 1e-10, gap: float = 1e-9) -> AssumptionReport:
    """Check the sub-stochasticity and unique-continuation assumptions.

    ``-Lap`` is self-adjoint only in the ``mu``-weighted product, so it is
    symmetrised as ``M^{-1/2} (D - W) M^{-1/2}``. Eigenvalues closer than
    ``gap`` are grouped into one eigenspace; an eigenspace contains a vector
    vanishing on ``B`` exactly when its basis restricted to ``B`` loses rank,
    measured by the smallest singular value of that restriction.
    """
    mu = g.require_mu()
    w = np.asarray(g.weights)
    substochastic = bool(np.all(mu >= w.sum(axis=1)))
    s = 1.0 / np.sqrt(mu)
    sym = s[:, None] * combinatorial_laplacian(g) * s[None, :]
    lam, vec = sym_eigen(sym)
    margin = np.inf
    start = 0
    n = g.n
    while start < n:
        stop = start + 1
        while stop < n and lam[stop] - lam[stop - 1] < gap * max(1.0, abs(lam[-1])):
            stop += 1
        block = vec[g.boundary, start:stop]
        if block.shape[1] > block.shape[0]:
            sigma = 0.0
        else:
            sigma = float(singular_values(block)[-1])
        margin = min(margin, sigma)
        start = stop
    return AssumptionReport(substochastic, bool(margin > tol), float(margin), lam)


def harmonic_residual(g: Graph, phi: np.ndarray) -> np.ndarray:
    """``mu_x * (Lap phi)(x)`` on ``X \\ B``; zero iff ``phi`` is harmonic there."""
    return -(combinatorial_laplacian(g) @ np.asarray(phi, dtype=float))[g.interior]


def solve_dirichlet(g: Graph, boundary_values: np.ndarray, rcond_min: float = 1e-14) -> np.ndarray:
    """Harmonic extension of ``boundary_values`` from ``B`` to ``X``.

    Solves ``sum_y w_xy (phi(y) - phi(x)) = 0`` on ``X \\ B``. The system
    never touches ``mu``.
    """
    bv = np.asarray(boundary_values, dtype=float)
    if bv.shape[0] != g.n_boundary:
        raise GraphError(f"expected {g.n_boundary} boundary values, got {bv.shape[0]}")
    phi = np.zeros((g.n,) + bv.shape[1:])
    phi[g.boundary] = bv
    if g.n_interior == 0:
        return phi
    lap = combinatorial_laplacian(g)
    a = lap[g.interior, g.interior]
    rhs = -lap[g.interior, g.boundary] @ bv
    if 1.0 / np.linalg.cond(a, 1) < rcond_min:
        raise NumericError("singular interior Dirichlet system")
    phi[g.interior] = np.linalg.solve(a, rhs)
    return phi


def harmonic_basis(g: Graph) -> np.ndarray:
    """Rows ``j`` hold the harmonic extension of the indicator of the j-th vertex of ``B``."""
    return solve_dirichlet(g, np.eye(g.n_boundary)).T


def boundary_laplacian(g: Graph, phi: np.ndarray) -> np.ndarray:
    """``(Lap phi)|_B``, which needs ``mu`` on ``B`` only."""
    mu_b = g.require_mu(g.boundary)
    return -(combinatorial_laplacian(g) @ np.asarray(phi, dtype=float))[g.boundary] / mu_b
