"""Boundary-control reconstruction of the vertex centrality on ``X \\ B``.

All space-time functions on ``Z_L x B`` are arrays of shape ``(L, |B|)``,
flattened time-major when they meet a matrix. Inner products on ``Z_T x B``
carry the weights ``mu|_B``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .fpt import FptTensor
from .graph import Graph, GraphError, boundary_laplacian, harmonic_basis, harmonic_residual
from .heat import assemble_lambda, trajectory_matrix
from .numerics import min_norm_lstsq, singular_values

__all__ = [
    "time_reversal",
    "project_time",
    "zero_extend",
    "constant_in_time",
    "assemble_WstarW",
    "wstar_harmonic",
    "adjoint_check",
    "compute_control",
    "assemble_H",
    "h_column_pairs",
    "ReconstructionResult",
    "reconstruct_mu",
    "DEFAULT_TOL_EXACT",
    "DEFAULT_TOL_MC",
    "RANK_TOL",
]

DEFAULT_TOL_EXACT = 1e-12
DEFAULT_TOL_MC = 5e-4
# relative singular-value threshold for rank decisions on H
RANK_TOL = 1e-9


def time_reversal(u: np.ndarray, L: int) -> np.ndarray:
    """``u(t) -> u(L-1-t)`` on ``Z_L``."""
    u = np.asarray(u)
    if u.shape[0] != L:
        raise ValueError(f"expected {L} time slices, got {u.shape[0]}")
    return u[::-1].copy()


def project_time(u: np.ndarray, T: int) -> np.ndarray:
    """Restrict a function on ``Z_{2T} x B`` to ``Z_T x B``."""
    u = np.asarray(u)
    if u.shape[0] != 2 * T:
        raise ValueError(f"expected {2 * T} time slices, got {u.shape[0]}")
    return u[:T].copy()


def zero_extend(f: np.ndarray, T: int) -> np.ndarray:
    f = np.asarray(f)
    out = np.zeros((2 * T,) + f.shape[1:])
    out[:T] = f
    return out


def constant_in_time(g_b: np.ndarray, T: int) -> np.ndarray:
    """``1_T (x) g``: the time-constant extension, shape ``(T, |B|)``."""
    return np.tile(np.asarray(g_b, dtype=float), (T, 1))


def _reversal_rows(T: int, nb: int, L: int) -> np.ndarray:
    """Row permutation that realises ``R_{L-1}`` on time-major vectors over ``Z_L x B``."""
    return np.arange(L * nb).reshape(L, nb)[::-1].ravel()


def assemble_WstarW(r: FptTensor) -> np.ndarray:
    """``[W*W]``: column ``k`` is ``P_T R_{2T-1} U^{e_k}``."""
    T, nb = r.T, len(r.sources)
    traj = trajectory_matrix(r)
    return traj[_reversal_rows(T, nb, 2 * T)][: T * nb]


def _lambda_adjoint(lam: np.ndarray, T: int, nb: int) -> np.ndarray:
    rev = _reversal_rows(T, nb, T)
    return lam[np.ix_(rev, rev)]


def wstar_harmonic(
    lam: np.ndarray, phi: np.ndarray, g: Graph, T: int, harmonic_tol: float = 1e-10
) -> np.ndarray:
    """``W* phi = R Lambda R (1_T (x) (Lap phi)|_B) + 1_T (x) phi|_B`` for harmonic ``phi``.

    Only ``mu|_B`` is read. Returns shape ``(T, |B|)``.
    """
    phi = np.asarray(phi, dtype=float)
    scale = max(1.0, float(np.abs(phi).max()) * float(np.abs(g.weights).sum(axis=1).max()))
    if np.abs(harmonic_residual(g, phi)).max(initial=0.0) > harmonic_tol * scale:
        raise ValueError("phi is not harmonic on X \\ B")
    nb = g.n_boundary
    lap_b = constant_in_time(boundary_laplacian(g, phi), T).ravel()
    out = _lambda_adjoint(lam, T, nb) @ lap_b
    return out.reshape(T, nb) + constant_in_time(phi[g.boundary], T)


def adjoint_check(
    lam: np.ndarray, g: Graph, T: int, trials: int = 20, rng: np.random.Generator | None = None
) -> float:
    """Largest ``|<h, Lambda f> - <R Lambda R h, f>|`` over random ``f, h`` (``mu_B``-weighted)."""
    rng = np.random.default_rng(0) if rng is None else rng
    nb = g.n_boundary
    weights = np.tile(g.require_mu(g.boundary), T)
    adj = _lambda_adjoint(lam, T, nb)
    worst = 0.0
    for _ in range(trials):
        f = rng.standard_normal(T * nb)
        h = rng.standard_normal(T * nb)
        lhs = np.sum(weights * h * (lam @ f))
        rhs = np.sum(weights * (adj @ h) * f)
        worst = max(worst, abs(lhs - rhs))
    return worst


def compute_control(
    wstarw: np.ndarray, rhs: np.ndarray, tol: float, mode: str = "relative"
) -> np.ndarray:
    """Minimum-norm control ``h0 = (W*W)^+ rhs`` via truncated pivoted QR.

    ``rhs`` has shape ``(T, |B|)`` (or ``(T, |B|, k)`` for several at once);
    the result has the same shape.
    """
    rhs = np.asarray(rhs, dtype=float)
    T, nb = rhs.shape[:2]
    flat = rhs.reshape((T * nb,) + rhs.shape[2:])
    h = min_norm_lstsq(wstarw, flat, tol=tol, mode=mode)
    return h.reshape(rhs.shape)


def h_column_pairs(nb: int) -> list[tuple[int, int]]:
    return [(j, k) for j in range(nb) for k in range(j, nb)]


def assemble_H(basis: np.ndarray, n_interior: int) -> np.ndarray:
    """Columns ``phi_j * phi_k`` on ``X \\ B`` for ``j <= k``, lexicographic in ``(j, k)``."""
    basis = np.asarray(basis, dtype=float)
    inner = basis[:, :n_interior]
    cols = [inner[j] * inner[k] for j, k in h_column_pairs(basis.shape[0])]
    return np.column_stack(cols) if cols else np.zeros((n_interior, 0))


@dataclass
class ReconstructionResult:
    """Output of :func:`reconstruct_mu`.

    ``projection_only`` is set when ``rank_H < |X \\ B|``; ``mu_interior`` is
    then the minimum-norm solution, i.e. the orthogonal projection of the
    true centrality onto the span of the columns of ``H``.
    """

    mu_interior: np.ndarray
    interior_ids: tuple[str, ...]
    h_controls: np.ndarray  # (|B|, T, |B|): control for each harmonic basis function
    singular_values: dict
    residuals: np.ndarray
    tol_used: dict
    rank_H: int
    rank_WstarW: int
    projection_only: bool
    warnings: list = field(default_factory=list)
    operators: dict = field(default_factory=dict, repr=False)


def reconstruct_mu(
    r: FptTensor,
    g: Graph,
    tol: float = DEFAULT_TOL_EXACT,
    mode: str = "relative",
    tol_mu: float | None = None,
    mode_mu: str | None = None,
) -> ReconstructionResult:
    """Recover ``mu`` on ``X \\ B`` from first-passage data on ``B x B``.

    ``g`` supplies the topology, the edge weights and ``mu|_B``; any values
    of ``mu`` on ``X \\ B`` are ignored. ``tol``/``mode`` regularise the
    control solve; ``tol_mu``/``mode_mu`` (default: same) the final system.
    """
    T = r.T
    nb, ni = g.n_boundary, g.n_interior
    if nb == 0:
        raise GraphError("observation set B is empty")
    if T < 2:
        raise ValueError("horizon T must be at least 2")
    B = tuple(range(ni, g.n))
    if r.sources != B or r.targets != B:
        raise ValueError("passage data must cover B x B in graph order")
    g = g.mask_interior()
    mu_b = g.require_mu(g.boundary)
    tol_mu = tol if tol_mu is None else tol_mu
    mode_mu = mode if mode_mu is None else mode_mu

    notes = []
    if T < g.n:
        msg = f"T={T} < |X|={g.n}: controllability is not guaranteed"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        notes.append(msg)

    lam = assemble_lambda(r)
    wstarw = assemble_WstarW(r)
    basis = harmonic_basis(g)
    wstar_phi = np.stack([wstar_harmonic(lam, phi, g, T) for phi in basis], axis=-1)
    flat_rhs = wstar_phi.reshape(T * nb, nb)
    h_flat, rank_w = min_norm_lstsq(wstarw, flat_rhs, tol=tol, mode=mode, return_rank=True)
    h0 = h_flat.reshape(T, nb, nb)

    weights = np.tile(mu_b, T)
    pairs = h_column_pairs(nb)
    H = assemble_H(basis, ni)
    rhs = np.empty(len(pairs))
    for row, (j, k) in enumerate(pairs):
        gram = np.sum(weights * h_flat[:, j] * flat_rhs[:, k])
        rhs[row] = gram - np.sum(mu_b * basis[j, g.boundary] * basis[k, g.boundary])
    if ni:
        mu_int = min_norm_lstsq(H.T, rhs, tol=tol_mu, mode=mode_mu)
        sv_h = singular_values(H)
        rank_h = int(np.count_nonzero(sv_h > RANK_TOL * sv_h[0])) if sv_h[0] > 0 else 0
    else:
        mu_int = np.zeros(0)
        sv_h = np.zeros(0)
        rank_h = 0
    residuals = H.T @ mu_int - rhs
    projection_only = rank_h < ni
    if projection_only:
        notes.append(
            f"rank(H)={rank_h} < |X\\B|={ni}: result is the projection onto span(H)"
        )
    return ReconstructionResult(
        mu_interior=mu_int,
        interior_ids=g.interior_ids,
        h_controls=np.moveaxis(h0, -1, 0),
        singular_values={"WstarW": singular_values(wstarw), "H": sv_h},
        residuals=residuals,
        tol_used={"control": tol, "control_mode": mode, "mu": tol_mu, "mu_mode": mode_mu},
        rank_H=rank_h,
        rank_WstarW=int(rank_w),
        projection_only=projection_only,
        warnings=notes,
        operators={"Lambda": lam, "WstarW": wstarw, "H": H, "Wstar_phi": wstar_phi, "rhs": rhs, "basis": basis},
    )
