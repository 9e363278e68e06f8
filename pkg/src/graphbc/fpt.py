"""First-passage-time distributions of the lazy random walk.

``r[t-1, i, j]`` is the probability that the walk started at ``sources[i]``
first visits ``targets[j]`` at step ``t`` (``t >= 1``, so a walk started at
the target must leave and come back). Exact tensors come from the masked
transition recursion; empirical ones from seeded Monte Carlo.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from os import PathLike
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "FptTensor",
    "McConfig",
    "exact_fpt",
    "mc_fpt",
    "frne",
    "write_fpt_csv",
    "read_fpt_csv",
    "CHUNK",
]

# walks per RNG stream; fixed so results do not depend on scheduling
CHUNK = 1 << 16


@dataclass(frozen=True)
class FptTensor:
    """First-passage-time distribution on ``{1..2T-1} x sources x targets``.

    Attributes
    ----------
    r : ndarray, shape (2T-1, len(sources), len(targets))
    T : int
    sources, targets : tuple of int
        Vertex indices in graph ordering.
    escape : ndarray, shape (len(sources), len(targets)) or None
        Mass of walks that do not hit the target by step ``2T-1``.
    meta : dict
        Free-form provenance (``kind``, ``seed``, ``samples``).
    """

    r: np.ndarray
    T: int
    sources: tuple[int, ...]
    targets: tuple[int, ...]
    escape: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("horizon T must be >= 1")
        expected = (2 * self.T - 1, len(self.sources), len(self.targets))
        if self.r.shape != expected:
            raise ValueError(f"r has shape {self.r.shape}, expected {expected}")

    def entry(self, t: int, x: int, y: int) -> float:
        """``r(t, x, y)`` for vertex indices ``x``, ``y`` and ``1 <= t <= 2T-1``."""
        if not 1 <= t <= 2 * self.T - 1:
            raise IndexError(f"t={t} outside 1..{2 * self.T - 1}")
        return float(self.r[t - 1, self.sources.index(x), self.targets.index(y)])

    def restrict(self, sources: Sequence[int], targets: Sequence[int]) -> "FptTensor":
        si = [self.sources.index(s) for s in sources]
        ti = [self.targets.index(t) for t in targets]
        esc = None if self.escape is None else self.escape[np.ix_(si, ti)]
        return FptTensor(self.r[:, si][:, :, ti], self.T, tuple(sources), tuple(targets), esc, dict(self.meta))


@dataclass(frozen=True)
class McConfig:
    samples: int
    seed: int
    T: int

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.T < 1:
            raise ValueError("T must be >= 1")


def exact_fpt(
    kernel: np.ndarray,
    T: int,
    sources: Sequence[int] | None = None,
    targets: Sequence[int] | None = None,
) -> FptTensor:
    """First-passage distribution by the recursion
    ``r(1,x,y) = p_xy``, ``r(t,x,y) = sum_{z != y} p_xz r(t-1,z,y)``.

    Each target is handled separately with the kernel column of ``y``
    zeroed; the same masked iteration of the constant function tracks the
    not-yet-hit mass, which gives the escape probability.
    """
    p = np.asarray(kernel, dtype=float)
    n = p.shape[0]
    sources = tuple(range(n)) if sources is None else tuple(int(s) for s in sources)
    targets = tuple(range(n)) if targets is None else tuple(int(t) for t in targets)
    steps = 2 * T - 1
    r = np.zeros((steps, len(sources), len(targets)))
    escape = np.zeros((len(sources), len(targets)))
    src = list(sources)
    for j, y in enumerate(targets):
        masked = p.copy()
        masked[:, y] = 0.0
        hit = p[:, y].copy()
        alive = np.ones(n)
        for t in range(steps):
            r[t, :, j] = hit[src]
            alive = masked @ alive
            hit = masked @ hit
        escape[:, j] = alive[src]
    return FptTensor(r, T, sources, targets, escape, {"kind": "exact"})


def _walk_chunk(cum: np.ndarray, x: int, y: int, size: int, steps: int, rng: np.random.Generator):
    """Histogram of first hitting times of ``y`` for ``size`` walks from ``x``."""
    n = cum.shape[0]
    counts = np.zeros(steps, dtype=np.int64)
    state = np.full(size, x, dtype=np.intp)
    for t in range(steps):
        u = rng.random(state.shape[0])
        nxt = (u[:, None] >= cum[state]).sum(axis=1)
        np.minimum(nxt, n - 1, out=nxt)
        hit = nxt == y
        counts[t] = np.count_nonzero(hit)
        state = nxt[~hit]
        if state.size == 0:
            break
    return counts


def _pair_stream(seed: int, x: int, y: int, chunk: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(x, y, chunk))
    return np.random.Generator(np.random.Philox(ss))


def mc_fpt(
    kernel: np.ndarray,
    B: Sequence[int],
    cfg: McConfig,
    workers: int = 1,
) -> FptTensor:
    """Empirical first-passage distribution on ``B x B`` by Monte Carlo.

    For every pair ``(x, y)`` ``cfg.samples`` independent walks start at
    ``x`` and run for at most ``2T-1`` steps; the normalised histogram of
    first hitting times of ``y`` is returned, and the fraction that never
    hit goes into ``escape``.

    Walks are split into chunks of ``CHUNK``; chunk ``c`` of pair ``(x, y)``
    draws from a Philox stream keyed by ``(seed, x, y, c)``. The result is
    therefore independent of pair order, chunk scheduling and ``workers``.
    """
    p = np.asarray(kernel, dtype=float)
    cum = np.cumsum(p, axis=1)
    cum[:, -1] = np.inf
    steps = 2 * cfg.T - 1
    B = tuple(int(b) for b in B)
    jobs = []
    for x in B:
        for y in B:
            for c, start in enumerate(range(0, cfg.samples, CHUNK)):
                jobs.append((x, y, c, min(CHUNK, cfg.samples - start)))

    def run(job):
        x, y, c, size = job
        return _walk_chunk(cum, x, y, size, steps, _pair_stream(cfg.seed, x, y, c))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(job) for job in jobs]

    counts = np.zeros((steps, len(B), len(B)), dtype=np.int64)
    pos = {b: i for i, b in enumerate(B)}
    for (x, y, _, _), hist in zip(jobs, results):
        counts[:, pos[x], pos[y]] += hist
    r = counts / cfg.samples
    escape = 1.0 - counts.sum(axis=0) / cfg.samples
    meta = {"kind": "monte-carlo", "seed": cfg.seed, "samples": cfg.samples}
    return FptTensor(r, cfg.T, B, B, escape, meta)


def frne(r_exact: FptTensor | np.ndarray, r_emp: FptTensor | np.ndarray) -> float:
    """Frobenius relative norm error in percent (finite times only)."""
    a = r_exact.r if isinstance(r_exact, FptTensor) else np.asarray(r_exact)
    b = r_emp.r if isinstance(r_emp, FptTensor) else np.asarray(r_emp)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    denom = np.linalg.norm(a)
    if denom == 0:
        raise ZeroDivisionError("reference tensor has zero norm")
    return float(np.linalg.norm(a - b) / denom * 100.0)


def write_fpt_csv(path: str | PathLike, tensor: FptTensor, ids: Sequence[str]) -> None:
    """Write ``t,x_id,y_id,value`` rows after a ``# {json}`` metadata line.

    Escape masses, when present, are written with ``t = inf``. Values use
    17 significant digits so they round-trip exactly.
    """
    meta = {
        "T": tensor.T,
        "sources": [ids[s] for s in tensor.sources],
        "targets": [ids[t] for t in tensor.targets],
        **tensor.meta,
    }
    lines = ["# " + json.dumps(meta, sort_keys=True), "t,x_id,y_id,value"]
    for t in range(tensor.r.shape[0]):
        for i, s in enumerate(tensor.sources):
            for j, y in enumerate(tensor.targets):
                lines.append(f"{t + 1},{ids[s]},{ids[y]},{tensor.r[t, i, j]:.17g}")
    if tensor.escape is not None:
        for i, s in enumerate(tensor.sources):
            for j, y in enumerate(tensor.targets):
                lines.append(f"inf,{ids[s]},{ids[y]},{tensor.escape[i, j]:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_fpt_csv(path: str | PathLike, ids: Sequence[str]) -> FptTensor:
    """Inverse of :func:`write_fpt_csv`; ``ids`` maps names to graph indices.

    Raises ``ValueError`` when the file is truncated or inconsistent with its
    metadata line.
    """
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith("#"):
        raise ValueError("missing metadata line")
    meta = json.loads(text[0][1:])
    index = {v: i for i, v in enumerate(ids)}
    try:
        T = int(meta.pop("T"))
        sources = tuple(index[v] for v in meta.pop("sources"))
        targets = tuple(index[v] for v in meta.pop("targets"))
    except KeyError as exc:
        raise ValueError(f"metadata refers to unknown vertex or key {exc}") from exc
    si = {v: i for i, v in enumerate(sources)}
    ti = {v: i for i, v in enumerate(targets)}
    steps = 2 * T - 1
    r = np.full((steps, len(sources), len(targets)), np.nan)
    escape = np.full((len(sources), len(targets)), np.nan)
    for line in text[2:]:
        if not line.strip():
            continue
        t, x, y, value = line.split(",")
        i, j = si[index[x]], ti[index[y]]
        if t == "inf":
            escape[i, j] = float(value)
        else:
            t = int(t)
            if not 1 <= t <= steps:
                raise ValueError(f"time {t} outside 1..{steps}")
            r[t - 1, i, j] = float(value)
    if np.isnan(r).any():
        raise ValueError(f"shape mismatch: r file is missing entries for horizon T={T}")
    if np.isnan(escape).all():
        escape = None
    return FptTensor(r, T, sources, targets, escape, meta)
