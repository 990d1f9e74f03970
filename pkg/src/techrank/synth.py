"""Seeded synthetic graphs and a dense reference iteration.

Random numbers come from numpy's ``PCG64`` bit generator, and only through
``Generator.random`` (53-bit uniform doubles in [0, 1)). numpy guarantees
that stream is stable for a fixed seed, so the generated edge sets are
portable across platforms and numpy releases.

:func:`dense_oracle` reproduces the engine's semantics with full dense
matrices built straight from the degree-bias formula. It borrows only the
engine's result containers, none of its arithmetic; it exists to check it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Union

import numpy as np

from .engine import ConvergenceTrace, RankState, RunConfig, TraceRow
from .errors import OracleTooLarge
from .graph import BipartiteGraph, EntityId, Layer

ORACLE_MAX_CELLS = 10_000
ROUNDOFF = 1e-12


@dataclass(frozen=True)
class UniformRandom:
    p: float


@dataclass(frozen=True)
class FixedDegree:
    d: int


@dataclass(frozen=True)
class Block:
    """Companies ``[c_start, c_stop)`` link to techs ``[t_start, t_stop)``
    with probability ``p_in`` and to every other technology with ``p_out``."""

    c_start: int
    c_stop: int
    t_start: int
    t_stop: int
    p_in: float
    p_out: float


@dataclass(frozen=True)
class PlantedBlocks:
    blocks: tuple[Block, ...]


Model = Union[UniformRandom, FixedDegree, PlantedBlocks]


@dataclass(frozen=True)
class GenSpec:
    n_c: int
    n_t: int
    model: Model
    seed: int = 0

    def __post_init__(self):
        if self.n_c < 1 or self.n_t < 1:
            raise ValueError("n_c and n_t must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        model = self.model
        if isinstance(model, UniformRandom):
            _check_prob(model.p)
        elif isinstance(model, FixedDegree):
            if not 1 <= model.d <= self.n_t:
                raise ValueError(f"degree must be in [1, {self.n_t}], got {model.d}")
        elif isinstance(model, PlantedBlocks):
            for b in model.blocks:
                _check_prob(b.p_in)
                _check_prob(b.p_out)
                if not (0 <= b.c_start < b.c_stop <= self.n_c):
                    raise ValueError(f"company range out of bounds in {b}")
                if not (0 <= b.t_start < b.t_stop <= self.n_t):
                    raise ValueError(f"technology range out of bounds in {b}")
        else:
            raise TypeError(f"unknown model {model!r}")


def _check_prob(p):
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability must be in [0, 1], got {p}")


def _labels(prefix: str, n: int) -> list[str]:
    width = len(str(n - 1))
    return [f"{prefix}{i:0{width}d}" for i in range(n)]


def _probabilities(spec: GenSpec) -> np.ndarray:
    model = spec.model
    if isinstance(model, UniformRandom):
        return np.full((spec.n_c, spec.n_t), model.p)
    # later blocks override earlier ones on shared company rows
    p = np.zeros((spec.n_c, spec.n_t))
    for b in model.blocks:
        p[b.c_start:b.c_stop, :] = b.p_out
        p[b.c_start:b.c_stop, b.t_start:b.t_stop] = b.p_in
    return p


def generate(spec: GenSpec) -> BipartiteGraph:
    """Draw a graph for ``spec``. Degree-0 nodes are kept (see ``prune``).

    Companies are labelled ``c0..``, technologies ``t0..``, zero-padded so
    that lexical and index order agree.
    """
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    u = rng.random((spec.n_c, spec.n_t))
    if isinstance(spec.model, FixedDegree):
        # the d smallest uniforms of each row pick a uniform random d-subset
        picks = np.argsort(u, axis=1, kind="stable")[:, : spec.model.d]
        mask = np.zeros(u.shape, dtype=bool)
        np.put_along_axis(mask, picks, True, axis=1)
    else:
        mask = u < _probabilities(spec)
    rows, cols = np.nonzero(mask)
    companies = tuple(EntityId(s, Layer.COMPANY) for s in _labels("c", spec.n_c))
    technologies = tuple(EntityId(s, Layer.TECHNOLOGY) for s in _labels("t", spec.n_t))
    edges = tuple((int(c), int(t)) for c, t in zip(rows, cols))
    return BipartiteGraph(companies, technologies, edges)


class OracleResult(NamedTuple):
    state: RankState
    trace: ConvergenceTrace
    converged: bool


def dense_oracle(
    g: BipartiteGraph,
    cfg: RunConfig = RunConfig(),
    on_iteration: Callable[[int, np.ndarray, np.ndarray], None] | None = None,
) -> OracleResult:
    """Brute-force dense version of the TechRank iteration.

    Only the engine's container types are shared; every matrix, sum and
    stopping test is computed here from scratch. ``on_iteration`` is called
    as ``(n, w_c, w_t)`` after each step.

    Raises
    ------
    OracleTooLarge
        If ``N_c * N_t`` exceeds 10,000.
    """
    alpha, beta = cfg.exponents.alpha, cfg.exponents.beta
    n_c, n_t = g.n_companies, g.n_technologies
    if n_c * n_t > ORACLE_MAX_CELLS:
        raise OracleTooLarge(f"{n_c}x{n_t} exceeds {ORACLE_MAX_CELLS} dense cells")

    M = np.zeros((n_c, n_t))
    for c, t in g.edges:
        M[c, t] = 1.0
    k_c = M.sum(axis=1)
    k_t = M.sum(axis=0)
    if (k_c == 0).any() or (k_t == 0).any():
        raise ValueError("dense oracle needs a graph without isolated nodes")

    # G_beta[c, t] = M[c, t] k_c^-beta / sum_c' M[c', t] k_c'^-beta
    B = M * (k_c ** -beta)[:, None]
    G_beta = B / B.sum(axis=0, keepdims=True)
    # G_alpha[c, t] = M[c, t] k_t^-alpha / sum_t' M[c, t'] k_t'^-alpha
    A = M * (k_t ** -alpha)[None, :]
    G_alpha = A / A.sum(axis=1, keepdims=True)

    def still_sorted(w, order):
        for a, b in zip(order, order[1:]):
            if w[b] - w[a] > ROUNDOFF * max(w[a], w[b]):
                return False
        return True

    def sort_desc(w):
        return sorted(range(len(w)), key=lambda i: -w[i])

    w_c = k_c / k_c.sum()
    w_t = k_t / k_t.sum()
    rank_c, rank_t = sort_desc(w_c), sort_desc(w_t)
    trace = ConvergenceTrace()
    unchanged = 0
    small = 0
    for n in range(1, cfg.max_iterations + 1):
        x_c = G_beta @ w_t
        x_t = w_c @ G_alpha
        x_c = x_c / x_c.sum()
        x_t = x_t / x_t.sum()
        d_c = np.abs(x_c - w_c).max()
        d_t = np.abs(x_t - w_t).max()
        w_c, w_t = x_c, x_t
        if on_iteration is not None:
            on_iteration(n, w_c, w_t)

        if still_sorted(w_c, rank_c) and still_sorted(w_t, rank_t):
            unchanged += 1
        else:
            unchanged = 0
            rank_c, rank_t = sort_desc(w_c), sort_desc(w_t)
        trace.append(TraceRow(n, float(d_c), float(d_t), unchanged))
        small = small + 1 if (d_c < cfg.tolerance and d_t < cfg.tolerance) else 0
        if min(small, unchanged) >= cfg.rank_stability_window:
            return OracleResult(RankState(w_c, w_t, n), trace, True)
    return OracleResult(RankState(w_c, w_t, cfg.max_iterations), trace, False)
