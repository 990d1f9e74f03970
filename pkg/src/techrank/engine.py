"""TechRank iteration on a bipartite company-technology graph.

Each round, every company takes the degree-biased average of the weights of
its technologies, and every technology the degree-biased average of the
weights of its companies. The bias is set by two exponents: ``beta`` acts on
company degrees when technologies pass weight to companies, ``alpha`` acts on
technology degrees when companies pass weight to technologies. With both at
zero the scheme reduces to plain neighbour averaging (method of reflections).

Both layers are updated synchronously from the previous iterate and each
layer is rescaled to unit sum after every step.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np
from scipy import sparse

from .errors import NumericalOverflow
from .graph import BipartiteGraph, degrees


@dataclass(frozen=True)
class Exponents:
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise ValueError(f"exponents must be finite, got alpha={self.alpha}, beta={self.beta}")


@dataclass(frozen=True)
class RunConfig:
    exponents: Exponents = field(default_factory=Exponents)
    tolerance: float = 1e-9
    rank_stability_window: int = 10
    max_iterations: int = 10_000

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.rank_stability_window < 1:
            raise ValueError("rank_stability_window must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")

    @property
    def alpha(self) -> float:
        return self.exponents.alpha

    @property
    def beta(self) -> float:
        return self.exponents.beta


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERATIONS = "MaxIterations"
    FAILED = "Failed"

    def __str__(self):
        return self.value


@dataclass(frozen=True, eq=False)
class TransitionPair:
    """The two degree-biased transition operators, both shaped (N_c, N_t).

    ``g_beta[c, t]`` is the probability of moving from technology ``t`` to
    company ``c`` (columns sum to one); ``g_alpha[c, t]`` is the probability
    of moving from company ``c`` to technology ``t`` (rows sum to one).
    """

    g_beta: sparse.csr_array
    g_alpha: sparse.csr_array

    @cached_property
    def g_alpha_t(self) -> sparse.csr_array:
        # CSR of the transpose so the technology update sums over ascending c
        t = sparse.csr_array(self.g_alpha.T)
        t.sort_indices()
        return t


@dataclass(frozen=True, eq=False)
class RankState:
    w_c: np.ndarray
    w_t: np.ndarray
    iteration: int = 0


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    delta_c: float
    delta_t: float
    rank_stable_streak: int


@dataclass
class ConvergenceTrace:
    rows: list[TraceRow] = field(default_factory=list)

    def append(self, row: TraceRow):
        if self.rows and row.iteration <= self.rows[-1].iteration:
            raise ValueError("trace iterations must increase")
        self.rows.append(row)

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def __getitem__(self, i):
        return self.rows[i]

    def settling_iteration(self, layer: str, tolerance: float) -> int | None:
        """First iteration from which ``layer``'s delta stays below ``tolerance``.

        ``layer`` is ``"c"`` or ``"t"``. Returns None if the final delta is
        not below tolerance.
        """
        attr = {"c": "delta_c", "t": "delta_t"}[layer]
        settled = None
        for row in self.rows:
            if getattr(row, attr) < tolerance:
                if settled is None:
                    settled = row.iteration
            else:
                settled = None
        return settled


class RunResult(NamedTuple):
    state: RankState
    trace: ConvergenceTrace
    status: Status


def _require_pruned(g: BipartiteGraph):
    deg = degrees(g)
    if g.n_companies == 0 or g.n_technologies == 0:
        raise ValueError("graph has an empty layer")
    if (deg.k_c == 0).any() or (deg.k_t == 0).any():
        raise ValueError("graph has degree-0 nodes; prune it first")
    return deg


def initial_weights(g: BipartiteGraph) -> RankState:
    """Degree-proportional starting weights, each layer summing to one."""
    deg = _require_pruned(g)
    k_c = deg.k_c.astype(np.float64)
    k_t = deg.k_t.astype(np.float64)
    return RankState(k_c / k_c.sum(), k_t / k_t.sum(), 0)


def _degree_bias(k: np.ndarray, exponent: float, name: str) -> np.ndarray:
    with np.errstate(over="ignore", under="ignore", divide="ignore", invalid="ignore"):
        bias = np.power(k.astype(np.float64), -exponent)
    if not (np.isfinite(bias).all() and (bias > 0).all()):
        raise NumericalOverflow(
            f"k**(-{name}) leaves the float64 range for {name}={exponent} "
            f"(max degree {int(k.max())})"
        )
    return bias


def _scatter_normalise(bias, keys, n, name):
    # sums follow CSR entry order, i.e. ascending node index within each group
    with np.errstate(over="ignore", invalid="ignore"):
        totals = np.bincount(keys, weights=bias, minlength=n)
        values = bias / totals[keys]
    if not (np.isfinite(totals).all() and np.isfinite(values).all() and (values > 0).all()):
        raise NumericalOverflow(f"transition normalisation overflowed for {name}")
    return values


def build_transitions(g: BipartiteGraph, e: Exponents) -> TransitionPair:
    """Degree-biased transition operators for exponents ``e``.

    ``g_beta[c, t] = k_c**-beta / sum_{c' ~ t} k_c'**-beta`` and
    ``g_alpha[c, t] = k_t**-alpha / sum_{t' ~ c} k_t'**-alpha``, both
    supported on the edges of ``g``.

    Raises
    ------
    NumericalOverflow
        If a degree power or a normalising sum is not a positive finite
        float64.
    """
    deg = _require_pruned(g)
    m = g.adjacency
    indptr, cols = m.indptr, m.indices
    rows = np.repeat(np.arange(g.n_companies), np.diff(indptr))

    bias_c = _degree_bias(deg.k_c, e.beta, "beta")[rows]
    bias_t = _degree_bias(deg.k_t, e.alpha, "alpha")[cols]
    beta_vals = _scatter_normalise(bias_c, cols, g.n_technologies, "beta")
    alpha_vals = _scatter_normalise(bias_t, rows, g.n_companies, "alpha")

    shape = m.shape
    g_beta = sparse.csr_array((beta_vals, cols.copy(), indptr.copy()), shape=shape)
    g_alpha = sparse.csr_array((alpha_vals, cols.copy(), indptr.copy()), shape=shape)
    return TransitionPair(g_beta, g_alpha)


def step(state: RankState, tp: TransitionPair) -> RankState:
    """One synchronous update of both layers from ``state``."""
    w_c = tp.g_beta @ state.w_t
    w_t = tp.g_alpha_t @ state.w_c
    return RankState(w_c / w_c.sum(), w_t / w_t.sum(), state.iteration + 1)


# Relative gap below which two weights are treated as round-off ties, so
# that last-bit noise between equal weights does not count as a rank change.
ROUNDOFF_TIE = 1e-12


def _ordering(w: np.ndarray) -> np.ndarray:
    return np.argsort(-w, kind="stable")


def _order_holds(w: np.ndarray, order: np.ndarray) -> bool:
    """True if ``order`` still sorts ``w`` descending, up to round-off."""
    s = w[order]
    hi, lo = s[:-1], s[1:]
    return bool(np.all(lo - hi <= ROUNDOFF_TIE * np.maximum(hi, lo)))


def run_to_convergence(
    g: BipartiteGraph,
    cfg: RunConfig = RunConfig(),
    initial: RankState | None = None,
    callback: Callable[[RankState], None] | None = None,
    transitions: TransitionPair | None = None,
) -> RunResult:
    """Iterate :func:`step` until weights and rank order both settle.

    Stops once, for ``cfg.rank_stability_window`` consecutive iterations,
    the max-abs change of both layers has stayed below ``cfg.tolerance``
    and neither layer's rank order has changed; or after
    ``cfg.max_iterations`` steps. The delta must hold over the whole window
    because the synchronous update interleaves two sub-sequences, so a
    single small delta can be followed by a larger one. Swaps between weights that differ by less
    than ``ROUNDOFF_TIE`` relative are round-off, not rank changes; gaps at
    the scale of ``cfg.tolerance`` are never merged.

    Parameters
    ----------
    initial : RankState, optional
        Starting point; degree-proportional weights by default.
    callback : callable, optional
        Called with every new state, in order.
    transitions : TransitionPair, optional
        Precomputed operators for ``cfg.exponents``.
    """
    tp = transitions if transitions is not None else build_transitions(g, cfg.exponents)
    state = initial if initial is not None else initial_weights(g)
    order_c, order_t = _ordering(state.w_c), _ordering(state.w_t)
    trace = ConvergenceTrace()
    streak = calm = 0
    for _ in range(cfg.max_iterations):
        new = step(state, tp)
        delta_c = float(np.max(np.abs(new.w_c - state.w_c)))
        delta_t = float(np.max(np.abs(new.w_t - state.w_t)))
        if _order_holds(new.w_c, order_c) and _order_holds(new.w_t, order_t):
            streak += 1
        else:
            streak = 0
            order_c, order_t = _ordering(new.w_c), _ordering(new.w_t)
        state = new
        trace.append(TraceRow(state.iteration, delta_c, delta_t, streak))
        if callback is not None:
            callback(state)
        calm = calm + 1 if max(delta_c, delta_t) < cfg.tolerance else 0
        if calm >= cfg.rank_stability_window and streak >= cfg.rank_stability_window:
            return RunResult(state, trace, Status.CONVERGED)
    return RunResult(state, trace, Status.MAX_ITERATIONS)


@dataclass(frozen=True, eq=False)
class SweepCell:
    alpha: float
    beta: float
    status: Status
    iterations: int | None
    state: RankState | None = None
    error: str | None = None


@dataclass
class SweepResult:
    cells: list[SweepCell]

    def __len__(self):
        return len(self.cells)

    def __iter__(self):
        return iter(self.cells)

    def cell(self, alpha: float, beta: float) -> SweepCell:
        for c in self.cells:
            if c.alpha == alpha and c.beta == beta:
                return c
        raise KeyError((alpha, beta))


def _sweep_cell(g: BipartiteGraph, cfg: RunConfig, alpha: float, beta: float) -> SweepCell:
    run_cfg = replace(cfg, exponents=Exponents(alpha, beta))
    try:
        state, trace, status = run_to_convergence(g, run_cfg)
    except NumericalOverflow as exc:
        return SweepCell(alpha, beta, Status.FAILED, None, error=str(exc))
    return SweepCell(alpha, beta, status, len(trace), state)


def sweep(
    g: BipartiteGraph,
    alphas: Iterable[float],
    betas: Iterable[float],
    cfg: RunConfig = RunConfig(),
    workers: int = 1,
) -> SweepResult:
    """Run to convergence at every ``(alpha, beta)`` pair, alpha-major.

    ``cfg.exponents`` is ignored. Cells whose exponents overflow are kept
    with status ``Failed``. With ``workers > 1`` cells run in a thread pool;
    each cell is an independent deterministic run, so results do not depend
    on scheduling.
    """
    alphas: Sequence[float] = [float(a) for a in alphas]
    betas: Sequence[float] = [float(b) for b in betas]
    if not alphas or not betas:
        raise ValueError("alpha and beta grids must be non-empty")
    pairs = [(a, b) for a in alphas for b in betas]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(lambda p: _sweep_cell(g, cfg, *p), pairs))
    else:
        cells = [_sweep_cell(g, cfg, a, b) for a, b in pairs]
    return SweepResult(cells)
