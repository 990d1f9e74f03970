"""Immutable company-technology bipartite graph."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .errors import DuplicateLabel, EmptyLayer, UnknownLabel

logger = logging.getLogger(__name__)


class Layer(enum.Enum):
    COMPANY = "company"
    TECHNOLOGY = "technology"


@dataclass(frozen=True)
class EntityId:
    """A node label together with the layer it lives in."""

    label: str
    layer: Layer

    def __post_init__(self):
        if not isinstance(self.label, str) or not self.label:
            raise ValueError("entity label must be a non-empty string")


@dataclass(frozen=True)
class DegreeVectors:
    k_c: np.ndarray
    k_t: np.ndarray


@dataclass(frozen=True, eq=False)
class BipartiteGraph:
    """Binary adjacency between companies and technologies.

    Nodes keep their input order. ``edges`` holds ``(company_index,
    technology_index)`` pairs sorted lexicographically, so two graphs built
    from the same edge set compare equal whatever order the edges came in.
    Use :func:`build_graph` rather than the constructor.
    """

    companies: tuple[EntityId, ...]
    technologies: tuple[EntityId, ...]
    edges: tuple[tuple[int, int], ...]

    @property
    def n_companies(self) -> int:
        return len(self.companies)

    @property
    def n_technologies(self) -> int:
        return len(self.technologies)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def company_labels(self) -> list[str]:
        return [e.label for e in self.companies]

    @property
    def technology_labels(self) -> list[str]:
        return [e.label for e in self.technologies]

    @cached_property
    def adjacency(self) -> sparse.csr_array:
        """The 0/1 matrix M as CSR, shape (N_c, N_t), sorted indices."""
        if self.edges:
            rows, cols = np.array(self.edges, dtype=np.int64).T
        else:
            rows = cols = np.empty(0, dtype=np.int64)
        data = np.ones(len(rows), dtype=np.float64)
        m = sparse.csr_array(
            (data, (rows, cols)), shape=(self.n_companies, self.n_technologies)
        )
        m.sort_indices()
        return m

    def __eq__(self, other):
        if not isinstance(other, BipartiteGraph):
            return NotImplemented
        return (
            self.company_labels == other.company_labels
            and self.technology_labels == other.technology_labels
            and self.edges == other.edges
        )

    def __hash__(self):
        return hash((tuple(self.company_labels), tuple(self.technology_labels), self.edges))

    def __repr__(self):
        return (
            f"BipartiteGraph(n_companies={self.n_companies}, "
            f"n_technologies={self.n_technologies}, n_edges={self.n_edges})"
        )


def _index_labels(labels, layer: Layer) -> tuple[tuple[EntityId, ...], dict[str, int]]:
    nodes = []
    index = {}
    for label in labels:
        if label in index:
            raise DuplicateLabel(f"duplicate {layer.value} label {label!r}")
        index[label] = len(nodes)
        nodes.append(EntityId(label, layer))
    return tuple(nodes), index


def _from_indices(companies, technologies, pairs) -> BipartiteGraph:
    return BipartiteGraph(tuple(companies), tuple(technologies), tuple(sorted(set(pairs))))


def build_graph(
    company_labels: Iterable[str],
    technology_labels: Iterable[str],
    edge_pairs: Iterable[tuple[str, str]],
) -> tuple[BipartiteGraph, int]:
    """Build a graph from labels and ``(company, technology)`` label pairs.

    Returns the graph and the number of duplicate edges that were collapsed.

    Raises
    ------
    EmptyLayer
        If either label list is empty.
    UnknownLabel
        If an edge names a label missing from its layer.
    """
    companies, c_index = _index_labels(company_labels, Layer.COMPANY)
    technologies, t_index = _index_labels(technology_labels, Layer.TECHNOLOGY)
    if not companies:
        raise EmptyLayer("graph has no companies")
    if not technologies:
        raise EmptyLayer("graph has no technologies")

    seen = set()
    duplicates = 0
    for c_label, t_label in edge_pairs:
        try:
            c = c_index[c_label]
        except KeyError:
            raise UnknownLabel(f"edge references unknown company {c_label!r}") from None
        try:
            t = t_index[t_label]
        except KeyError:
            raise UnknownLabel(f"edge references unknown technology {t_label!r}") from None
        if (c, t) in seen:
            duplicates += 1
        else:
            seen.add((c, t))
    if duplicates:
        logger.warning("collapsed %d duplicate edge(s)", duplicates)
    return _from_indices(companies, technologies, seen), duplicates


def graph_from_edges(edge_pairs: Iterable[tuple[str, str]]) -> tuple[BipartiteGraph, int]:
    """Build a graph whose nodes are the labels seen in ``edge_pairs``.

    Node order is order of first appearance.
    """
    edge_pairs = list(edge_pairs)
    companies = dict.fromkeys(c for c, _ in edge_pairs)
    technologies = dict.fromkeys(t for _, t in edge_pairs)
    return build_graph(companies, technologies, edge_pairs)


def degrees(g: BipartiteGraph) -> DegreeVectors:
    pairs = np.array(g.edges, dtype=np.int64).reshape(-1, 2)
    k_c = np.bincount(pairs[:, 0], minlength=g.n_companies)
    k_t = np.bincount(pairs[:, 1], minlength=g.n_technologies)
    return DegreeVectors(k_c, k_t)


def prune(g: BipartiteGraph) -> tuple[BipartiteGraph, list[EntityId]]:
    """Drop degree-0 nodes, returning the pruned graph and the removed nodes.

    A single pass reaches the fixpoint: isolated nodes carry no edges, so
    removing them cannot isolate anything else.
    """
    deg = degrees(g)
    keep_c = np.flatnonzero(deg.k_c)
    keep_t = np.flatnonzero(deg.k_t)
    removed = [g.companies[i] for i in np.flatnonzero(deg.k_c == 0)]
    removed += [g.technologies[i] for i in np.flatnonzero(deg.k_t == 0)]
    if not removed:
        return g, []
    if len(keep_c) == 0 or len(keep_t) == 0:
        raise EmptyLayer("pruning removed every node of a layer")

    c_map = {int(old): new for new, old in enumerate(keep_c)}
    t_map = {int(old): new for new, old in enumerate(keep_t)}
    pruned = _from_indices(
        (g.companies[i] for i in keep_c),
        (g.technologies[i] for i in keep_t),
        ((c_map[c], t_map[t]) for c, t in g.edges),
    )
    return pruned, removed


def connected_components(g: BipartiteGraph) -> list[frozenset[EntityId]]:
    """Maximal connected node sets, ordered by their smallest node index.

    Nodes are indexed companies first, then technologies.
    """
    n = g.n_companies + g.n_technologies
    m = g.adjacency
    coo = m.tocoo()
    rows = np.concatenate([coo.row, coo.col + g.n_companies])
    cols = np.concatenate([coo.col + g.n_companies, coo.row])
    a = sparse.csr_array((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    _, labels = csgraph.connected_components(a, directed=False)

    nodes = list(g.companies) + list(g.technologies)
    groups: dict[int, list[EntityId]] = {}
    # node indices ascend, so dict insertion order is by smallest member
    for i, lab in enumerate(labels):
        groups.setdefault(int(lab), []).append(nodes[i])
    return [frozenset(members) for members in groups.values()]


def subgraph(g: BipartiteGraph, nodes: Iterable[EntityId]) -> BipartiteGraph:
    """Induced subgraph on ``nodes``, keeping the parent's node order."""
    keep = set(nodes)
    comps = [i for i, e in enumerate(g.companies) if e in keep]
    techs = [i for i, e in enumerate(g.technologies) if e in keep]
    c_map = {old: new for new, old in enumerate(comps)}
    t_map = {old: new for new, old in enumerate(techs)}
    return _from_indices(
        (g.companies[i] for i in comps),
        (g.technologies[i] for i in techs),
        ((c_map[c], t_map[t]) for c, t in g.edges if c in c_map and t in t_map),
    )
