"""Graph representation and the four random graph families."""

import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Callable, Dict, Iterable, Optional, Sequence

import networkx as nx
import numpy as np

from .linalg import jacobi_eigh
from .utils import make_rng

logger = logging.getLogger(__name__)

MIN_VERTICES = 4
MAX_VERTICES = 24
MAX_ATTEMPTS = 1000

ER_EDGE_PROB = 0.5
BA_ATTACHMENT = 2
WS_RING_DEGREE = 4
WS_REWIRE_PROB = 0.3


class GenerationError(RuntimeError):
    """Raised when a generator cannot produce a valid graph within the retry cap."""


class Family(str, Enum):
    """Random graph families used for training and evaluation."""

    ER = "ER"
    REG3 = "REG3"
    BA = "BA"
    WS = "WS"


Edge = tuple[int, int]


@dataclass(frozen=True)
class Graph:
    """
    Undirected, unweighted simple graph.

    Parameters
    ----------
    n : int
        Number of vertices, labelled ``0..n-1``.
    edges : tuple of (int, int)
        Sorted edge list with ``i < j`` in every pair.
    family : Family, optional
        Generating family, ``None`` for hand-built graphs.
    seed : int, optional
        Seed the generator was called with.
    """

    n: int
    edges: tuple[Edge, ...]
    family: Optional[Family] = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"Graph needs at least one vertex, got n={self.n}")
        seen = set()
        for i, j in self.edges:
            if not 0 <= i < j < self.n:
                raise ValueError(f"Invalid edge ({i}, {j}) for n={self.n}")
            if (i, j) in seen:
                raise ValueError(f"Duplicate edge ({i}, {j})")
            seen.add((i, j))

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: Iterable[Sequence[int]],
        family: Optional[Family] = None,
        seed: int = 0,
    ) -> "Graph":
        """
        Build a graph from an arbitrary edge iterable.

        Pairs are normalized to ``(min, max)`` and sorted.

        Parameters
        ----------
        n : int
            Number of vertices.
        edges : iterable of pairs
            Edge endpoints in any order.
        family : Family, optional
            Family tag.
        seed : int, optional
            Generation seed.

        Returns
        -------
        Graph
        """
        normalized = sorted({(min(int(a), int(b)), max(int(a), int(b))) for a, b in edges})
        if any(a == b for a, b in normalized):
            raise ValueError("Self-loops are not allowed")
        return cls(n=n, edges=tuple(normalized), family=family, seed=seed)

    @property
    def m(self) -> int:
        """Number of edges."""
        return len(self.edges)

    @cached_property
    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.n, self.n), dtype=np.float64)
        for i, j in self.edges:
            adj[i, j] = adj[j, i] = 1.0
        adj.setflags(write=False)
        return adj

    @cached_property
    def degrees(self) -> np.ndarray:
        deg = self.adjacency.sum(axis=1)
        deg.setflags(write=False)
        return deg

    @cached_property
    def laplacian(self) -> np.ndarray:
        lap = np.diag(self.degrees) - self.adjacency
        lap.setflags(write=False)
        return lap

    @cached_property
    def spectrum(self) -> tuple[np.ndarray, np.ndarray]:
        """Cached ``(eigenvalues, eigenvectors)`` of the Laplacian."""
        values, vectors = jacobi_eigh(self.laplacian)
        values.setflags(write=False)
        vectors.setflags(write=False)
        return values, vectors

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n))
        graph.add_edges_from(self.edges)
        return graph

    def is_connected(self) -> bool:
        return nx.is_connected(self.to_networkx())

    def relabel(self, permutation: Sequence[int]) -> "Graph":
        """
        Return the isomorphic graph with vertex ``v`` renamed ``permutation[v]``.

        Parameters
        ----------
        permutation : sequence of int
            A permutation of ``range(n)``.

        Returns
        -------
        Graph
        """
        perm = [int(v) for v in permutation]
        if sorted(perm) != list(range(self.n)):
            raise ValueError("Relabeling must be a permutation of range(n)")
        return Graph.from_edges(
            self.n,
            ((perm[i], perm[j]) for i, j in self.edges),
            family=self.family,
            seed=self.seed,
        )


def _nx_seed(rng: np.random.Generator) -> int:
    return int(rng.integers(2**32))


def _edges_of(graph: nx.Graph) -> list[Edge]:
    return sorted((min(a, b), max(a, b)) for a, b in graph.edges())


def _erdos_renyi(n: int, rng: np.random.Generator) -> list[Edge]:
    return _edges_of(nx.gnp_random_graph(n, ER_EDGE_PROB, seed=_nx_seed(rng)))


def _random_regular3(n: int, rng: np.random.Generator) -> list[Edge]:
    return _edges_of(nx.random_regular_graph(3, n, seed=_nx_seed(rng)))


def _barabasi_albert(n: int, rng: np.random.Generator) -> list[Edge]:
    # networkx seeds BA from a star on m+1 vertices; this family grows from a single edge
    edges = [(0, 1)]
    degree = np.zeros(n, dtype=np.float64)
    degree[[0, 1]] = 1.0
    for v in range(2, n):
        count = min(BA_ATTACHMENT, v)
        weights = degree[:v] / degree[:v].sum()
        targets = rng.choice(v, size=count, replace=False, p=weights)
        for t in sorted(int(x) for x in targets):
            edges.append((t, v))
            degree[t] += 1.0
        degree[v] += count
    return edges


def _watts_strogatz(n: int, rng: np.random.Generator) -> list[Edge]:
    return _edges_of(nx.watts_strogatz_graph(n, WS_RING_DEGREE, WS_REWIRE_PROB, seed=_nx_seed(rng)))


_GENERATORS: Dict[Family, Callable[[int, np.random.Generator], list[Edge]]] = {
    Family.ER: _erdos_renyi,
    Family.REG3: _random_regular3,
    Family.BA: _barabasi_albert,
    Family.WS: _watts_strogatz,
}

_DESCRIPTIONS: Dict[Family, str] = {
    Family.ER: f"Erdos-Renyi G(n, {ER_EDGE_PROB})",
    Family.REG3: "Uniform random 3-regular",
    Family.BA: f"Barabasi-Albert preferential attachment, m={BA_ATTACHMENT}",
    Family.WS: f"Watts-Strogatz ring degree {WS_RING_DEGREE}, rewiring {WS_REWIRE_PROB}",
}


def get_family(name: Family | str) -> Family:
    """
    Resolve a family name.

    Parameters
    ----------
    name : str
        One of ``ER``, ``REG3``, ``BA``, ``WS`` (case-insensitive).

    Returns
    -------
    Family

    Raises
    ------
    ValueError
        If the family name is not found.
    """
    if isinstance(name, Family):
        return name
    try:
        return Family(str(name).upper())
    except ValueError:
        raise ValueError(
            f"Unknown graph family {name!r}. Available: {[f.value for f in Family]}"
        ) from None


def list_families() -> Dict[str, str]:
    """Map family names to short descriptions."""
    return {family.value: _DESCRIPTIONS[family] for family in Family}


def generate(family: Family | str, n: int, seed: int) -> Graph:
    """
    Generate a connected random graph of the given family.

    Disconnected draws are regenerated with an incremented sub-seed.

    Parameters
    ----------
    family : Family or str
        Graph family.
    n : int
        Number of vertices, ``4 <= n <= 24``; even for REG3.
    seed : int
        Non-negative seed; the same ``(family, n, seed)`` always gives the
        same graph.

    Returns
    -------
    Graph

    Raises
    ------
    ValueError
        If ``n`` is invalid for the family.
    GenerationError
        If no connected graph is found within the retry cap.
    """
    family = get_family(family)
    if not MIN_VERTICES <= n <= MAX_VERTICES:
        raise ValueError(
            f"n must be in [{MIN_VERTICES}, {MAX_VERTICES}], got {n}"
        )
    if family is Family.REG3 and n % 2:
        raise ValueError(f"REG3 requires an even number of vertices, got {n}")

    builder = _GENERATORS[family]
    for attempt in range(MAX_ATTEMPTS):
        rng = make_rng(seed, "generate", family.value, n, attempt)
        graph = Graph.from_edges(n, builder(n, rng), family=family, seed=seed)
        if graph.is_connected():
            if attempt:
                logger.debug("%s n=%d seed=%d connected after %d retries", family.value, n, seed, attempt)
            return graph
    raise GenerationError(
        f"No connected {family.value} graph with n={n} after {MAX_ATTEMPTS} attempts"
    )
