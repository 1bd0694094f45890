"""Laplacian spectral encodings and graph-level feature vectors."""

from dataclasses import astuple, dataclass
from typing import Optional

import networkx as nx
import numpy as np

from .graphs import Graph
from .utils import make_rng

DEFAULT_PE_DIM = 6
SIGN_ATOL = 1e-9


@dataclass(frozen=True)
class SpectralEncoding:
    """
    Low-frequency Laplacian eigenvectors used as positional node features.

    Parameters
    ----------
    k : int
        Encoding dimension.
    vectors : np.ndarray
        ``n x k`` matrix; column ``j`` is the eigenvector of the ``(j+1)``-th
        smallest eigenvalue, zero when ``n - 1 < j + 1``.
    eigenvalues : np.ndarray
        The ``k`` matching eigenvalues, zero-padded like ``vectors``.
    """

    k: int
    vectors: np.ndarray
    eigenvalues: np.ndarray


@dataclass(frozen=True)
class HandcraftedFeatures:
    """Eight graph statistics used by the k-NN baseline."""

    density: float
    mean_degree: float
    degree_std: float
    clustering: float
    fiedler: float
    spectral_radius: float
    n: int
    m: int

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=np.float64)


def laplacian_eigs(g: Graph) -> tuple[np.ndarray, np.ndarray]:
    """
    Eigenvalues (ascending) and orthonormal eigenvectors of ``L = D - A``.

    Parameters
    ----------
    g : Graph

    Returns
    -------
    tuple[np.ndarray, np.ndarray]
        Writable copies of the cached decomposition.
    """
    values, vectors = g.spectrum
    return values.copy(), vectors.copy()


def _orientation(column: np.ndarray, degrees: Optional[np.ndarray]) -> float:
    # first odd power sum that is clearly nonzero, then degree-weighted sums
    n = column.size
    candidates = [(column, 2 * t + 1) for t in range(1, n + 1)]
    if degrees is not None:
        candidates += [(column * degrees, 1), (column * degrees, 3)]
    for values, power in candidates:
        total = float(np.sum(values**power))
        scale = float(np.sum(np.abs(values) ** power))
        if scale > 0 and abs(total) > SIGN_ATOL * scale:
            return 1.0 if total > 0 else -1.0
    return 1.0


def canonical_signs(vectors: np.ndarray, degrees: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Orient each column independently of the vertex order.

    A column is flipped when its first clearly nonzero odd power sum
    ``sum(v**3), sum(v**5), ...`` is negative; if all of them vanish the
    degree-weighted sums decide. Columns whose entries are symmetric under
    negation (and degree-weighted sums vanish) are left unchanged.

    Parameters
    ----------
    vectors : np.ndarray
        ``n x k`` matrix of eigenvectors.
    degrees : np.ndarray, optional
        Vertex degrees used as a tie-breaker.

    Returns
    -------
    np.ndarray
    """
    out = np.array(vectors, dtype=np.float64)
    for j in range(out.shape[1]):
        out[:, j] *= _orientation(out[:, j], degrees)
    return out


def random_signs(k: int, rng: np.random.Generator) -> np.ndarray:
    """Independent ``+1``/``-1`` column signs."""
    return rng.choice(np.array([-1.0, 1.0]), size=k)


def spectral_encoding(
    g: Graph, k: int = DEFAULT_PE_DIM, sign_seed: Optional[int] = None
) -> SpectralEncoding:
    """
    Spectral positional encoding of a graph.

    Parameters
    ----------
    g : Graph
    k : int, optional
        Encoding dimension; ``0`` yields an empty encoding.
    sign_seed : int, optional
        When given, every column is multiplied by an independent random sign
        (training-time augmentation). Otherwise the canonical sign convention
        is used.

    Returns
    -------
    SpectralEncoding
    """
    if k < 0:
        raise ValueError(f"Encoding dimension must be non-negative, got {k}")
    values, vectors = g.spectrum
    take = min(k, g.n - 1)
    enc = np.zeros((g.n, k), dtype=np.float64)
    eig = np.zeros(k, dtype=np.float64)
    enc[:, :take] = canonical_signs(vectors[:, 1 : 1 + take], g.degrees)
    eig[:take] = values[1 : 1 + take]
    if sign_seed is not None:
        enc *= random_signs(k, make_rng(sign_seed, "pe-signs"))
    return SpectralEncoding(k=k, vectors=enc, eigenvalues=eig)


def node_features(g: Graph, enc: SpectralEncoding) -> np.ndarray:
    """
    Node feature matrix ``[d_v / n, PE_v]`` of shape ``n x (k + 1)``.

    Raises
    ------
    ValueError
        If the encoding was computed for a different vertex count.
    """
    if enc.vectors.shape[0] != g.n:
        raise ValueError(
            f"Encoding has {enc.vectors.shape[0]} rows but the graph has {g.n} vertices"
        )
    return np.column_stack([g.degrees / g.n, enc.vectors])


def handcrafted(g: Graph) -> HandcraftedFeatures:
    """
    Density, degree statistics, mean local clustering, ``lambda_2``,
    ``lambda_n``, ``n`` and ``m``.
    """
    if g.n < 2:
        raise ValueError("Handcrafted features need at least two vertices")
    values, _ = g.spectrum
    degrees = np.asarray(g.degrees)
    return HandcraftedFeatures(
        density=2.0 * g.m / (g.n * (g.n - 1)),
        mean_degree=float(degrees.mean()),
        degree_std=float(degrees.std()),
        clustering=float(nx.average_clustering(g.to_networkx())),
        fiedler=float(values[1]),
        spectral_radius=float(values[-1]),
        n=g.n,
        m=g.m,
    )
