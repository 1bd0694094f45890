"""
Graph Isomorphism Network that predicts a diagonal Gaussian over QAOA angles,
and the three training losses.
"""

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch
from torch import nn
from torch.nn import functional as F

from .graphs import Graph
from .spectral import DEFAULT_PE_DIM, node_features, random_signs, spectral_encoding

LOGVAR_MIN = -5.0
LOGVAR_MAX = 2.0
HIDDEN_DIM = 64
NUM_LAYERS = 3
DEPTH = 2

DTYPE = torch.float64


@dataclass(frozen=True)
class GaussianPrediction:
    """
    Predicted angle distribution ``N(mu, diag(var))``.

    Parameters
    ----------
    mu : np.ndarray
        Mean, length ``2p``.
    var : np.ndarray
        Positive variances, length ``2p``.
    """

    mu: np.ndarray
    var: np.ndarray

    def __post_init__(self) -> None:
        if self.mu.shape != self.var.shape:
            raise ValueError("mu and var must have the same shape")
        if np.any(self.var <= 0):
            raise ValueError("Variances must be positive")

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(self.var)

    @property
    def p(self) -> int:
        return self.mu.size // 2


@dataclass(frozen=True)
class GraphBatch:
    """
    Padded dense batch of graphs.

    Parameters
    ----------
    features : torch.Tensor
        ``B x N x (k + 1)`` node features, zero on padded nodes.
    adjacency : torch.Tensor
        ``B x N x N`` row-normalized ``A + I``, zero rows on padded nodes.
    mask : torch.Tensor
        ``B x N`` boolean, true on real nodes.
    """

    features: torch.Tensor
    adjacency: torch.Tensor
    mask: torch.Tensor

    @classmethod
    def from_graphs(cls, graphs: Sequence[Graph], k: int = DEFAULT_PE_DIM) -> "GraphBatch":
        """Batch graphs with canonical-sign spectral encodings."""
        if not graphs:
            raise ValueError("Cannot batch an empty sequence of graphs")
        size = max(g.n for g in graphs)
        feats = np.zeros((len(graphs), size, k + 1))
        adj = np.zeros((len(graphs), size, size))
        mask = np.zeros((len(graphs), size), dtype=bool)
        for b, g in enumerate(graphs):
            feats[b, : g.n] = node_features(g, spectral_encoding(g, k))
            self_loops = g.adjacency + np.eye(g.n)
            adj[b, : g.n, : g.n] = self_loops / self_loops.sum(axis=1, keepdims=True)
            mask[b, : g.n] = True
        return cls(
            features=torch.as_tensor(feats, dtype=DTYPE),
            adjacency=torch.as_tensor(adj, dtype=DTYPE),
            mask=torch.as_tensor(mask),
        )

    @property
    def size(self) -> int:
        return self.features.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[-1]

    def with_sign_flips(self, rng: np.random.Generator) -> "GraphBatch":
        """Copy with every positional-encoding column of every graph multiplied by a random sign."""
        k = self.feature_dim - 1
        if k == 0:
            return self
        signs = np.stack([random_signs(k, rng) for _ in range(self.size)])
        factor = torch.ones(self.size, 1, k + 1, dtype=DTYPE)
        factor[:, 0, 1:] = torch.as_tensor(signs, dtype=DTYPE)
        return GraphBatch(self.features * factor, self.adjacency, self.mask)

    def permuted(self, index: int, permutation: Sequence[int]) -> "GraphBatch":
        """Copy where the real nodes of graph ``index`` are reordered."""
        n = int(self.mask[index].sum())
        perm = torch.as_tensor(list(permutation), dtype=torch.long)
        if sorted(perm.tolist()) != list(range(n)):
            raise ValueError("Expected a permutation of the graph's nodes")
        feats = self.features.clone()
        adj = self.adjacency.clone()
        feats[index, :n] = self.features[index, perm]
        adj[index, :n, :n] = self.adjacency[index][perm][:, perm]
        return GraphBatch(feats, adj, self.mask)


class GINLayer(nn.Module):
    """``LayerNorm(MLP((1 + eps) h_v + sum_u A_hat[v, u] h_u))``."""

    def __init__(self, in_dim: int, hidden: int = HIDDEN_DIM):
        super().__init__()
        self.eps = nn.Parameter(torch.zeros(1, dtype=DTYPE))
        self.mlp = nn.Sequential(
            nn.Linear(in_dim, hidden, dtype=DTYPE),
            nn.ReLU(),
            nn.Linear(hidden, hidden, dtype=DTYPE),
        )
        self.norm = nn.LayerNorm(hidden, dtype=DTYPE)

    def forward(self, h: torch.Tensor, adjacency: torch.Tensor) -> torch.Tensor:
        return self.norm(self.mlp((1.0 + self.eps) * h + torch.bmm(adjacency, h)))


class GINModel(nn.Module):
    """
    Three GIN blocks, mean and max pooling, and two linear heads.

    Parameters
    ----------
    k : int, optional
        Spectral encoding dimension expected in the node features.
    p : int, optional
        QAOA depth; the heads output ``2p`` values.
    hidden : int, optional
        Width of every block.
    layers : int, optional
        Number of GIN blocks.
    gaussian : bool, optional
        Whether the model has a log-variance head. A point model (``False``)
        predicts unit variance.
    seed : int, optional
        Seed of the Glorot-uniform initialization.
    """

    def __init__(
        self,
        k: int = DEFAULT_PE_DIM,
        p: int = DEPTH,
        hidden: int = HIDDEN_DIM,
        layers: int = NUM_LAYERS,
        gaussian: bool = True,
        seed: int = 0,
    ):
        super().__init__()
        self.k = k
        self.p = p
        self.hidden = hidden
        self.num_layers = layers
        self.gaussian = gaussian
        dims = [k + 1] + [hidden] * layers
        self.blocks = nn.ModuleList(GINLayer(dims[i], hidden) for i in range(layers))
        self.head_mu = nn.Linear(2 * hidden, 2 * p, dtype=DTYPE)
        self.head_logvar = nn.Linear(2 * hidden, 2 * p, dtype=DTYPE) if gaussian else None
        self.reset_parameters(seed)

    @property
    def embedding_dim(self) -> int:
        return 2 * self.hidden

    def reset_parameters(self, seed: int) -> None:
        """Glorot-uniform weights, zero biases, zero epsilons, float32-exact."""
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(seed)
            for module in self.modules():
                if isinstance(module, nn.Linear):
                    nn.init.xavier_uniform_(module.weight)
                    nn.init.zeros_(module.bias)
        self.round_to_float32()

    @torch.no_grad()
    def round_to_float32(self) -> None:
        """Round every parameter to the nearest float32 so checkpoints are exact."""
        for param in self.parameters():
            param.copy_(param.to(torch.float32).to(DTYPE))

    def forward(self, batch: GraphBatch) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """
        Parameters
        ----------
        batch : GraphBatch

        Returns
        -------
        tuple of torch.Tensor
            ``mu`` and clamped ``logvar`` (``B x 2p``), and the pooled graph
            embedding (``B x 2 hidden``).

        Raises
        ------
        ValueError
            If the feature dimension does not match ``k + 1``.
        """
        if batch.feature_dim != self.k + 1:
            raise ValueError(
                f"Model expects {self.k + 1} node features (k={self.k}), got {batch.feature_dim}"
            )
        mask = batch.mask.unsqueeze(-1).to(DTYPE)
        h = batch.features
        for block in self.blocks:
            h = block(h, batch.adjacency) * mask
        counts = mask.sum(dim=1).clamp_min(1.0)
        mean_pool = h.sum(dim=1) / counts
        max_pool = h.masked_fill(~batch.mask.unsqueeze(-1), float("-inf")).amax(dim=1)
        embedding = torch.cat([mean_pool, max_pool], dim=-1)
        mu = self.head_mu(embedding)
        if self.head_logvar is None:
            logvar = torch.zeros_like(mu)
        else:
            logvar = self.head_logvar(embedding).clamp(LOGVAR_MIN, LOGVAR_MAX)
        return mu, logvar, embedding

    @torch.no_grad()
    def predict_batch(self, graphs: Sequence[Graph]) -> list[GaussianPrediction]:
        was_training = self.training
        self.eval()
        mu, logvar, _ = self(GraphBatch.from_graphs(graphs, self.k))
        self.train(was_training)
        var = torch.exp(logvar)
        return [
            GaussianPrediction(mu=mu[i].numpy().copy(), var=var[i].numpy().copy())
            for i in range(len(graphs))
        ]

    def predict(self, graph: Graph) -> GaussianPrediction:
        return self.predict_batch([graph])[0]

    @torch.no_grad()
    def embed(self, graph: Graph) -> np.ndarray:
        _, _, embedding = self(GraphBatch.from_graphs([graph], self.k))
        return embedding[0].numpy().copy()


def loss_nll(mu: torch.Tensor, logvar: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Gaussian negative log-likelihood (without constants), averaged over the batch."""
    per_item = ((mu - target) ** 2 / torch.exp(logvar) + logvar).sum(dim=-1)
    return per_item.mean()


def loss_mse(mu: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Squared error of the mean, summed over angles and averaged over the batch."""
    return ((mu - target) ** 2).sum(dim=-1).mean()


def _pairwise_sq_dist(x: torch.Tensor) -> torch.Tensor:
    diff = x.unsqueeze(1) - x.unsqueeze(0)
    return (diff**2).sum(dim=-1)


def loss_w2(
    mu: torch.Tensor, logvar: torch.Tensor, target: torch.Tensor, tau_w: float
) -> torch.Tensor:
    """
    Target-weighted pairwise squared 2-Wasserstein distance between predictions.

    ``(1/|B|^2) sum_{i != j} exp(-|t_i - t_j|^2 / (2 tau^2)) W2^2(P_i, P_j)``
    with ``W2^2 = |mu_i - mu_j|^2 + |sigma_i - sigma_j|^2``.
    """
    size = mu.shape[0]
    if size < 2:
        return mu.new_zeros(())
    std = torch.exp(0.5 * logvar)
    w2 = _pairwise_sq_dist(mu) + _pairwise_sq_dist(std)
    weights = torch.exp(-_pairwise_sq_dist(target) / (2.0 * tau_w**2))
    off_diag = ~torch.eye(size, dtype=torch.bool)
    return (weights * w2)[off_diag].sum() / size**2


def loss_contrastive(
    embeddings: torch.Tensor, target: torch.Tensor, delta: float, tau_c: float
) -> torch.Tensor:
    """
    Supervised contrastive loss over graph embeddings.

    Pairs whose targets are closer than ``delta`` are positives. Anchors
    without positives contribute zero; the sum is divided by ``|B|``.
    """
    size = embeddings.shape[0]
    if size < 2:
        return embeddings.new_zeros(())
    normed = F.normalize(embeddings, dim=-1, eps=1e-12)
    eye = torch.eye(size, dtype=torch.bool)
    logits = (normed @ normed.T / tau_c).masked_fill(eye, -1e9)
    log_prob = logits - torch.logsumexp(logits, dim=1, keepdim=True)
    positives = (torch.sqrt(_pairwise_sq_dist(target).clamp_min(0.0)) < delta) & ~eye
    counts = positives.sum(dim=1)
    summed = torch.where(positives, log_prob, torch.zeros_like(log_prob)).sum(dim=1)
    has_pos = counts > 0
    per_anchor = torch.where(has_pos, -summed / counts.clamp_min(1), torch.zeros_like(summed))
    return per_anchor.sum() / size


def median_pairwise_distance(targets: np.ndarray) -> float:
    """Median Euclidean distance over unordered target pairs, 0 with fewer than two."""
    targets = np.asarray(targets, dtype=np.float64)
    if len(targets) < 2:
        return 0.0
    rows, cols = np.triu_indices(len(targets), k=1)
    return float(np.median(np.linalg.norm(targets[rows] - targets[cols], axis=1)))


def count_parameters(model: nn.Module) -> int:
    return sum(param.numel() for param in model.parameters())


def variance_floor() -> float:
    """Smallest predictable standard deviation, ``exp(LOGVAR_MIN / 2)``."""
    return math.exp(LOGVAR_MIN / 2)

