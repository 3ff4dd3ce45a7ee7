"""Undirected, unweighted communication graphs."""

from __future__ import annotations

from collections import deque

import numpy as np

from .errors import ValidationError

__all__ = ["Graph", "laplacian", "is_connected", "path_graph", "complete_graph"]


class Graph:
    """Undirected graph on ``N`` nodes given by a symmetric 0/1 adjacency
    matrix with zero diagonal."""

    __slots__ = ("_adj",)

    def __init__(self, adjacency):
        adj = np.asarray(adjacency, dtype=float)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1] or adj.shape[0] == 0:
            raise ValidationError(f"adjacency must be a non-empty square matrix, got shape {adj.shape}")
        if not np.all((adj == 0.0) | (adj == 1.0)):
            raise ValidationError("adjacency entries must be 0 or 1 (weighted graphs are not supported)")
        if not np.array_equal(adj, adj.T):
            raise ValidationError("adjacency must be symmetric (undirected graph)")
        if np.any(np.diag(adj) != 0.0):
            raise ValidationError("adjacency must have a zero diagonal")
        adj = adj.copy()
        adj.flags.writeable = False
        self._adj = adj

    @property
    def adjacency(self) -> np.ndarray:
        return self._adj

    @property
    def n_nodes(self) -> int:
        return self._adj.shape[0]

    def neighbors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self._adj[i])

    def __eq__(self, other):
        return isinstance(other, Graph) and np.array_equal(self._adj, other._adj)

    def __hash__(self):
        return hash(self._adj.tobytes())

    def __repr__(self):
        edges = int(self._adj.sum() // 2)
        return f"Graph(n_nodes={self.n_nodes}, edges={edges})"


def laplacian(G: Graph) -> np.ndarray:
    """Graph Laplacian D - A."""
    adj = G.adjacency
    return np.diag(adj.sum(axis=1)) - adj


def is_connected(G: Graph) -> bool:
    """Breadth-first search from node 0 reaches every node."""
    seen = np.zeros(G.n_nodes, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for j in G.neighbors(i):
            if not seen[j]:
                seen[j] = True
                queue.append(j)
    return bool(seen.all())


def path_graph(n: int) -> Graph:
    adj = np.zeros((n, n))
    idx = np.arange(n - 1)
    adj[idx, idx + 1] = adj[idx + 1, idx] = 1.0
    return Graph(adj)


def complete_graph(n: int) -> Graph:
    return Graph(np.ones((n, n)) - np.eye(n))
