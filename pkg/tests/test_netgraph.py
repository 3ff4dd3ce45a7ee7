import numpy as np
import pytest

from geoduio.errors import ValidationError
from geoduio.netgraph import Graph, complete_graph, is_connected, laplacian, path_graph


def test_laplacian_path():
    L = laplacian(path_graph(3))
    assert np.array_equal(L, [[1, -1, 0], [-1, 2, -1], [0, -1, 1]])


@pytest.mark.parametrize("adj", [
    [[0, 2], [2, 0]],
    [[0, 1], [0, 0]],
    [[1, 0], [0, 0]],
    [[0.5]],
])
def test_invalid_adjacency(adj):
    with pytest.raises(ValidationError):
        Graph(adj)


def test_connectivity():
    assert is_connected(Graph([[0]]))
    assert not is_connected(Graph(np.zeros((2, 2))))
    assert is_connected(path_graph(4))
    assert is_connected(complete_graph(5))


def test_graph_equality_and_immutability():
    g = path_graph(4)
    assert g == path_graph(4) and hash(g) == hash(path_graph(4))
    assert g != complete_graph(4)
    with pytest.raises(ValueError):
        g.adjacency[0, 1] = 0.0


def test_fiedler_value_positive():
    lam = np.linalg.eigvalsh(laplacian(path_graph(6)))
    assert abs(lam[0]) < 1e-12 and lam[1] > 0
