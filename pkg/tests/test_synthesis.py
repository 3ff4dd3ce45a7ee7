import numpy as np
import pytest

from geoduio import cases, synthesis
from geoduio.errors import JointConditionViolated, NotPositiveDefinite, ValidationError
from geoduio.geomctl import GoodRegion
from geoduio.matlin import Subspace
from geoduio.netgraph import Graph, path_graph
from geoduio.synthesis import NodeSpec


@pytest.fixture(scope="module")
def platoon():
    A, B, nodes, graph = cases.build_platoon()
    design = synthesis.synthesize(A, nodes, graph, GoodRegion(0.5), 2.0,
                                  pole_targets=[-10.0, -12.0, -14.0])
    return A, B, nodes, graph, design


def test_node_spec_partition():
    B = np.eye(3)
    spec = NodeSpec.from_partition(0, np.eye(3)[:2], B, [2])
    assert spec.known == (2,) and spec.unknown == (0, 1)
    assert np.array_equal(spec.Bbar, B[:, :2])
    with pytest.raises(ValidationError):
        NodeSpec.from_partition(0, np.eye(3)[:1], B, [0, 1])  # l_i > p_i
    with pytest.raises(ValidationError):
        NodeSpec.from_partition(0, np.eye(3), B, [5])


def test_rank_and_joint_conditions(platoon):
    _, _, nodes, _, design = platoon
    assert not any(synthesis.check_rank_condition(s) for s in nodes)
    assert synthesis.check_joint_condition(design.nodes)
    e = Subspace.span(np.eye(3)[:, [0]])
    assert not synthesis.check_joint_condition([e, e])
    assert synthesis.check_joint_condition([e, Subspace.span(np.eye(3)[:, [1]])])


def test_rank_condition_holds_when_outputs_see_inputs():
    spec = NodeSpec.from_partition(0, np.eye(2), np.eye(2), [0])
    assert synthesis.check_rank_condition(spec)


def test_platoon_design_structure(platoon):
    A, _, _, _, design = platoon
    for nd in design.nodes:
        assert nd.w == 9
        assert nd.Wg.contains(Subspace.span(nd.spec.Bbar))
        ev = np.linalg.eigvals(nd.induced)
        assert np.all(ev.real < -0.5)
        assert np.allclose(np.sort(ev.real), [-14.0, -12.0, -10.0], atol=1e-6)


def test_gains_above_bounds(platoon):
    _, _, _, graph, design = platoon
    bounds = synthesis.gain_bounds(design.nodes, design.Q, 2.0)
    assert design.chi == pytest.approx(1.1 * bounds.chi)
    assert design.gamma == pytest.approx(1.1 * bounds.gamma)
    a_norm = max(np.linalg.norm(nd.restricted, 2) for nd in design.nodes)
    smin = np.linalg.svd(design.Q, compute_uv=False)[-1]
    assert bounds.chi == pytest.approx(a_norm / smin)
    # ||Bbar||_1 = 1/tau and ||W||_inf over orthonormal bases
    assert bounds.gamma == pytest.approx(2.0 / 0.07 * max(
        np.abs(nd.insertion).sum(axis=1).max() for nd in design.nodes))


def test_Q_is_positive_definite_and_symmetric(platoon):
    Q = platoon[4].Q
    assert np.allclose(Q, Q.T)
    assert np.linalg.eigvalsh(Q)[0] > 0


def test_build_Q_rejects_shared_direction():
    A = -np.eye(2)
    specs = [NodeSpec.from_partition(i, np.zeros((1, 2)), np.array([[1.0], [0.0]]), [])
             for i in range(2)]
    designs = [synthesis.design_node(A, s) for s in specs]
    with pytest.raises(NotPositiveDefinite):
        synthesis.build_Q(designs, path_graph(2))
    with pytest.raises(JointConditionViolated):
        synthesis.synthesize(A, specs, path_graph(2))


def test_disconnected_graph_rejected():
    A, _, nodes, _ = cases.build_platoon()
    with pytest.raises(ValidationError, match="Assumption 1"):
        synthesis.synthesize(A, nodes, Graph(np.zeros((4, 4))))


def test_safety_must_exceed_one(platoon):
    _, _, _, graph, design = platoon
    with pytest.raises(ValidationError):
        synthesis.compute_gains(design.nodes, graph, 2.0, safety=1.0)


def test_with_gains_keeps_structure(platoon):
    d2 = platoon[4].with_gains(1.0, 2.0)
    assert (d2.chi, d2.gamma) == (1.0, 2.0)
    assert d2.nodes is platoon[4].nodes
