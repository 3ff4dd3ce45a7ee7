"""Assembly of a distributed unknown-input observer design.

For every node the unknown-input subspace is computed by
:func:`geoduio.geomctl.wstar_g`, a stabilizing output injection is chosen,
and the quotient split of ``A + L_i C_i`` is recorded.  The nodes are then
coupled: the subspaces must intersect trivially, the coupling Gram matrix
``Q`` must be positive definite, and the two consensus gains are set just
above their theoretical lower bounds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
import scipy.linalg

from . import geomctl, matlin
from .errors import (DimensionError, JointConditionViolated, NotPositiveDefinite,
                     ValidationError)
from .geomctl import GoodRegion
from .matlin import Subspace, Tolerances
from .netgraph import Graph, is_connected, laplacian

__all__ = [
    "NodeSpec", "NodeDesign", "DuioDesign", "Gains", "check_rank_condition",
    "check_joint_condition", "build_Q", "gain_bounds", "compute_gains",
    "design_node", "synthesize", "stack_insertions", "stack_projections",
    "SAFETY_FACTOR",
]

SAFETY_FACTOR = 1.1


@dataclass(frozen=True)
class NodeSpec:
    """Sensing and input partition of one node.

    ``known`` lists the global input indices available at the node; the
    remaining columns of ``B`` form the unknown-input channel ``Bbar``.
    """

    index: int
    C: np.ndarray
    B: np.ndarray
    Bbar: np.ndarray
    known: tuple[int, ...] = ()
    unknown: tuple[int, ...] = ()

    @classmethod
    def from_partition(cls, index: int, C, B_global, known: Sequence[int]) -> "NodeSpec":
        C = matlin.as_mat(C, f"C_{index}")
        B_global = matlin.as_mat(B_global, "B")
        m = B_global.shape[1]
        known = tuple(sorted(int(k) for k in known))
        if len(set(known)) != len(known) or any(k < 0 or k >= m for k in known):
            raise ValidationError(f"node {index}: known-input indices {known} invalid for m={m}")
        unknown = tuple(k for k in range(m) if k not in known)
        spec = cls(index=index, C=C, B=B_global[:, list(known)], Bbar=B_global[:, list(unknown)],
                   known=known, unknown=unknown)
        spec.validate()
        return spec

    @property
    def n(self) -> int:
        return self.C.shape[1]

    def validate(self):
        n = self.C.shape[1]
        if self.B.shape[0] != n or self.Bbar.shape[0] != n:
            raise DimensionError(f"node {self.index}: C, B, Bbar are not conformable")
        l_i, p_i = self.B.shape[1], self.C.shape[0]
        if not (l_i <= p_i <= n):
            raise ValidationError(
                f"node {self.index}: need l_i <= p_i <= n, got l_i={l_i}, p_i={p_i}, n={n}")


@dataclass(frozen=True, eq=False)
class NodeDesign:
    """Synthesis result for one node."""

    spec: NodeSpec
    Wg: Subspace
    L: np.ndarray
    A_L: np.ndarray
    insertion: np.ndarray
    projection: np.ndarray
    restricted: np.ndarray
    induced: np.ndarray
    wstar: geomctl.WstarResult | None = field(default=None, repr=False)

    @property
    def w(self) -> int:
        return self.Wg.dim


class Gains(NamedTuple):
    chi: float
    gamma: float


@dataclass(frozen=True, eq=False)
class DuioDesign:
    """A complete network design ready for simulation."""

    A: np.ndarray
    nodes: tuple[NodeDesign, ...]
    graph: Graph
    chi: float
    gamma: float
    u_bar_max: float
    Q: np.ndarray
    margin: float = 0.5

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def N(self) -> int:
        return len(self.nodes)

    def with_gains(self, chi: float, gamma: float) -> "DuioDesign":
        """Copy with the coupling gains replaced."""
        return DuioDesign(A=self.A, nodes=self.nodes, graph=self.graph, chi=float(chi),
                          gamma=float(gamma), u_bar_max=self.u_bar_max, Q=self.Q,
                          margin=self.margin)


def check_rank_condition(node: NodeSpec, tol: Tolerances | None = None) -> bool:
    """The classical per-node requirement rank(C_i Bbar_i) = rank(Bbar_i)."""
    scale = max(matlin.norms(node.C).two * matlin.norms(node.Bbar).two, 1.0)
    return matlin.rank(node.C @ node.Bbar, tol, scale=scale) == matlin.rank(node.Bbar, tol)


def check_joint_condition(designs: Sequence, tol: Tolerances | None = None) -> bool:
    """True when the node subspaces intersect only in the origin.

    Accepts NodeDesign objects or bare Subspaces.
    """
    subspaces = [d.Wg if isinstance(d, NodeDesign) else d for d in designs]
    if not subspaces:
        raise ValidationError("no node subspaces given")
    if len({S.ambient_dim for S in subspaces}) != 1:
        raise DimensionError("node subspaces live in different ambient spaces")
    inter = subspaces[0]
    for S in subspaces[1:]:
        if inter.dim == 0:
            break
        inter = matlin.intersect(inter, S, tol)
    return inter.dim == 0


def stack_insertions(designs: Sequence[NodeDesign]) -> np.ndarray:
    """Block-diagonal matrix of the node insertion maps (nN x sum w_i)."""
    return scipy.linalg.block_diag(*[d.insertion for d in designs])


def stack_projections(designs: Sequence[NodeDesign]) -> np.ndarray:
    """Block-diagonal matrix of the transposed node projections (nN x sum(n - w_i))."""
    return scipy.linalg.block_diag(*[d.projection.T for d in designs])


def build_Q(designs: Sequence[NodeDesign], graph: Graph, *, atol: float = 1e-9) -> np.ndarray:
    """Coupling Gram matrix Wg' (Lap ⊗ I_n) Wg.

    Raises
    ------
    NotPositiveDefinite
        When the smallest eigenvalue is not above ``atol`` times the largest
        Laplacian eigenvalue (happens if the joint condition fails or the
        graph is disconnected).
    """
    if len(designs) != graph.n_nodes:
        raise DimensionError(f"{len(designs)} node designs for a {graph.n_nodes}-node graph")
    n = designs[0].insertion.shape[0]
    Wg = stack_insertions(designs)
    Q = Wg.T @ np.kron(laplacian(graph), np.eye(n)) @ Wg
    Q = 0.5 * (Q + Q.T)
    if Q.size:
        lam_min = np.linalg.eigvalsh(Q)[0]
        ref = max(np.linalg.eigvalsh(laplacian(graph))[-1], 1.0)
        if lam_min <= atol * ref:
            raise NotPositiveDefinite(
                f"coupling matrix has smallest eigenvalue {lam_min:.3g}; "
                "the joint condition or graph connectivity fails")
    return Q


def gain_bounds(designs: Sequence[NodeDesign], Q: np.ndarray, u_bar_max: float) -> Gains:
    """Right-hand sides of the two coupling-gain conditions.

    chi_min = ||blockdiag(restricted)||_2 / sigma_min(Q)
    gamma_min = u_bar_max * max_i ||Bbar_i||_1 * max_i ||W_i||_inf
    """
    if Q.size == 0:
        chi_min = 0.0
    else:
        a_norm = max(matlin.norms(d.restricted).two for d in designs)
        chi_min = a_norm / matlin.norms(Q).sigma_min
    b_norm = max(matlin.norms(d.spec.Bbar).one for d in designs)
    w_norm = max(matlin.norms(d.insertion).inf for d in designs)
    return Gains(chi=float(chi_min), gamma=float(u_bar_max * b_norm * w_norm))


def compute_gains(designs: Sequence[NodeDesign], graph: Graph, u_bar_max: float,
                  safety: float = SAFETY_FACTOR) -> Gains:
    """Coupling gains strictly above their lower bounds (bound times ``safety``)."""
    if u_bar_max < 0:
        raise ValidationError("u_bar_max must be nonnegative")
    if safety <= 1.0:
        raise ValidationError("safety factor must exceed 1")
    bounds = gain_bounds(designs, build_Q(designs, graph), u_bar_max)
    return Gains(chi=safety * bounds.chi, gamma=safety * bounds.gamma)


def design_node(A, spec: NodeSpec, good_region: Callable = GoodRegion(), pole_targets=None,
                tol: Tolerances | None = None) -> NodeDesign:
    """Subspace, injection and quotient split for one node."""
    A = matlin.as_mat(A, "A")
    ws = geomctl.wstar_g(A, spec.C, spec.Bbar, good_region, tol)
    L = geomctl.stabilizing_injection(A, spec.C, ws, good_region, pole_targets, tol)
    A_L = A + L @ spec.C
    quot = geomctl.decompose(A_L, ws.Wg)
    return NodeDesign(spec=spec, Wg=ws.Wg, L=L, A_L=A_L, insertion=quot.insertion,
                      projection=quot.projection, restricted=quot.restricted,
                      induced=quot.induced, wstar=ws)


def synthesize(A, nodes: Sequence[NodeSpec], graph: Graph, good_region: Callable = GoodRegion(),
               u_bar_max: float = 0.0, *, pole_targets=None, safety: float = SAFETY_FACTOR,
               tol: Tolerances | None = None) -> DuioDesign:
    """Full network design.

    Parameters
    ----------
    A : (n, n) array
    nodes : sequence of NodeSpec
        One per graph node, in graph order.
    graph : Graph
        Connected observer communication graph.
    good_region : callable
        Acceptable-eigenvalue predicate (default ``Re < -0.5``).
    u_bar_max : float
        Known bound on every unknown input component.
    pole_targets : array or sequence of arrays, optional
        Placement targets for the freely assignable quotient modes; one
        array shared by all nodes or one per node.

    Raises
    ------
    ValidationError
        Disconnected graph, or node/graph count mismatch.
    JointConditionViolated
        The node subspaces share a nonzero direction.
    """
    A = matlin.as_mat(A, "A")
    if A.shape[0] != A.shape[1]:
        raise DimensionError("A must be square")
    if len(nodes) != graph.n_nodes:
        raise ValidationError(f"{len(nodes)} nodes but the graph has {graph.n_nodes}")
    if not is_connected(graph):
        raise ValidationError("observer graph is not connected (Assumption 1 fails)")
    for spec in nodes:
        spec.validate()
        if spec.n != A.shape[0]:
            raise DimensionError(f"node {spec.index} has n={spec.n}, A has n={A.shape[0]}")

    per_node = _per_node_targets(pole_targets, len(nodes))
    designs = tuple(design_node(A, spec, good_region, per_node[k], tol)
                    for k, spec in enumerate(nodes))
    if not check_joint_condition(designs, tol):
        raise JointConditionViolated("the node subspaces W*_g,i intersect nontrivially")
    Q = build_Q(designs, graph)
    gains = compute_gains(designs, graph, u_bar_max, safety)
    return DuioDesign(A=A, nodes=designs, graph=graph, chi=gains.chi, gamma=gains.gamma,
                      u_bar_max=float(u_bar_max), Q=Q,
                      margin=float(getattr(good_region, "margin", 0.5)))


def _per_node_targets(pole_targets, N):
    if pole_targets is None:
        return [None] * N
    if isinstance(pole_targets, (list, tuple)) and len(pole_targets) == N and all(
            np.ndim(t) == 1 for t in pole_targets):
        return [np.asarray(t, dtype=float) for t in pole_targets]
    shared = np.asarray(pole_targets, dtype=float)
    return [shared] * N
