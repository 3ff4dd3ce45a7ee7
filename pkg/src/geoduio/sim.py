"""Fixed-step simulation of the plant together with all node observers.

Observer of node i::

    dxhat_i = (A + L_i C_i) xhat_i - L_i y_i
              + chi   W_i W_i' s_i
              + gamma W_i switch(W_i' s_i)
              + B_i u_i,            s_i = sum_j a_ij (xhat_j - xhat_i)

``switch`` is the component-wise sign (with sign(0) = 0) or, when a
boundary layer eps > 0 is configured, clip(s / eps, -1, 1).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from . import matlin
from .errors import NumericalBlowup, ValidationError
from .netgraph import laplacian
from .synthesis import DuioDesign, stack_insertions, stack_projections

__all__ = [
    "SimConfig", "Signals", "Trajectory", "switch", "observer_rhs", "simulate",
    "transform_errors", "estimate_unknown_input", "lyapunov_series",
    "decoupling_residual", "max_rise", "convergence_threshold", "write_csv",
    "BLOWUP_LIMIT",
]

BLOWUP_LIMIT = 1e9
HARD_SIGN_MAX_DT = 1e-3


@dataclass(frozen=True)
class SimConfig:
    """Integrator settings (times in seconds)."""

    dt: float = 1e-4
    t_end: float = 5.0
    integrator: str = "rk4"
    boundary_layer: float = 1e-3
    record_stride: int = 1

    def __post_init__(self):
        if not (self.dt > 0):
            raise ValidationError("dt must be positive")
        if not (self.t_end > 0):
            raise ValidationError("t_end must be positive")
        if self.t_end < self.dt:
            raise ValidationError("t_end must be at least dt")
        if self.integrator not in ("euler", "rk4"):
            raise ValidationError(f"unknown integrator {self.integrator!r}")
        if self.boundary_layer < 0:
            raise ValidationError("boundary_layer must be nonnegative")
        if self.boundary_layer == 0 and self.dt >= HARD_SIGN_MAX_DT:
            raise ValidationError(
                f"hard sign switching (boundary_layer=0) needs dt < {HARD_SIGN_MAX_DT}")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ValidationError("record_stride must be a positive integer")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass(frozen=True)
class Signals:
    """Open-loop plant input.

    ``u(t)`` returns the full input vector; node i knows the components
    listed in its ``NodeSpec.known`` and is blind to the rest.
    ``u_bar_max`` is the declared bound on the unknown components.
    """

    u: Callable[[float], np.ndarray]
    u_bar_max: float = np.inf

    def known(self, spec, t) -> np.ndarray:
        return np.asarray(self.u(t), dtype=float)[list(spec.known)]

    def unknown(self, spec, t) -> np.ndarray:
        return np.asarray(self.u(t), dtype=float)[list(spec.unknown)]

    def check_bound(self, design: DuioDesign, times) -> bool:
        """Sampled check that every unknown component respects ``u_bar_max``."""
        for t in times:
            for nd in design.nodes:
                ub = self.unknown(nd.spec, t)
                if ub.size and np.max(np.abs(ub)) > self.u_bar_max:
                    return False
        return True

    @classmethod
    def zero(cls, m: int) -> "Signals":
        return cls(u=lambda t: np.zeros(m), u_bar_max=0.0)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Recorded run.  Arrays are indexed by sample first.

    ``xhat`` and ``e`` have shape (T, N, n); ``uhat_bar`` is a list with one
    (T, q_i) array per node.
    """

    times: np.ndarray
    x: np.ndarray
    xhat: np.ndarray
    e: np.ndarray
    u: np.ndarray
    uhat_bar: list
    eps_a: np.ndarray = field(repr=False)
    eps_b: np.ndarray = field(repr=False)
    lyapunov: np.ndarray = field(repr=False)

    def error_norms(self) -> np.ndarray:
        """(T, N) array of ||e_i(t)||_2."""
        return np.linalg.norm(self.e, axis=2)


def switch(s, boundary_layer: float = 0.0) -> np.ndarray:
    """Component-wise sign, or its saturated-linear smoothing."""
    s = np.asarray(s, dtype=float)
    if boundary_layer > 0:
        return np.clip(s / boundary_layer, -1.0, 1.0)
    return np.sign(s)


def _disagreement(design: DuioDesign, i: int, xhat_all) -> np.ndarray:
    xhat_all = np.asarray(xhat_all, dtype=float)
    adj = design.graph.adjacency[i]
    return adj @ xhat_all - adj.sum() * xhat_all[i]


def observer_rhs(design: DuioDesign, i: int, xhat_all, y_i, u_i, t: float = 0.0,
                 boundary_layer: float = 0.0) -> np.ndarray:
    """Time derivative of node i's estimate (reference, unvectorized form).

    ``xhat_all`` is the (N, n) array of all current estimates.
    """
    nd = design.nodes[i]
    xhat_i = np.asarray(xhat_all, dtype=float)[i]
    W = nd.insertion
    z = W.T @ _disagreement(design, i, xhat_all)
    dx = nd.A_L @ xhat_i - nd.L @ np.asarray(y_i, dtype=float)
    dx = dx + design.chi * (W @ z) + design.gamma * (W @ switch(z, boundary_layer))
    if nd.spec.B.shape[1]:
        dx = dx + nd.spec.B @ np.asarray(u_i, dtype=float)
    return dx


def estimate_unknown_input(design: DuioDesign, i: int, xhat_all,
                           boundary_layer: float = 0.0, tol=None) -> np.ndarray:
    """Reconstruction gamma * pinv(Bbar_i) W_i switch(W_i' s_i) of node i's
    unknown inputs."""
    nd = design.nodes[i]
    if nd.spec.Bbar.shape[1] == 0:
        return np.zeros(0)
    z = nd.insertion.T @ _disagreement(design, i, xhat_all)
    return design.gamma * (matlin.pinv(nd.spec.Bbar, tol) @ (nd.insertion @ switch(z, boundary_layer)))


class _Stacked:
    """Padded per-node operators for vectorized right-hand sides."""

    def __init__(self, design: DuioDesign, B: np.ndarray, tol=None):
        n, N = design.n, design.N
        self.A, self.B = design.A, B
        self.lap = laplacian(design.graph)
        wmax = max(nd.w for nd in design.nodes)
        qmax = max(nd.spec.Bbar.shape[1] for nd in design.nodes)
        m = B.shape[1]
        self.AL = np.stack([nd.A_L for nd in design.nodes])
        self.LC = np.stack([nd.L @ nd.spec.C for nd in design.nodes])
        self.W = np.zeros((N, n, wmax))
        self.G = np.zeros((N, qmax, wmax))
        self.Bk = np.zeros((N, n, m))
        self.q = []
        for k, nd in enumerate(design.nodes):
            self.W[k, :, :nd.w] = nd.insertion
            q = nd.spec.Bbar.shape[1]
            self.q.append(q)
            if q:
                self.G[k, :q, :nd.w] = matlin.pinv(nd.spec.Bbar, tol) @ nd.insertion
            for col in nd.spec.known:
                self.Bk[k, :, col] = B[:, col]
        self.chi, self.gamma = design.chi, design.gamma

    def z(self, Xh):
        S = -self.lap @ Xh
        return np.einsum("kiw,ki->kw", self.W, S)

    def rhs(self, x, Xh, u, bl):
        z = self.z(Xh)
        corr = self.chi * z + self.gamma * switch(z, bl)
        dx = self.A @ x + self.B @ u
        dXh = (np.einsum("kij,kj->ki", self.AL, Xh) - self.LC @ x
               + np.einsum("kiw,kw->ki", self.W, corr) + self.Bk @ u)
        return dx, dXh

    def uhat(self, Xh, bl):
        sw = switch(self.z(Xh), bl)
        full = self.gamma * np.einsum("kqw,kw->kq", self.G, sw)
        return [full[k, :q] for k, q in enumerate(self.q)]


def simulate(design: DuioDesign, plant_init, estimates_init, signals: Signals | None = None,
             config: SimConfig = SimConfig(), controller: Callable | None = None, *,
             B=None, tol=None) -> Trajectory:
    """Integrate plant and observers together.

    Parameters
    ----------
    design : DuioDesign
    plant_init : (n,) array
    estimates_init : (n,) or (N, n) array
        Initial estimates (one row per node, or one vector shared by all).
    signals : Signals, optional
        Open-loop input; required unless ``controller`` is given.
    controller : callable, optional
        ``controller(t, y, xhat, uhat_bar) -> u`` evaluated once per step and
        held over the step.  ``y`` is the list of node measurements, ``xhat``
        the (N, n) estimates, ``uhat_bar`` the list of node reconstructions of
        their unknown inputs.
    B : (n, m) array, optional
        Global input matrix.  Rebuilt from the node partitions when omitted.

    Raises
    ------
    NumericalBlowup
        If any state component exceeds 1e9 in magnitude.
    """
    if signals is None and controller is None:
        raise ValidationError("either signals or a controller is required")
    n, N = design.n, design.N
    B = _global_B(design) if B is None else matlin.as_mat(B, "B")
    m = B.shape[1]
    ops = _Stacked(design, B, tol)
    bl = config.boundary_layer

    x = np.array(plant_init, dtype=float).reshape(n)
    Xh = np.array(np.broadcast_to(np.asarray(estimates_init, dtype=float), (N, n)))
    Cs = [nd.spec.C for nd in design.nodes]

    n_steps = config.n_steps
    stride = int(config.record_stride)
    n_rec = n_steps // stride + 1
    times = np.zeros(n_rec)
    xs = np.zeros((n_rec, n))
    xhs = np.zeros((n_rec, N, n))
    us = np.zeros((n_rec, m))
    uhs = [np.zeros((n_rec, q)) for q in ops.q]

    def plant_input(t, x, Xh):
        if controller is not None:
            y = [C @ x for C in Cs]
            return np.asarray(controller(t, y, Xh, ops.uhat(Xh, bl)), dtype=float).reshape(m)
        return np.asarray(signals.u(t), dtype=float).reshape(m)

    dt = config.dt
    held = controller is not None
    rec = 0
    for k in range(n_steps + 1):
        t = k * dt
        u = plant_input(t, x, Xh)
        if k % stride == 0:
            times[rec], xs[rec], xhs[rec], us[rec] = t, x, Xh, u
            for j, uh in enumerate(ops.uhat(Xh, bl)):
                uhs[j][rec] = uh
            rec += 1
        if k == n_steps:
            break

        def f(tt, xx, XX):
            uu = u if held else np.asarray(signals.u(tt), dtype=float).reshape(m)
            return ops.rhs(xx, XX, uu, bl)

        if config.integrator == "euler":
            dx, dX = f(t, x, Xh)
            x, Xh = x + dt * dx, Xh + dt * dX
        else:
            k1x, k1X = f(t, x, Xh)
            k2x, k2X = f(t + dt / 2, x + dt / 2 * k1x, Xh + dt / 2 * k1X)
            k3x, k3X = f(t + dt / 2, x + dt / 2 * k2x, Xh + dt / 2 * k2X)
            k4x, k4X = f(t + dt, x + dt * k3x, Xh + dt * k3X)
            x = x + dt / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
            Xh = Xh + dt / 6 * (k1X + 2 * k2X + 2 * k3X + k4X)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(Xh))) or max(
                np.max(np.abs(x)), np.max(np.abs(Xh))) > BLOWUP_LIMIT:
            raise NumericalBlowup(f"state magnitude exceeded {BLOWUP_LIMIT:g} at t={t + dt:.6g} s")

    e = xs[:, None, :] - xhs
    eps_a, eps_b = transform_errors(design, e)
    return Trajectory(times=times, x=xs, xhat=xhs, e=e, u=us, uhat_bar=uhs,
                      eps_a=eps_a, eps_b=eps_b, lyapunov=lyapunov_series(design, eps_a))


def _global_B(design: DuioDesign) -> np.ndarray:
    spec = design.nodes[0].spec
    m = len(spec.known) + len(spec.unknown)
    B = np.zeros((design.n, m))
    B[:, list(spec.known)] = spec.B
    B[:, list(spec.unknown)] = spec.Bbar
    return B


def transform_errors(design: DuioDesign, errors) -> tuple[np.ndarray, np.ndarray]:
    """Split stacked errors into consensus and quotient coordinates.

    ``errors`` is a Trajectory or a (T, N, n) / (N, n) array.  Returns
    ``(eps_a, eps_b)`` with ``eps_a = Wg' e`` and ``eps_b = M' e`` where
    ``[Wg M]`` is the orthogonal change of basis built from the node
    insertions and projections.
    """
    e = errors.e if isinstance(errors, Trajectory) else np.asarray(errors, dtype=float)
    flat = e.reshape(e.shape[:-2] + (-1,))
    return flat @ stack_insertions(design.nodes), flat @ stack_projections(design.nodes)


def lyapunov_series(design: DuioDesign, eps_a) -> np.ndarray:
    """Samples of V = eps_a' Q eps_a."""
    eps_a = np.atleast_2d(np.asarray(eps_a, dtype=float))
    if eps_a.shape[-1] == 0:
        return np.zeros(eps_a.shape[0])
    return np.einsum("ti,ij,tj->t", eps_a, design.Q, eps_a)


def decoupling_residual(design: DuioDesign, traj: Trajectory) -> float:
    """Max-norm mismatch between the central difference of eps_b and
    A_b eps_b, where A_b = blockdiag of the induced quotient maps."""
    A_b = scipy.linalg.block_diag(*[nd.induced for nd in design.nodes])
    t, eb = traj.times, traj.eps_b
    if eb.shape[1] == 0 or t.size < 3:
        return 0.0
    deriv = (eb[2:] - eb[:-2]) / (t[2:] - t[:-2])[:, None]
    return float(np.max(np.abs(deriv - eb[1:-1] @ A_b.T)))


def max_rise(values, times, t_from: float = 0.0) -> float:
    """Largest amount by which ``values`` climbs above its running minimum
    for samples with time >= t_from (0 for a non-increasing series)."""
    v = np.asarray(values, dtype=float)[np.asarray(times) >= t_from]
    if v.size == 0:
        return 0.0
    return float(np.max(v - np.minimum.accumulate(v)))


def convergence_threshold(e0_norm) -> np.ndarray:
    """Error level counted as converged: max(0.05, 0.02 * ||e_i(0)||)."""
    return np.maximum(0.05, 0.02 * np.asarray(e0_norm, dtype=float))


def write_csv(traj: Trajectory, path, digits: int = 15) -> None:
    """Export time, plant state, and per node estimate, error norm and
    unknown-input estimate."""
    T, N, n = traj.xhat.shape
    header = ["time"] + [f"x{j + 1}" for j in range(n)]
    for i in range(N):
        header += [f"xhat{i + 1}_{j + 1}" for j in range(n)]
        header.append(f"err_norm{i + 1}")
        header += [f"uhat_bar{i + 1}_{j + 1}" for j in range(traj.uhat_bar[i].shape[1])]
    errn = traj.error_norms()
    cols = [traj.times[:, None], traj.x]
    for i in range(N):
        cols += [traj.xhat[:, i, :], errn[:, i:i + 1], traj.uhat_bar[i]]
    table = np.hstack(cols)
    fmt = f"%.{digits}g"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in table:
            writer.writerow([fmt % v for v in row])
