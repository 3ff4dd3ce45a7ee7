"""Command-line front end.

Subcommands
-----------
synthesize DESCRIPTION OUTPUT
    Design the observer network and write a JSON design report.
simulate DESCRIPTION [--design FILE] [--t-end] [--dt] [--integrator]
         [--boundary-layer] [--csv FILE] [--svg FILE]
    Run the observers on the described plant and print final error norms.
platoon [--paper-gains] [--graph path|complete] [--out DIR] [--describe FILE]
    Reproduce the four-vehicle case study and its checks.

Exit codes
----------
0 success; 1 a case-study check failed; 2 invalid input (parse, shape,
validation or any other design failure); 3 joint condition violated;
4 numerical blow-up during simulation.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import cases, geomctl, matlin, sim
from .errors import GeoDuioError, JointConditionViolated, NumericalBlowup, ValidationError
from .geomctl import GoodRegion
from .netgraph import Graph
from .plotting import error_svg
from .synthesis import DuioDesign, NodeDesign, NodeSpec, build_Q, check_joint_condition, \
    check_rank_condition, synthesize

__all__ = [
    "SystemDescription", "parse_description", "serialize_description", "load_description",
    "design_to_dict", "design_from_dict", "platoon_description", "main",
    "EXIT_OK", "EXIT_CHECK_FAILED", "EXIT_INVALID", "EXIT_JOINT", "EXIT_BLOWUP",
]

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INVALID = 2
EXIT_JOINT = 3
EXIT_BLOWUP = 4

FORMAT_VERSION = 1


@dataclass(eq=False)
class SystemDescription:
    """Structural data of a networked plant plus simulation settings.

    ``nodes`` holds one ``{"C": matrix, "known": [indices]}`` entry per node.
    ``input`` describes an open-loop input ``offset + amplitude * sin(omega t + phase)``
    per channel; ``x0`` and ``xhat0`` are optional initial conditions.
    """

    A: np.ndarray
    B: np.ndarray
    nodes: list
    adjacency: np.ndarray
    u_bar_max: float = 0.0
    margin: float = 0.5
    sim: dict = field(default_factory=dict)
    input: dict = field(default_factory=dict)
    x0: np.ndarray | None = None
    xhat0: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def node_specs(self) -> list[NodeSpec]:
        return [NodeSpec.from_partition(i, nd["C"], self.B, nd["known"])
                for i, nd in enumerate(self.nodes)]

    def graph(self) -> Graph:
        return Graph(self.adjacency)

    def sim_config(self, **overrides) -> sim.SimConfig:
        kw = dict(self.sim)
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return sim.SimConfig(**kw)

    def __eq__(self, other):
        if not isinstance(other, SystemDescription):
            return NotImplemented
        return serialize_description(self) == serialize_description(other)


def _matrix(obj, name, shape=None) -> np.ndarray:
    try:
        M = np.array(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{name}: not a numeric matrix") from exc
    if M.ndim == 1 and shape is not None and shape[0] == 0:
        M = M.reshape(0, shape[1])
    if M.ndim != 2:
        raise ValidationError(f"{name}: expected a 2-D row-major array")
    if shape is not None and M.shape != tuple(shape):
        raise ValidationError(f"{name}: expected shape {tuple(shape)}, got {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValidationError(f"{name}: non-finite entries")
    return M


def _vector(obj, name, length):
    if obj is None:
        return None
    v = np.array(obj, dtype=float)
    if v.shape != (length,) or not np.all(np.isfinite(v)):
        raise ValidationError(f"{name}: expected {length} finite numbers")
    return v


def parse_description(data: dict) -> SystemDescription:
    """Validate a decoded JSON object and build a SystemDescription."""
    if not isinstance(data, dict):
        raise ValidationError("description must be a JSON object")
    try:
        n, m = int(data["n"]), int(data["m"])
        A = _matrix(data["A"], "A", (n, n))
        B = _matrix(data["B"], "B", (n, m))
        raw_nodes = data["nodes"]
        adjacency = _matrix(data["graph"]["adjacency"], "graph.adjacency")
    except KeyError as exc:
        raise ValidationError(f"missing field {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"malformed description: {exc}") from exc
    if not isinstance(raw_nodes, list) or not raw_nodes:
        raise ValidationError("nodes must be a non-empty list")
    nodes = []
    for i, nd in enumerate(raw_nodes):
        if not isinstance(nd, dict) or "C" not in nd or "known" not in nd:
            raise ValidationError(f"node {i}: needs fields 'C' and 'known'")
        C = np.array(nd["C"], dtype=float)
        C = _matrix(C.reshape(0, n) if C.size == 0 else C, f"nodes[{i}].C")
        if C.shape[1] != n:
            raise ValidationError(f"nodes[{i}].C: expected {n} columns, got {C.shape[1]}")
        known = [int(k) for k in nd["known"]]
        if any(k < 0 or k >= m for k in known) or len(set(known)) != len(known):
            raise ValidationError(f"nodes[{i}].known: invalid indices {known} for m={m}")
        nodes.append({"C": C, "known": sorted(known)})
    if adjacency.shape != (len(nodes), len(nodes)):
        raise ValidationError(f"graph.adjacency must be {len(nodes)}x{len(nodes)}")
    Graph(adjacency)  # validates entries
    sim_kw = dict(data.get("sim", {}))
    unknown_keys = set(sim_kw) - {"dt", "t_end", "integrator", "boundary_layer", "record_stride"}
    if unknown_keys:
        raise ValidationError(f"sim: unknown keys {sorted(unknown_keys)}")
    sim.SimConfig(**sim_kw)
    inp = dict(data.get("input", {}))
    for key in inp:
        if key not in ("amplitude", "omega", "phase", "offset"):
            raise ValidationError(f"input: unknown key {key!r}")
        inp[key] = _vector(inp[key], f"input.{key}", m).tolist()
    desc = SystemDescription(
        A=A, B=B, nodes=nodes, adjacency=adjacency,
        u_bar_max=float(data.get("u_bar_max", 0.0)), margin=float(data.get("margin", 0.5)),
        sim=sim_kw, input=inp, x0=_vector(data.get("x0"), "x0", n),
        xhat0=_vector(data.get("xhat0"), "xhat0", n))
    if desc.u_bar_max < 0 or desc.margin <= 0:
        raise ValidationError("u_bar_max must be >= 0 and margin > 0")
    desc.node_specs()
    return desc


def serialize_description(desc: SystemDescription) -> dict:
    out = {
        "format": FORMAT_VERSION, "n": desc.n, "m": desc.m,
        "A": desc.A.tolist(), "B": desc.B.tolist(),
        "nodes": [{"C": nd["C"].tolist(), "known": list(nd["known"])} for nd in desc.nodes],
        "graph": {"adjacency": desc.adjacency.astype(int).tolist()},
        "u_bar_max": desc.u_bar_max, "margin": desc.margin,
        "sim": dict(desc.sim), "input": dict(desc.input),
    }
    if desc.x0 is not None:
        out["x0"] = desc.x0.tolist()
    if desc.xhat0 is not None:
        out["xhat0"] = desc.xhat0.tolist()
    return out


def load_description(path) -> SystemDescription:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
    return parse_description(data)


def platoon_description(params: cases.PlatoonParams = cases.PlatoonParams()) -> SystemDescription:
    """The case-study plant as a generic description (open loop, leader input only)."""
    A, B, nodes, graph = cases.build_platoon(params)
    return SystemDescription(
        A=A, B=B, nodes=[{"C": s.C, "known": list(s.known)} for s in nodes],
        adjacency=graph.adjacency.copy(), u_bar_max=params.u_bar_max, margin=0.5,
        sim={}, input={"amplitude": [params.leader_amplitude] + [0.0] * (params.n_vehicles - 1),
                       "omega": [params.leader_omega] * params.n_vehicles},
        x0=np.asarray(params.x0, dtype=float))


def design_to_dict(design: DuioDesign) -> dict:
    """JSON-ready design report; enough to rebuild the design."""
    nodes = []
    for nd in design.nodes:
        ev = np.linalg.eigvals(nd.A_L)
        nodes.append({
            "index": nd.spec.index, "dim_W": nd.w,
            "W_basis": nd.Wg.basis.tolist(), "L": nd.L.tolist(),
            "rank_condition": bool(check_rank_condition(nd.spec)),
            "spectrum_A_L": [[float(z.real), float(z.imag)] for z in ev],
            "spectrum_induced": [[float(z.real), float(z.imag)]
                                 for z in np.linalg.eigvals(nd.induced)] if nd.induced.size else [],
        })
    return {"format": FORMAT_VERSION, "chi": design.chi, "gamma": design.gamma,
            "u_bar_max": design.u_bar_max, "margin": design.margin,
            "joint_condition": bool(check_joint_condition(design.nodes)),
            "Q_min_eig": float(np.linalg.eigvalsh(design.Q)[0]) if design.Q.size else None,
            "nodes": nodes}


def design_from_dict(data: dict, desc: SystemDescription) -> DuioDesign:
    """Rebuild a design from :func:`design_to_dict` output and its description."""
    specs, graph = desc.node_specs(), desc.graph()
    try:
        raw = data["nodes"]
        chi, gamma = float(data["chi"]), float(data["gamma"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed design file: {exc}") from exc
    if len(raw) != len(specs):
        raise ValidationError("design and description disagree on the node count")
    designs = []
    for spec, nd in zip(specs, raw):
        basis = np.array(nd["W_basis"], dtype=float).reshape(desc.n, -1)
        W = matlin.Subspace.span(basis)
        L = _matrix(nd["L"], f"design node {spec.index} L", (desc.n, spec.C.shape[0]))
        A_L = desc.A + L @ spec.C
        q = geomctl.decompose(A_L, W)
        designs.append(NodeDesign(spec=spec, Wg=W, L=L, A_L=A_L, insertion=q.insertion,
                                  projection=q.projection, restricted=q.restricted,
                                  induced=q.induced))
    if not check_joint_condition(designs):
        raise JointConditionViolated("the node subspaces W*_g,i intersect nontrivially")
    return DuioDesign(A=desc.A, nodes=tuple(designs), graph=graph, chi=chi, gamma=gamma,
                      u_bar_max=float(data.get("u_bar_max", desc.u_bar_max)),
                      Q=build_Q(designs, graph), margin=float(data.get("margin", desc.margin)))


def _synthesize(desc: SystemDescription) -> DuioDesign:
    return synthesize(desc.A, desc.node_specs(), desc.graph(), GoodRegion(desc.margin),
                      desc.u_bar_max)


def _signals(desc: SystemDescription) -> sim.Signals:
    m = desc.m
    amp = np.array(desc.input.get("amplitude", np.zeros(m)), dtype=float)
    om = np.array(desc.input.get("omega", np.zeros(m)), dtype=float)
    ph = np.array(desc.input.get("phase", np.zeros(m)), dtype=float)
    off = np.array(desc.input.get("offset", np.zeros(m)), dtype=float)
    return sim.Signals(u=lambda t: off + amp * np.sin(om * t + ph), u_bar_max=desc.u_bar_max)


def cmd_synthesize(args) -> int:
    desc = load_description(args.description)
    design = _synthesize(desc)
    Path(args.output).write_text(json.dumps(design_to_dict(design), indent=2) + "\n")
    print(f"chi = {design.chi:.6g}, gamma = {design.gamma:.6g}")
    for nd in design.nodes:
        rc = "PASS" if check_rank_condition(nd.spec) else "FAIL"
        print(f"node {nd.spec.index + 1}: dim W = {nd.w}, rank condition {rc}")
    print("joint condition PASS")
    return EXIT_OK


def cmd_simulate(args) -> int:
    desc = load_description(args.description)
    config = desc.sim_config(t_end=args.t_end, dt=args.dt, integrator=args.integrator,
                             boundary_layer=args.boundary_layer)
    if args.design:
        try:
            data = json.loads(Path(args.design).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot load design {args.design}: {exc}") from exc
        design = design_from_dict(data, desc)
    else:
        design = _synthesize(desc)
    x0 = desc.x0 if desc.x0 is not None else np.zeros(desc.n)
    xhat0 = desc.xhat0 if desc.xhat0 is not None else np.zeros(desc.n)
    traj = sim.simulate(design, x0, xhat0, _signals(desc), config, B=desc.B)
    if args.csv:
        sim.write_csv(traj, args.csv)
    if args.svg:
        Path(args.svg).write_text(error_svg(traj))
    final = traj.error_norms()[-1]
    print("final error norms: " + " ".join(f"{v:.6g}" for v in final))
    return EXIT_OK


def cmd_platoon(args) -> int:
    params = cases.PlatoonParams(graph=args.graph)
    if args.describe:
        Path(args.describe).write_text(
            json.dumps(serialize_description(platoon_description(params)), indent=1) + "\n")
        return EXIT_OK
    config = sim.SimConfig(**{k: v for k, v in (("t_end", args.t_end), ("dt", args.dt))
                              if v is not None})
    result = cases.run_case_study(params, config, published_gains=args.paper_gains,
                                  output_dir=args.out)
    sys.stdout.write(result.report())
    return EXIT_OK if result.passed else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="geoduio",
                                description="Distributed unknown-input observer design.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synthesize", help="design observers from a system description")
    s.add_argument("description")
    s.add_argument("output")
    s.set_defaults(func=cmd_synthesize)

    s = sub.add_parser("simulate", help="simulate observers on a described plant")
    s.add_argument("description")
    s.add_argument("--design", help="design file from 'synthesize' (else synthesize anew)")
    s.add_argument("--t-end", type=float)
    s.add_argument("--dt", type=float)
    s.add_argument("--integrator", choices=("euler", "rk4"))
    s.add_argument("--boundary-layer", type=float)
    s.add_argument("--csv")
    s.add_argument("--svg")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("platoon", help="run the vehicle-platoon case study")
    s.add_argument("--paper-gains", action="store_true",
                   help="use chi = 82.3039, gamma = 383.1159 instead of synthesized gains")
    s.add_argument("--graph", choices=("path", "complete"), default="path")
    s.add_argument("--out", default="platoon_out", help="directory for CSV, report, SVG")
    s.add_argument("--t-end", type=float)
    s.add_argument("--dt", type=float)
    s.add_argument("--describe", metavar="FILE",
                   help="only write the platoon system description and exit")
    s.set_defaults(func=cmd_platoon)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        return args.func(args)
    except JointConditionViolated as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_JOINT
    except NumericalBlowup as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except (GeoDuioError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
