"""Computational-graph view of one scheme step: build, evaluate, expand, export.

Node kinds: LIN (affine combination), RELU, SQ (0.5 a^2), PROD (a*b),
MAX (max(a, b)), ABS (|a|), and ID. MAX and ABS are expressible through ReLU
(max(a,b) = a + relu(b-a), |a| = relu(a) + relu(-a)); relu_expand rewrites
them accordingly while keeping SQ and PROD primitive.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import InvalidGraphError

GRAPH_SCHEMA_VERSION = 1


class NodeKind(Enum):
    LIN = "LIN"
    RELU = "RELU"
    SQ = "SQ"
    PROD = "PROD"
    MAX = "MAX"
    ABS = "ABS"
    ID = "ID"


_ARITY = {NodeKind.RELU: 1, NodeKind.SQ: 1, NodeKind.ABS: 1, NodeKind.ID: 1,
          NodeKind.PROD: 2, NodeKind.MAX: 2}


@dataclass(frozen=True)
class GraphNode:
    id: str
    kind: NodeKind
    inputs: tuple[str, ...] = ()
    weights: tuple[float, ...] = ()   # LIN only
    bias: float = 0.0                 # LIN only

    def __post_init__(self):
        if self.kind is NodeKind.LIN:
            if len(self.inputs) < 1 or len(self.weights) != len(self.inputs):
                raise InvalidGraphError(
                    f"LIN node '{self.id}' needs matching inputs and weights")
        elif len(self.inputs) != _ARITY[self.kind]:
            raise InvalidGraphError(
                f"{self.kind.value} node '{self.id}' takes {_ARITY[self.kind]} input(s)")


@dataclass(frozen=True)
class SchemeGraph:
    nodes: tuple[GraphNode, ...]
    input_ids: tuple[str, ...]
    output_ids: tuple[str, ...]

    def __post_init__(self):
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise InvalidGraphError("duplicate node ids")
        known = set(ids) | set(self.input_ids)
        for n in self.nodes:
            for src in n.inputs:
                if src not in known:
                    raise InvalidGraphError(f"node '{n.id}' reads unknown id '{src}'")
        for out in self.output_ids:
            if out not in known:
                raise InvalidGraphError(f"unknown output id '{out}'")
        self.topological_order()   # raises on cycles

    def topological_order(self) -> list[GraphNode]:
        by_id = {n.id: n for n in self.nodes}
        done = set(self.input_ids)
        order: list[GraphNode] = []
        pending = list(self.nodes)
        while pending:
            progressed = False
            remaining = []
            for n in pending:
                if all(src in done for src in n.inputs):
                    order.append(n)
                    done.add(n.id)
                    progressed = True
                else:
                    remaining.append(n)
            if not progressed:
                raise InvalidGraphError("graph contains a cycle")
            pending = remaining
        return order


def eval_graph(g: SchemeGraph, inputs) -> list:
    """Evaluate in topological order; values may be scalars or numpy arrays."""
    inputs = list(inputs)
    if len(inputs) != len(g.input_ids):
        raise ValueError(f"expected {len(g.input_ids)} inputs, got {len(inputs)}")
    values = dict(zip(g.input_ids, inputs))
    for n in g.topological_order():
        args = [values[src] for src in n.inputs]
        if n.kind is NodeKind.LIN:
            acc = n.bias
            for w, a in zip(n.weights, args):
                acc = acc + w * a
            values[n.id] = acc
        elif n.kind is NodeKind.RELU:
            values[n.id] = np.maximum(args[0], 0.0)
        elif n.kind is NodeKind.SQ:
            values[n.id] = 0.5 * args[0] * args[0]
        elif n.kind is NodeKind.PROD:
            values[n.id] = args[0] * args[1]
        elif n.kind is NodeKind.MAX:
            values[n.id] = np.maximum(args[0], args[1])
        elif n.kind is NodeKind.ABS:
            values[n.id] = np.abs(args[0])
        else:   # ID
            values[n.id] = args[0]
    return [values[out] for out in g.output_ids]


def build_rusanov_graph(w_left: float, w_right: float, dt_over_dx: float) -> SchemeGraph:
    """One Burgers finite-volume update U_j^{n+1} from (U_{j-1}, U_j, U_{j+1}).

    The only free weights are the two diffusion scalings w_left and w_right,
    entering the final affine layer.
    """
    lam = dt_over_dx
    nodes = (
        GraphNode("flux_m", NodeKind.SQ, ("u_m",)),
        GraphNode("flux_0", NodeKind.SQ, ("u_0",)),
        GraphNode("flux_p", NodeKind.SQ, ("u_p",)),
        GraphNode("speed_m", NodeKind.ABS, ("u_m",)),
        GraphNode("speed_0", NodeKind.ABS, ("u_0",)),
        GraphNode("speed_p", NodeKind.ABS, ("u_p",)),
        GraphNode("amax_l", NodeKind.MAX, ("speed_m", "speed_0")),
        GraphNode("amax_r", NodeKind.MAX, ("speed_0", "speed_p")),
        GraphNode("jump_l", NodeKind.LIN, ("u_0", "u_m"), (1.0, -1.0)),
        GraphNode("jump_r", NodeKind.LIN, ("u_p", "u_0"), (1.0, -1.0)),
        GraphNode("diff_l", NodeKind.PROD, ("amax_l", "jump_l")),
        GraphNode("diff_r", NodeKind.PROD, ("amax_r", "jump_r")),
        GraphNode("u_new", NodeKind.LIN,
                  ("u_0", "flux_p", "flux_m", "diff_r", "diff_l"),
                  (1.0, -0.5 * lam, 0.5 * lam, lam * w_right, -lam * w_left)),
    )
    return SchemeGraph(nodes, ("u_m", "u_0", "u_p"), ("u_new",))


def build_linear_graph(stencil, bias: float = 0.0) -> SchemeGraph:
    """Single-output affine stencil application as a one-layer graph."""
    stencil = tuple(float(s) for s in stencil)
    inputs = tuple(f"u_{k}" for k in range(len(stencil)))
    nodes = (GraphNode("out", NodeKind.LIN, inputs, stencil, bias),)
    return SchemeGraph(nodes, inputs, ("out",))


def relu_expand(g: SchemeGraph) -> SchemeGraph:
    """Rewrite MAX and ABS through LIN + RELU; SQ and PROD stay primitive."""
    nodes: list[GraphNode] = []
    for n in g.nodes:
        if n.kind is NodeKind.ABS:
            a = n.inputs[0]
            nodes.extend([
                GraphNode(f"{n.id}__neg", NodeKind.LIN, (a,), (-1.0,)),
                GraphNode(f"{n.id}__rp", NodeKind.RELU, (a,)),
                GraphNode(f"{n.id}__rn", NodeKind.RELU, (f"{n.id}__neg",)),
                GraphNode(n.id, NodeKind.LIN, (f"{n.id}__rp", f"{n.id}__rn"),
                          (1.0, 1.0)),
            ])
        elif n.kind is NodeKind.MAX:
            a, b = n.inputs
            nodes.extend([
                GraphNode(f"{n.id}__gap", NodeKind.LIN, (b, a), (1.0, -1.0)),
                GraphNode(f"{n.id}__r", NodeKind.RELU, (f"{n.id}__gap",)),
                GraphNode(n.id, NodeKind.LIN, (a, f"{n.id}__r"), (1.0, 1.0)),
            ])
        else:
            nodes.append(n)
    return SchemeGraph(tuple(nodes), g.input_ids, g.output_ids)


def export_graph(g: SchemeGraph, fmt: str = "JSON") -> str:
    if fmt.upper() == "JSON":
        return json.dumps({
            "version": GRAPH_SCHEMA_VERSION,
            "inputs": list(g.input_ids),
            "outputs": list(g.output_ids),
            "nodes": [
                {"id": n.id, "kind": n.kind.value, "inputs": list(n.inputs),
                 "weights": list(n.weights), "bias": n.bias}
                for n in g.nodes
            ],
        }, sort_keys=True, indent=1)
    if fmt.upper() == "DOT":
        lines = ["digraph scheme {"]
        for src in g.input_ids:
            lines.append(f'  "{src}" [shape=box, label="IN {src}"];')
        for n in g.nodes:
            label = n.kind.value
            if n.kind is NodeKind.LIN:
                coef = ", ".join(f"{w:g}" for w in n.weights)
                label = f"LIN [{coef}]" + (f" + {n.bias:g}" if n.bias else "")
            lines.append(f'  "{n.id}" [label="{label}"];')
            for src in n.inputs:
                lines.append(f'  "{src}" -> "{n.id}";')
        for out in g.output_ids:
            lines.append(f'  "{out}" [penwidth=2];')
        lines.append("}")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown export format '{fmt}'")


def load_graph(text: str) -> SchemeGraph:
    d = json.loads(text)
    if d.get("version") != GRAPH_SCHEMA_VERSION:
        raise InvalidGraphError(f"unsupported graph schema version {d.get('version')}")
    nodes = tuple(
        GraphNode(n["id"], NodeKind(n["kind"]), tuple(n["inputs"]),
                  tuple(n["weights"]), float(n["bias"]))
        for n in d["nodes"]
    )
    return SchemeGraph(nodes, tuple(d["inputs"]), tuple(d["outputs"]))
