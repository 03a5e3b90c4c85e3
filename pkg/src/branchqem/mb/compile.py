"""Compile phase-gate/Hadamard/CZ circuits into measurement patterns.

Any circuit written with H, R_z(k pi/4) and CZ compiles onto a cluster whose
wires are paths: each H on a wire teleports the logical qubit one vertex
forward, consuming the phase accumulated since the previous H, so a vertex
carrying phase ``a`` is measured in the rotated basis at -a (adapted to the
wire's running X frame).  CZ gates become edges between the vertices alive
on the two wires at that moment.  Byproduct frames and adaptive sign sets
are propagated symbolically as XOR sets of outcome bits, so the emitted
pattern is deterministic hardware: graph, measurement order, angle formulas
and byproduct exponents.

The controlled-SWAP patterns ship in two flavours: ``a`` cancels every
removable Hadamard pair first (fewer, more connected vertices) while ``b``
keeps the plain per-gate concatenation (more vertices, shallower
connectivity, cheaper to contract sequentially).
"""

from __future__ import annotations

from dataclasses import dataclass

from .patterns import ByproductRule, GraphSpec, Measurement, MeasurementPattern

# Netlist ops: ("H", wire) | ("RZ", wire, num) | ("CZ", wire_a, wire_b)
Op = tuple


def fredkin_netlist(control: int, a: int, b: int) -> list[Op]:
    """Controlled-SWAP of wires a, b under ``control`` as H/RZ/CZ ops.

    Built from cNOT(b->a), Toffoli(control, a -> b), cNOT(b->a) with the
    seven-phase-gate Toffoli; every cNOT(c->t) is H(t) CZ(c,t) H(t).  RZ
    angles are integers in units of pi/4.
    """

    def cnot(c: int, t: int) -> list[Op]:
        return [("H", t), ("CZ", c, t), ("H", t)]

    ops: list[Op] = []
    ops += cnot(b, a)
    # Toffoli(control, a; b) = H(b) CCZ H(b)
    ops.append(("H", b))
    ops += cnot(a, b)
    ops.append(("RZ", b, -1))
    ops += cnot(control, b)
    ops.append(("RZ", b, 1))
    ops += cnot(a, b)
    ops.append(("RZ", b, -1))
    ops += cnot(control, b)
    ops.append(("RZ", a, 1))
    ops.append(("RZ", b, 1))
    ops.append(("H", b))
    ops += cnot(control, a)
    ops.append(("RZ", control, 1))
    ops.append(("RZ", a, -1))
    ops += cnot(control, a)
    ops += cnot(b, a)
    return ops


def t_netlist(wire: int) -> list[Op]:
    return [("RZ", wire, 1)]


def cnot_netlist(control: int, target: int) -> list[Op]:
    return [("H", target), ("CZ", control, target), ("H", target)]


def cz_netlist(a: int, b: int) -> list[Op]:
    return [("CZ", a, b)]


def _levels(ops: list[Op], wires: list[int]):
    """Per-wire H indices plus the level every RZ/CZ lands in.

    The level of a wire counts the H gates seen on it so far; diagonal ops
    commute freely inside a level.
    """
    level = {w: 0 for w in wires}
    h_positions: dict[int, list[int]] = {w: [] for w in wires}
    rz_level: dict[tuple[int, int], int] = {}
    cz_levels: dict[tuple[tuple[int, int], tuple[int, int]], list[int]] = {}
    for pos, op in enumerate(ops):
        if op[0] == "H":
            h_positions[op[1]].append(pos)
            level[op[1]] += 1
        elif op[0] == "RZ":
            key = (op[1], level[op[1]])
            rz_level[key] = rz_level.get(key, 0) + op[2]
        elif op[0] == "CZ":
            a, b = op[1], op[2]
            key = ((a, level[a]), (b, level[b])) if a < b else ((b, level[b]), (a, level[a]))
            cz_levels.setdefault(key, []).append(pos)
        else:
            raise ValueError(f"unknown op {op!r}")
    return h_positions, rz_level, cz_levels


def simplify_netlist(ops: list[Op], wires: list[int]) -> list[Op]:
    """Cancel same-pair CZ duplicates and removable Hadamard pairs.

    A CZ pair attached to the same two vertices annihilates; a wire level
    with no net phase and no CZ attachment lets its two delimiting H gates
    cancel.  Iterates to a fixed point.
    """
    ops = list(ops)
    changed = True
    while changed:
        changed = False
        h_pos, rz_level, cz_levels = _levels(ops, wires)
        drop: set[int] = set()
        for key, positions in cz_levels.items():
            while len(positions) >= 2:
                drop.add(positions.pop())
                drop.add(positions.pop())
        if drop:
            ops = [op for i, op in enumerate(ops) if i not in drop]
            changed = True
            continue
        for w in wires:
            cancelled = False
            for k in range(len(h_pos[w]) - 1):
                # Level k+1 on wire w sits between H number k and k+1.
                lvl = k + 1
                has_rz = rz_level.get((w, lvl), 0) % 8 != 0
                has_cz = any(
                    (w, lvl) in key for key in cz_levels if cz_levels[key]
                )
                if not has_rz and not has_cz:
                    ops = [
                        op
                        for i, op in enumerate(ops)
                        if i not in (h_pos[w][k], h_pos[w][k + 1])
                    ]
                    cancelled = True
                    changed = True
                    break
            if cancelled:
                break
    return ops


@dataclass
class _Wire:
    end: int  # current vertex id
    rz: int = 0  # accumulated phase (units of pi/4) since the last H
    x_frame: frozenset = frozenset()
    z_frame: frozenset = frozenset()


def compile_netlist(
    ops: list[Op],
    wires: list[int],
    name: str,
    enforce_x_inputs: bool = False,
    op_tags: list[str] | None = None,
) -> tuple[MeasurementPattern, dict[int, set[str]]]:
    """Lower a netlist to a measurement pattern with symbolic corrections.

    Trailing phases on a wire are realized by appending two teleportation
    steps (the first consumes the phase, the second restores the Hadamard
    parity).  With ``enforce_x_inputs`` every wire is prefixed by an identity
    teleportation pair so input vertices are measured in the plain X basis.

    Returns the pattern together with per-vertex tag sets: a vertex carries
    the tag of the op that created it and of the op that measured it (input
    vertices additionally carry "init", synthesized teleports "final").
    """
    ops = list(ops)
    if op_tags is None:
        tags = ["main"] * len(ops)
    else:
        if len(op_tags) != len(ops):
            raise ValueError("op_tags must parallel the op list")
        tags = list(op_tags)
    if enforce_x_inputs:
        # Only wires whose first teleportation would consume a phase need an
        # identity prefix; the rest already measure their input in X.
        _, rz0, _ = _levels(ops, wires)
        needy = [w for w in wires if rz0.get((w, 0), 0) % 8 != 0]
        prefix = [("H", w) for w in needy for _ in range(2)]
        ops = prefix + ops
        tags = ["init"] * len(prefix) + tags
    # Realize trailing phases: move them into an appended teleport pair.
    _, rz_level, _ = _levels(ops, wires)
    h_count = {w: sum(1 for op in ops if op[0] == "H" and op[1] == w) for w in wires}
    for w in wires:
        if rz_level.get((w, h_count[w]), 0) % 8 != 0:
            ops += [("H", w), ("H", w)]
            tags += ["final", "final"]

    next_id = 0

    def fresh() -> int:
        nonlocal next_id
        next_id += 1
        return next_id - 1

    state = {w: _Wire(end=fresh()) for w in wires}
    input_ids = [state[w].end for w in wires]
    vertex_tags: dict[int, set[str]] = {v: {"init"} for v in input_ids}
    edges: list[tuple[int, int]] = []
    order: list[int] = []
    meas: dict[int, Measurement] = {}

    for op, tag in zip(ops, tags):
        if op[0] == "RZ":
            state[op[1]].rz += op[2]
        elif op[0] == "CZ":
            wa, wb = state[op[1]], state[op[2]]
            edges.append((wa.end, wb.end))
            wa.z_frame = wa.z_frame ^ wb.x_frame
            wb.z_frame = wb.z_frame ^ wa.x_frame
        elif op[0] == "H":
            w = state[op[1]]
            v = w.end
            succ = fresh()
            vertex_tags[v].add(tag)
            vertex_tags[succ] = {tag}
            edges.append((v, succ))
            num = -w.rz % 8
            num = num - 8 if num > 4 else num  # keep angle in (-pi, pi]
            if num == 0:
                meas[v] = Measurement(v, "X")
            elif num == 2 and not w.x_frame:
                meas[v] = Measurement(v, "Y")
            else:
                meas[v] = Measurement(v, "R", num, w.x_frame)
            order.append(v)
            w.x_frame, w.z_frame = w.z_frame ^ {v}, w.x_frame
            w.end = succ
            w.rz = 0
        else:
            raise ValueError(f"unknown op {op!r}")

    output_ids = [state[w].end for w in wires]
    byproducts = [ByproductRule(state[w].x_frame, state[w].z_frame) for w in wires]
    vertices = input_ids + output_ids + [v for v in order if v not in input_ids]
    pattern = MeasurementPattern(
        name=name,
        graph=GraphSpec(vertices, edges, input_ids, output_ids),
        order=order,
        measurements=meas,
        byproducts=byproducts,
    )
    pattern, mapping = relabel_pattern(pattern)
    return pattern, {mapping[v]: t for v, t in vertex_tags.items()}


def relabel_pattern(p: MeasurementPattern) -> tuple[MeasurementPattern, dict[int, int]]:
    """Renumber vertices: inputs, outputs, Pauli-measured, then adaptive.

    Inputs become 1..k and outputs k+1..2k in wire order; the remaining
    vertices follow in measurement order, Pauli-measured block first, so the
    adaptive vertices always carry the highest labels.  Returns the new
    pattern and the old-to-new id mapping.
    """
    mapping: dict[int, int] = {}
    nxt = 1
    for v in p.graph.inputs:
        mapping[v] = nxt
        nxt += 1
    for v in p.graph.outputs:
        mapping[v] = nxt
        nxt += 1
    interior = [v for v in p.order if v not in mapping]
    for v in (v for v in interior if p.measurements[v].kind != "R"):
        mapping[v] = nxt
        nxt += 1
    for v in (v for v in interior if p.measurements[v].kind == "R"):
        mapping[v] = nxt
        nxt += 1

    def remap_bits(bits: frozenset[int]) -> frozenset[int]:
        return frozenset(mapping[b] for b in bits)

    graph = GraphSpec(
        vertices=sorted(mapping[v] for v in p.graph.vertices),
        edges=[(mapping[a], mapping[b]) for a, b in p.graph.edges],
        inputs=[mapping[v] for v in p.graph.inputs],
        outputs=[mapping[v] for v in p.graph.outputs],
    )
    meas = {
        mapping[v]: Measurement(
            mapping[v], m.kind, m.num, remap_bits(m.sign_bits)
        )
        if m.kind == "R"
        else Measurement(mapping[v], m.kind)
        for v, m in p.measurements.items()
    }
    byp = [ByproductRule(remap_bits(r.x_bits), remap_bits(r.z_bits)) for r in p.byproducts]
    out = MeasurementPattern(
        name=p.name,
        graph=graph,
        order=[mapping[v] for v in p.order],
        measurements=meas,
        byproducts=byp,
    )
    return out, mapping


def cswap_netlist_for_pattern() -> tuple[list[Op], list[int]]:
    """The controlled-SWAP netlist on wires (control, a, b) = (0, 1, 2).

    The control wire's phase gate is slid (it commutes with every CZ) into
    the earliest level so the control input can be measured in the X basis
    without extra teleportations.
    """
    ops = fredkin_netlist(0, 1, 2)
    # Move the control-wire phase to the front; RZ commutes with CZ.
    ops = [op for op in ops if op != ("RZ", 0, 1)]
    return [("RZ", 0, 1)] + ops, [0, 1, 2]


def generate_cswap_pattern(variant: str) -> MeasurementPattern:
    """Reconstructed measurement patterns implementing the controlled-SWAP.

    Variant ``a``: Hadamard-pair cancellation to a fixed point before
    lowering; the control input absorbs the control phase via an identity
    prefix so all inputs stay X-measured.  Variant ``b``: plain per-gate
    concatenation with X-measured inputs.  Both carry exactly seven adaptive
    measurements (one per phase gate of the underlying decomposition).
    """
    ops, wires = cswap_netlist_for_pattern()
    if variant == "a":
        simplified = simplify_netlist(ops, wires)
        pattern, _ = compile_netlist(simplified, wires, "cswap-variant-a")
        return pattern
    if variant == "b":
        pattern, _ = compile_netlist(
            ops, wires, "cswap-variant-b", enforce_x_inputs=True
        )
        return pattern
    raise ValueError(f"unknown variant {variant!r}")
