"""Measurement-pattern data model and its versioned text format.

A pattern is a graph (vertices, CZ edges, input/output vertices) plus an
ordered list of single-qubit measurements and a byproduct rule.  Rotated
measurements live in the equatorial plane: the basis is
{(|0> +- e^(i theta)|1>)/sqrt(2)} with

    theta = (num * pi/4) * (-1)^(s_j1 + s_j2 + ...)

where the s_j are outcomes of earlier measurements.  Byproducts are recorded
per output wire as X/Z exponents that are XOR sums of outcome bits.  The
file format stores angles as exact multiples of pi/4 and bit sums verbatim,
so expressions round-trip unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FORMAT_VERSION = 1


@dataclass(frozen=True)
class Measurement:
    """One single-qubit measurement: Pauli X/Y/Z or an adaptive rotated basis."""

    vertex: int
    kind: str  # "X" | "Y" | "Z" | "R"
    num: float = 0  # base angle = num * pi/4 (integer for serializable patterns)
    sign_bits: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        if self.kind not in ("X", "Y", "Z", "R"):
            raise ValueError(f"unknown measurement kind {self.kind!r}")
        if self.kind != "R" and (self.num or self.sign_bits):
            raise ValueError("Pauli measurements carry no angle data")

    def angle(self, outcomes: dict[int, int]) -> float:
        """Effective equatorial angle given earlier outcome bits (X/Y/R only)."""
        if self.kind == "X":
            return 0.0
        if self.kind == "Y":
            return np.pi / 2
        if self.kind == "Z":
            raise ValueError("Z measurements have no equatorial angle")
        parity = 0
        for b in self.sign_bits:
            parity ^= outcomes[b]
        return (self.num * np.pi / 4) * (-1.0) ** parity


@dataclass(frozen=True)
class ByproductRule:
    """Pauli frame on one output wire: X and Z exponents as XOR bit sums."""

    x_bits: frozenset[int] = frozenset()
    z_bits: frozenset[int] = frozenset()

    def exponents(self, outcomes: dict[int, int]) -> tuple[int, int]:
        x = 0
        for b in self.x_bits:
            x ^= outcomes[b]
        z = 0
        for b in self.z_bits:
            z ^= outcomes[b]
        return x, z


@dataclass
class GraphSpec:
    """Vertices, CZ edges and the input/output labelling of a cluster."""

    vertices: list[int]
    edges: list[tuple[int, int]]
    inputs: list[int]
    outputs: list[int]

    def __post_init__(self) -> None:
        vset = set(self.vertices)
        if len(vset) != len(self.vertices):
            raise ValueError("duplicate vertex ids")
        norm = []
        seen = set()
        for a, b in self.edges:
            if a == b:
                raise ValueError(f"self-loop on vertex {a}")
            if a not in vset or b not in vset:
                raise ValueError(f"edge ({a}, {b}) references unknown vertex")
            key = (min(a, b), max(a, b))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
            norm.append(key)
        self.edges = norm
        if set(self.inputs) & set(self.outputs):
            raise ValueError("inputs and outputs must be disjoint")
        for v in list(self.inputs) + list(self.outputs):
            if v not in vset:
                raise ValueError(f"boundary vertex {v} not in graph")
        adjacency: dict[int, list[int]] = {v: [] for v in self.vertices}
        for a, b in self.edges:
            adjacency[a].append(b)
            adjacency[b].append(a)
        self._adjacency = {v: tuple(sorted(n)) for v, n in adjacency.items()}

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self._adjacency[v]


@dataclass
class MeasurementPattern:
    """A graph plus ordered measurements and the output byproduct rule."""

    name: str
    graph: GraphSpec
    order: list[int]
    measurements: dict[int, Measurement]
    byproducts: list[ByproductRule]  # one per output wire, in output order

    def __post_init__(self) -> None:
        measured = set(self.order)
        if measured != set(self.graph.vertices) - set(self.graph.outputs):
            raise ValueError("measurement order must cover exactly the non-outputs")
        if set(self.measurements) != measured:
            raise ValueError("measurement table does not match the order list")
        if len(self.byproducts) != len(self.graph.outputs):
            raise ValueError("need one byproduct rule per output wire")
        earlier: set[int] = set()
        for v in self.order:
            m = self.measurements[v]
            if not m.sign_bits <= earlier:
                raise ValueError(f"angle of vertex {v} references later outcomes")
            earlier.add(v)
        for rule in self.byproducts:
            if not (rule.x_bits | rule.z_bits) <= measured:
                raise ValueError("byproduct references an unmeasured vertex")

    @property
    def n_adaptive(self) -> int:
        return sum(1 for m in self.measurements.values() if m.kind == "R")


def _bits_text(bits: frozenset[int]) -> str:
    return " ".join(f"s{b}" for b in sorted(bits)) if bits else "-"


def _parse_bits(token: str) -> frozenset[int]:
    if token.strip() == "-":
        return frozenset()
    out = set()
    for part in token.split():
        if not part.startswith("s"):
            raise ValueError(f"bad outcome bit token {part!r}")
        out.add(int(part[1:]))
    return frozenset(out)


def _angle_text(num) -> str:
    if num != int(num):
        raise ValueError("only multiples of pi/4 are serializable")
    return f"{int(num)}/4pi"


def _parse_angle(token: str) -> int:
    if not token.endswith("/4pi"):
        raise ValueError(f"bad angle token {token!r}")
    return int(token[: -len("/4pi")])


def pattern_to_text(p: MeasurementPattern) -> str:
    """Serialize to the human-readable pattern format (bit-exact round trip)."""
    lines = [
        f"format_version: {FORMAT_VERSION}",
        f"name: {p.name}",
        "vertices: " + " ".join(str(v) for v in p.graph.vertices),
        "inputs: " + " ".join(str(v) for v in p.graph.inputs),
        "outputs: " + " ".join(str(v) for v in p.graph.outputs),
        "edges:",
    ]
    for a, b in p.graph.edges:
        lines.append(f"  {a} {b}")
    lines.append("order: " + " ".join(str(v) for v in p.order))
    lines.append("measurements:")
    for v in p.order:
        m = p.measurements[v]
        if m.kind == "R":
            lines.append(f"  {v} R {_angle_text(m.num)} | {_bits_text(m.sign_bits)}")
        else:
            lines.append(f"  {v} {m.kind}")
    lines.append("byproducts:")
    for wire, rule in enumerate(p.byproducts):
        lines.append(f"  out{wire} X | {_bits_text(rule.x_bits)}")
        lines.append(f"  out{wire} Z | {_bits_text(rule.z_bits)}")
    return "\n".join(lines) + "\n"


def pattern_from_text(text: str) -> MeasurementPattern:
    header: dict[str, str] = {}
    edges: list[tuple[int, int]] = []
    meas: dict[int, Measurement] = {}
    byp: dict[tuple[int, str], frozenset[int]] = {}
    section = None
    for raw in text.splitlines():
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        if not raw.startswith(" "):
            key, _, value = raw.partition(":")
            key = key.strip()
            if key in ("edges", "measurements", "byproducts"):
                section = key
            else:
                header[key] = value.strip()
                section = None
            continue
        body = raw.strip()
        if section == "edges":
            a, b = body.split()
            edges.append((int(a), int(b)))
        elif section == "measurements":
            head, _, bits = body.partition("|")
            parts = head.split()
            v = int(parts[0])
            kind = parts[1]
            if kind == "R":
                meas[v] = Measurement(v, "R", _parse_angle(parts[2]), _parse_bits(bits))
            else:
                meas[v] = Measurement(v, kind)
        elif section == "byproducts":
            head, _, bits = body.partition("|")
            label, pauli = head.split()
            wire = int(label.removeprefix("out"))
            byp[(wire, pauli.strip())] = _parse_bits(bits)
        else:
            raise ValueError(f"stray indented line: {raw!r}")
    if int(header["format_version"]) != FORMAT_VERSION:
        raise ValueError(f"unsupported format version {header['format_version']}")
    graph = GraphSpec(
        vertices=[int(v) for v in header["vertices"].split()],
        edges=edges,
        inputs=[int(v) for v in header["inputs"].split()],
        outputs=[int(v) for v in header["outputs"].split()],
    )
    order = [int(v) for v in header["order"].split()]
    n_out = len(graph.outputs)
    rules = [
        ByproductRule(
            x_bits=byp.get((w, "X"), frozenset()),
            z_bits=byp.get((w, "Z"), frozenset()),
        )
        for w in range(n_out)
    ]
    return MeasurementPattern(
        name=header.get("name", ""),
        graph=graph,
        order=order,
        measurements=meas,
        byproducts=rules,
    )
