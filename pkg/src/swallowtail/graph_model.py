"""Decorated quotient graphs, Harper Hamiltonians and the built-in model zoo."""
from __future__ import annotations

import difflib
import json
from collections import defaultdict
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .trigpoly import AFFINE, TORUS, TrigPoly


class ModelError(ValueError):
    """Invalid model description or unknown model name."""


@dataclass(frozen=True)
class Edge:
    """Directed representative ``source -> target`` with weight ``exp(i m.b)``."""

    source: int
    target: int
    m: tuple[int, ...]
    tree: bool = False

    @property
    def is_loop(self) -> bool:
        return self.source == self.target


@dataclass(frozen=True)
class QuotientGraph:
    """Finite multigraph with translation vectors and a spanning tree rooted at 0."""

    name: str
    k: int
    n: int
    edges: tuple[Edge, ...]
    variables: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ModelError("a graph needs at least one vertex")
        for e in self.edges:
            if not (0 <= e.source < self.k and 0 <= e.target < self.k):
                raise ModelError(f"edge {e.source}->{e.target} uses a vertex outside 0..{self.k - 1}")
            if len(e.m) != self.n:
                raise ModelError(f"edge {e.source}->{e.target} has translation {e.m}, expected length {self.n}")
            if e.tree and any(e.m):
                raise ModelError(f"tree edge {e.source}->{e.target} must have weight 1 (m = 0), got {e.m}")
            if e.tree and e.is_loop:
                raise ModelError("a loop cannot be a spanning-tree edge")
        if self.variables is not None and len(self.variables) != self.n:
            raise ModelError(f"{len(self.variables)} variable names given for n={self.n}")
        if not _connected(self.k, [(e.source, e.target) for e in self.edges]):
            raise ModelError("underlying graph is not connected")
        tree = [(e.source, e.target) for e in self.tree_edges]
        if len(tree) != self.k - 1 or not _connected(self.k, tree):
            raise ModelError(f"tree edges do not form a spanning tree ({len(tree)} edges for k={self.k})")

    @property
    def tree_edges(self) -> tuple[Edge, ...]:
        return tuple(e for e in self.edges if e.tree)

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "k": self.k,
            "n": self.n,
            "edges": [{"from": e.source, "to": e.target, "m": list(e.m), "tree": e.tree} for e in self.edges],
        }
        if self.variables is not None:
            out["variables"] = list(self.variables)
        return out


def _connected(k: int, pairs) -> bool:
    parent = list(range(k))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in pairs:
        parent[find(i)] = find(j)
    return len({find(v) for v in range(k)}) == 1


def parse_model(config: str | Mapping) -> QuotientGraph:
    """Build a validated graph from a JSON string or an already-decoded dict."""
    if isinstance(config, str):
        try:
            config = json.loads(config)
        except json.JSONDecodeError as exc:
            raise ModelError(f"model file is not valid JSON: {exc}") from None
    try:
        k, n = int(config["k"]), int(config["n"])
        edges = tuple(
            Edge(int(e["from"]), int(e["to"]), tuple(int(x) for x in e.get("m", [0] * n)), bool(e.get("tree", False)))
            for e in config["edges"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelError(f"malformed model description: {exc!r}") from None
    variables = config.get("variables")
    return QuotientGraph(config.get("name", "unnamed"), k, n, edges,
                         tuple(variables) if variables is not None else None)


def render_model(g: QuotientGraph) -> str:
    return json.dumps(g.to_dict(), indent=2)


@dataclass(frozen=True)
class HamiltonianFamily:
    """A Hermitian ``k x k`` matrix of TrigPoly entries over a base of dimension ``n``."""

    k: int
    n: int
    entries: tuple[tuple[TrigPoly, ...], ...]
    backend: str = TORUS
    graph: QuotientGraph | None = None
    name: str = ""
    variables: tuple[str, ...] | None = None

    def __post_init__(self):
        if len(self.entries) != self.k or any(len(row) != self.k for row in self.entries):
            raise ModelError(f"entries are not a {self.k}x{self.k} matrix")
        for i in range(self.k):
            for j in range(i, self.k):
                if self.entries[j][i] != self.entries[i][j].conjugate():
                    raise ModelError(f"family is not Hermitian at ({i}, {j})")

    def matrices(self, B) -> np.ndarray:
        """Numeric matrices ``H(b)`` for every row of ``B``; shape ``(S, k, k)``."""
        from .trigpoly import CompiledPolys

        B = np.atleast_2d(np.asarray(B, dtype=float))
        flat = [p for row in self.entries for p in row]
        vals = CompiledPolys(flat, self.n, self.backend).derivative(B)
        return vals.reshape(B.shape[0], self.k, self.k)

    def eigenvalues(self, B) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrices(B))

    def trace(self) -> TrigPoly:
        out = TrigPoly.zero(self.n, self.backend)
        for i in range(self.k):
            out = out + self.entries[i][i]
        return out

    def to_dict(self) -> dict:
        out = {
            "name": self.name, "kind": "hamiltonian", "backend": self.backend,
            "k": self.k, "n": self.n,
            "entries": [[p.to_dict() for p in row] for row in self.entries],
        }
        if self.variables is not None:
            out["variables"] = list(self.variables)
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "HamiltonianFamily":
        try:
            entries = tuple(tuple(TrigPoly.from_dict(p) for p in row) for row in data["entries"])
            variables = data.get("variables")
            return cls(int(data["k"]), int(data["n"]), entries, data.get("backend", TORUS),
                       name=data.get("name", "unnamed"),
                       variables=tuple(variables) if variables is not None else None)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ModelError):
                raise
            raise ModelError(f"malformed Hamiltonian description: {exc!r}") from None


def harper_hamiltonian(g: QuotientGraph) -> HamiltonianFamily:
    """``H_ij`` is the sum of ``w(e)`` over directed edges from ``v_i`` to ``v_j``.

    Each stored edge contributes ``exp(i m.b)`` at ``(i, j)`` and its reversal
    ``exp(-i m.b)`` at ``(j, i)``; a loop therefore adds ``2cos(m.b)``.
    """
    acc: dict[tuple[int, int], dict[tuple, int]] = defaultdict(lambda: defaultdict(int))
    for e in g.edges:
        neg = tuple(-x for x in e.m)
        acc[e.source, e.target][e.m] += 1
        acc[e.target, e.source][neg] += 1
    entries = tuple(
        tuple(TrigPoly(acc.get((i, j), {}), g.n) for j in range(g.k)) for i in range(g.k)
    )
    return HamiltonianFamily(g.k, g.n, entries, TORUS, graph=g, name=g.name, variables=g.variables)


def simple_laced_no_loops(g: QuotientGraph) -> tuple[bool, bool, int]:
    """Return (no small loops, simply laced, number of undirected edges of the simple graph)."""
    no_loops = not any(e.is_loop for e in g.edges)
    classes: dict[frozenset, int] = defaultdict(int)
    for e in g.edges:
        classes[frozenset((e.source, e.target))] += 1
    simply_laced = all(c == 1 for c in classes.values())
    return no_loops, simply_laced, len(classes)


# -- model zoo ------------------------------------------------------------

@dataclass(frozen=True)
class BoundaryCurve:
    """The image of ``t -> t * direction`` on the torus, a candidate region boundary."""

    label: str
    direction: tuple[int, ...]


@dataclass(frozen=True)
class ModelSpec:
    name: str
    hamiltonian: HamiltonianFamily
    graph: QuotientGraph | None = None
    boundary_curves: tuple[BoundaryCurve, ...] = ()
    box: float = 2.0  # half-width of the sampling box for affine bases
    description: str = ""

    @property
    def k(self) -> int:
        return self.hamiltonian.k

    @property
    def n(self) -> int:
        return self.hamiltonian.n

    @property
    def backend(self) -> str:
        return self.hamiltonian.backend

    @property
    def variables(self) -> tuple[str, ...] | None:
        return self.hamiltonian.variables

    def to_dict(self) -> dict:
        if self.graph is not None:
            return self.graph.to_dict()
        return self.hamiltonian.to_dict()


def _e(i, n):
    v = [0] * n
    v[i] = 1
    return tuple(v)


def _graph(name, k, n, edges, variables=None) -> QuotientGraph:
    return QuotientGraph(name, k, n, tuple(Edge(i, j, tuple(m), t) for i, j, m, t in edges),
                         tuple(variables) if variables else None)


def _triangle(name, bond_12, bond_01=(), bond_02=(), variables=None):
    n = len(bond_12) + len(bond_01) + len(bond_02)
    z = (0,) * n
    edges = [(0, 1, z, True), (0, 2, z, True)]
    axis = 0
    for i, j, bonds in ((1, 2, bond_12), (0, 1, bond_01), (0, 2, bond_02)):
        for _ in bonds:
            edges.append((i, j, _e(axis, n), False))
            axis += 1
    return _graph(name, 3, n, edges, variables)


def _pauli_family(name: str, with_identity: bool) -> HamiltonianFamily:
    n = 4 if with_identity else 3
    a, b, c = (TrigPoly.variable(i, n) for i in range(3))
    d = TrigPoly.variable(3, n) if with_identity else TrigPoly.zero(n, AFFINE)
    i_unit = complex(0, 1)
    entries = ((c + d, a - b * i_unit), (a + b * i_unit, d - c))
    return HamiltonianFamily(2, n, entries, AFFINE, name=name,
                             variables=("a", "b", "c", "d")[:n])


def _build_zoo() -> dict[str, ModelSpec]:
    zoo: dict[str, ModelSpec] = {}

    def add(spec: ModelSpec):
        zoo[spec.name] = spec

    def from_graph(g: QuotientGraph, curves=(), description=""):
        add(ModelSpec(g.name, harper_hamiltonian(g), g, tuple(curves), description=description))

    z3 = (0, 0, 0)
    from_graph(
        _graph("gyroid", 4, 3, [
            (0, 1, z3, True), (0, 2, z3, True), (0, 3, z3, True),
            (1, 2, (1, 0, 0), False), (1, 3, (0, -1, 0), False), (2, 3, (0, 0, 1), False),
        ], "abc"),
        [BoundaryCurve("a=b=c", (1, 1, 1)), BoundaryCurve("a=b=-c", (1, 1, -1))],
        "full square K4; the gyroid wire network",
    )
    from_graph(_graph("honeycomb", 2, 2, [(0, 1, (0, 0), True), (0, 1, (1, 0), False), (0, 1, (0, 1), False)],
                      "uv"), description="graphene: two vertices, three parallel edges")
    from_graph(_graph("diamond", 2, 3, [(0, 1, z3, True), (0, 1, (1, 0, 0), False),
                                        (0, 1, (0, 1, 0), False), (0, 1, (0, 0, 1), False)], "uvw"),
               description="diamond: two vertices, four parallel edges")
    from_graph(_graph("p_lattice", 1, 3, [(0, 0, _e(i, 3), False) for i in range(3)], "uvw"),
               description="primitive cubic lattice: one vertex with three loops")
    from_graph(_triangle("triangle", "a", variables="a"), description="triangle with single bonds")
    from_graph(_triangle("triangle_ab", "ab", variables="ab"), description="triangle with one double bond")
    from_graph(_triangle("triangle_abc", "abc", variables="abc"), description="triangle with one triple bond")
    from_graph(_triangle("triangle_abd", "ab", bond_01="d", variables="abd"),
               description="triangle with two double bonds")
    from_graph(_triangle("triangle_abcd", "ab", bond_01="c", bond_02="d", variables="abcd"),
               description="triangle with three double bonds")
    add(ModelSpec("vnw3", _pauli_family("vnw3", False),
                  description="von Neumann-Wigner: a sx + b sy + c sz over R^3"))
    add(ModelSpec("vnw4", _pauli_family("vnw4", True),
                  description="all Hermitian 2x2 matrices: a sx + b sy + c sz + d Id over R^4"))
    return zoo


_ZOO: dict[str, ModelSpec] | None = None

MODEL_NAMES = ("gyroid", "honeycomb", "diamond", "p_lattice", "triangle", "triangle_ab",
               "triangle_abc", "triangle_abd", "triangle_abcd", "vnw3", "vnw4")


def builtin_model(name: str) -> ModelSpec:
    global _ZOO
    if _ZOO is None:
        _ZOO = _build_zoo()
    try:
        return _ZOO[name]
    except KeyError:
        close = difflib.get_close_matches(name, MODEL_NAMES, n=3)
        hint = f"; did you mean {', '.join(close)}?" if close else ""
        raise ModelError(f"unknown model {name!r}{hint} (available: {', '.join(MODEL_NAMES)})") from None


def model_from_dict(data: Mapping, name: str | None = None) -> ModelSpec:
    """Resolve a model file: a graph (``edges``) or an explicit family (``entries``)."""
    if "edges" in data:
        g = parse_model(data)
        return ModelSpec(name or g.name, harper_hamiltonian(g), g)
    if "entries" in data:
        h = HamiltonianFamily.from_dict(data)
        return ModelSpec(name or h.name, h)
    raise ModelError("model file needs either an 'edges' or an 'entries' field")


def second_coefficient(g: QuotientGraph) -> TrigPoly:
    """``a_{k-2}`` read off the graph: minus the sum of ``|w+|^2`` over simple edges.

    Valid for graphs without small loops.
    """
    h = harper_hamiltonian(g)
    out = TrigPoly.zero(g.n)
    for i in range(g.k):
        for j in range(i + 1, g.k):
            out = out - h.entries[i][j] * h.entries[j][i]
    return out


def variable_names(n: int, names: Sequence[str] | None) -> tuple[str, ...]:
    from .trigpoly import DEFAULT_NAMES

    if names:
        return tuple(names)
    return DEFAULT_NAMES[:n] if n <= len(DEFAULT_NAMES) else tuple(f"b{i}" for i in range(n))


__all__ = [
    "Edge", "QuotientGraph", "HamiltonianFamily", "ModelSpec", "ModelError", "BoundaryCurve",
    "parse_model", "render_model", "harper_hamiltonian", "simple_laced_no_loops",
    "builtin_model", "model_from_dict", "MODEL_NAMES", "second_coefficient",
]
