"""Simplex meshes in the FELM text format, element geometry and local analysis.

FELM layout (``#`` starts a comment, blank lines are ignored)::

    dim 2
    nodes 4
    1 0 0
    2 1 0
    3 1 1
    4 0 1
    elements 2
    1 1 2 3
    2 1 3 4

Node and element ids in files are 1-based and must appear in order.
Internally everything is 0-based.
"""

from __future__ import annotations

import itertools
import math
import os
import re
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .distribution import (
    Partition,
    SuccessDistribution,
    at_least_one_structured,
    dp_cap,
    exact_distribution,
)
from .errors import DomainError, MeshParseError
from .law import AccuracyLaw, accuracy_probability

# A simplex is degenerate when its volume is below this fraction of diameter^dim.
DEGENERACY_TOL = 1e-12

_TOKEN = re.compile(r"\S+")


@dataclass(frozen=True)
class SimplexMesh:
    dim: int
    nodes: np.ndarray = field(repr=False)
    elements: np.ndarray = field(repr=False)

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float, ndmin=2)
        elements = np.array(self.elements, dtype=np.int64, ndmin=2)
        if elements.size == 0:
            elements = elements.reshape(0, self.dim + 1)
        if self.dim not in (1, 2, 3):
            raise DomainError(f"dim must be 1, 2 or 3, got {self.dim}")
        if nodes.shape[1] != self.dim:
            raise DomainError(f"nodes need {self.dim} coordinates, got {nodes.shape[1]}")
        if elements.size and elements.shape[1] != self.dim + 1:
            raise DomainError(f"simplexes need {self.dim + 1} vertices, got {elements.shape[1]}")
        if elements.size and (elements.min() < 0 or elements.max() >= len(nodes)):
            raise DomainError("element references a node index out of range")
        for e, verts in enumerate(elements):
            if len(set(verts.tolist())) != len(verts):
                raise DomainError(f"element {e} has a repeated vertex")
        nodes.setflags(write=False)
        elements.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "elements", elements)
        for e in range(len(elements)):
            if _is_degenerate(self.vertices(e)):
                raise DomainError(f"element {e} is degenerate (zero volume)")

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    def vertices(self, element_id: int) -> np.ndarray:
        if not 0 <= element_id < len(self.elements):
            raise DomainError(f"element index {element_id} out of range [0, {len(self.elements)})")
        return self.nodes[self.elements[element_id]]


def _simplex_volume(verts: np.ndarray) -> float:
    edges = verts[1:] - verts[0]
    d = len(edges)
    if edges.shape[0] == edges.shape[1]:
        return abs(float(np.linalg.det(edges))) / math.factorial(d)
    # Gram determinant for a simplex embedded in a higher-dimensional space.
    gram = edges @ edges.T
    return math.sqrt(max(float(np.linalg.det(gram)), 0.0)) / math.factorial(d)


def _vertex_diameter(verts: np.ndarray) -> float:
    return max(float(np.linalg.norm(a - b)) for a, b in itertools.combinations(verts, 2))


def _is_degenerate(verts: np.ndarray) -> bool:
    h = _vertex_diameter(verts)
    if h == 0.0:
        return True
    return _simplex_volume(verts) <= DEGENERACY_TOL * h ** (len(verts) - 1)


def diameter(mesh: SimplexMesh, element_id: int) -> float:
    """Largest distance between two vertices of the simplex."""
    return _vertex_diameter(mesh.vertices(element_id))


def diameters(mesh: SimplexMesh) -> np.ndarray:
    return np.array([diameter(mesh, e) for e in range(mesh.n_elements)])


def mesh_size(mesh: SimplexMesh) -> float:
    if mesh.n_elements == 0:
        raise DomainError("mesh has no elements")
    return float(diameters(mesh).max())


def simplex_volume(mesh: SimplexMesh, element_id: int) -> float:
    return _simplex_volume(mesh.vertices(element_id))


def regularity_ratio(mesh: SimplexMesh, element_id: int) -> float:
    """Shape measure h_K / rho_K, rho_K being the inradius.

    rho = dim * volume / (sum of facet measures). Segments return 2 by
    convention.
    """
    verts = mesh.vertices(element_id)
    if mesh.dim == 1:
        return 2.0
    volume = _simplex_volume(verts)
    if volume <= 0.0:
        raise DomainError(f"element {element_id} is degenerate")
    n = len(verts)
    surface = math.fsum(
        _simplex_volume(verts[[j for j in range(n) if j != i]]) for i in range(n)
    )
    rho = mesh.dim * volume / surface
    return _vertex_diameter(verts) / rho


# --- parsing -----------------------------------------------------------------


def _lines(text: str):
    """Yield (line_no, [(column, token), ...]) for non-empty lines, comments stripped."""
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        toks = [(m.start() + 1, m.group()) for m in _TOKEN.finditer(line)]
        if toks:
            yield no, toks


def _int(tok, no, what):
    col, s = tok
    try:
        return int(s)
    except ValueError:
        raise MeshParseError(f"expected integer {what}, got {s!r}", no, col) from None


def _float(tok, no, what):
    col, s = tok
    try:
        v = float(s)
    except ValueError:
        raise MeshParseError(f"expected number {what}, got {s!r}", no, col) from None
    if not math.isfinite(v):
        raise MeshParseError(f"{what} must be finite, got {s!r}", no, col)
    return v


def _header(item, keyword, mismatch=None):
    no, toks = item
    if toks[0][1] != keyword:
        if mismatch:
            raise MeshParseError(mismatch, no, toks[0][0])
        raise MeshParseError(f"unknown header {toks[0][1]!r}, expected {keyword!r}", no, toks[0][0])
    if len(toks) != 2:
        col = toks[2][0] if len(toks) > 2 else toks[0][0]
        raise MeshParseError(f"header {keyword!r} takes exactly one integer", no, col)
    value = _int(toks[1], no, f"after {keyword!r}")
    if value < 0:
        raise MeshParseError(f"{keyword} count must be non-negative", no, toks[1][0])
    return value


def parse_mesh(source: str | bytes) -> SimplexMesh:
    """Parse a FELM document. Errors carry line and column of the offending token."""
    text = source.decode("utf-8") if isinstance(source, (bytes, bytearray)) else source
    lines = list(_lines(text))
    pos = 0
    last_line = len(text.splitlines()) or 1

    def take(expect):
        nonlocal pos
        if pos >= len(lines):
            raise MeshParseError(f"unexpected end of input, expected {expect}", last_line)
        item = lines[pos]
        pos += 1
        return item

    no, toks = take("'dim' header")
    dim = _header((no, toks), "dim")
    if dim not in (1, 2, 3):
        raise MeshParseError(f"dim must be 1, 2 or 3, got {dim}", no, toks[1][0])

    n_nodes = _header(take("'nodes' header"), "nodes")
    nodes = []
    for i in range(1, n_nodes + 1):
        no, toks = take(f"node {i}")
        if toks[0][1] == "elements":
            raise MeshParseError(
                f"node count mismatch: header declares {n_nodes} nodes, found {i - 1}", no, toks[0][0]
            )
        nid = _int(toks[0], no, "node id")
        if nid != i:
            raise MeshParseError(f"node ids must be 1..N in order, expected {i}, got {nid}", no, toks[0][0])
        if len(toks) != dim + 1:
            col = toks[dim + 1][0] if len(toks) > dim + 1 else toks[-1][0]
            raise MeshParseError(
                f"wrong arity: node needs {dim} coordinate(s), got {len(toks) - 1}", no, col
            )
        nodes.append([_float(t, no, "coordinate") for t in toks[1:]])

    n_elem = _header(
        take("'elements' header"),
        "elements",
        mismatch=f"node count mismatch: header declares {n_nodes} nodes, found more",
    )
    elements = []
    for i in range(1, n_elem + 1):
        no, toks = take(f"element {i}")
        eid = _int(toks[0], no, "element id")
        if eid != i:
            raise MeshParseError(f"element ids must be 1..M in order, expected {i}, got {eid}", no, toks[0][0])
        if len(toks) != dim + 2:
            col = toks[dim + 2][0] if len(toks) > dim + 2 else toks[-1][0]
            raise MeshParseError(
                f"wrong arity: simplex needs {dim + 1} vertices, got {len(toks) - 1}", no, col
            )
        verts = []
        for tok in toks[1:]:
            v = _int(tok, no, "vertex index")
            if not 1 <= v <= n_nodes:
                raise MeshParseError(f"vertex index {v} out of range 1..{n_nodes}", no, tok[0])
            if v - 1 in verts:
                raise MeshParseError(f"repeated vertex {v} in element {eid}", no, tok[0])
            verts.append(v - 1)
        if _is_degenerate(np.array([nodes[v] for v in verts])):
            raise MeshParseError(f"degenerate simplex: element {eid} has zero volume", no, toks[0][0])
        elements.append(verts)

    if pos < len(lines):
        no, toks = lines[pos]
        raise MeshParseError(
            f"element count mismatch: header declares {n_elem} elements, found more", no, toks[0][0]
        )

    return SimplexMesh(
        dim=dim,
        nodes=np.array(nodes, dtype=float).reshape(n_nodes, dim),
        elements=np.array(elements, dtype=np.int64).reshape(n_elem, dim + 1),
    )


def read_mesh(path: str | os.PathLike) -> SimplexMesh:
    with open(path, "rb") as f:
        return parse_mesh(f.read())


def format_mesh(mesh: SimplexMesh) -> str:
    """Write a mesh back out in FELM form."""
    out = [f"dim {mesh.dim}", f"nodes {len(mesh.nodes)}"]
    out += [f"{i} " + " ".join(repr(float(x)) for x in p) for i, p in enumerate(mesh.nodes, 1)]
    out.append(f"elements {mesh.n_elements}")
    out += [f"{i} " + " ".join(str(v + 1) for v in e) for i, e in enumerate(mesh.elements, 1)]
    return "\n".join(out) + "\n"


# --- local analysis ----------------------------------------------------------


@dataclass(frozen=True)
class SimplexReport:
    element_id: int
    diameter: float
    probability: float
    finer_than_crossover: bool


@dataclass(frozen=True)
class LocalAnalysis:
    reports: tuple
    partition: Partition
    mesh_size: float
    at_least_one: float
    distribution: Optional[SuccessDistribution] = None

    def advisory(self) -> list[int]:
        """Elements with h_K > h*, where the lower-order element is the likelier winner."""
        return [r.element_id for r in self.reports if not r.finer_than_crossover]


def local_analysis(
    mesh: SimplexMesh, law: AccuracyLaw, selection: Optional[Sequence[int]] = None
) -> LocalAnalysis:
    """Per-simplex law values and the law of the number of simplexes where P_m wins.

    ``selection`` restricts the analysis to a subset of (0-based) elements,
    e.g. the simplexes created by a refinement step. Defaults to all.
    """
    if selection is None:
        selection = range(mesh.n_elements)
    selection = [int(e) for e in selection]
    if not selection:
        raise DomainError("selection is empty; at least one element is required")
    for e in selection:
        if not 0 <= e < mesh.n_elements:
            raise DomainError(f"selected element {e} does not exist (mesh has {mesh.n_elements})")

    reports = []
    for e in selection:
        h = diameter(mesh, e)
        reports.append(
            SimplexReport(
                element_id=e,
                diameter=h,
                probability=accuracy_probability(law, h),
                finer_than_crossover=h <= law.h_star,
            )
        )
    sizes = [r.diameter for r in reports]
    p_any, partition = at_least_one_structured(law, sizes)
    dist = None
    if len(reports) <= dp_cap():
        dist = exact_distribution([r.probability for r in reports])
    return LocalAnalysis(
        reports=tuple(reports),
        partition=partition,
        mesh_size=max(sizes),
        at_least_one=p_any,
        distribution=dist,
    )
