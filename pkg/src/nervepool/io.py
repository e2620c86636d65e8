"""Text formats for complexes, partitions and features; JSON and DOT export."""

from __future__ import annotations

import json
from typing import Mapping

import numpy as np

from .complex import LabeledMatrix, SimplicialComplex, make_simplex
from .errors import IncompleteCoverError, MalformedInputError, UnknownVertexError
from .homology import betti
from .pooling import PooledResult, VertexAssignment

FORMAT = "nervepool-pooled/1"


class ParseError(MalformedInputError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def _records(text: str):
    """Yield ``(line_number, fields)`` for every non-blank, non-comment line."""
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if any(not f for f in fields):
            raise ParseError(number, f"empty field in {line!r}")
        yield number, fields


def parse_complex(text: str) -> SimplicialComplex:
    """One maximal simplex per line, vertices separated by commas."""
    maximal = []
    for number, fields in _records(text):
        try:
            maximal.append(make_simplex(fields))
        except MalformedInputError as exc:
            raise ParseError(number, str(exc)) from None
    if not maximal:
        raise MalformedInputError("complex file contains no simplices")
    return SimplicialComplex.from_maximal_simplices(maximal)


def format_complex(K: SimplicialComplex) -> str:
    return "".join(",".join(s) + "\n" for s in K.maximal_simplices())


def parse_partition(text: str, K: SimplicialComplex) -> VertexAssignment:
    """``vertex,cluster[,weight]`` records; repeated vertices make a soft assignment."""
    known = set(K.vertices)
    records = []
    for number, fields in _records(text):
        if len(fields) not in (2, 3):
            raise ParseError(number, "expected vertex,cluster[,weight]")
        vertex, cluster = fields[0], fields[1]
        if vertex not in known:
            raise UnknownVertexError(f"line {number}: vertex {vertex!r} is not in the complex")
        weight = 1.0
        if len(fields) == 3:
            try:
                weight = float(fields[2])
            except ValueError:
                raise ParseError(number, f"weight {fields[2]!r} is not a number") from None
            if not np.isfinite(weight) or weight <= 0:
                raise ParseError(number, f"weight must be positive, got {fields[2]}")
        records.append((vertex, cluster, weight))
    missing = known - {v for v, _, _ in records}
    if missing:
        raise IncompleteCoverError(f"vertices without a cluster: {sorted(missing)}")
    try:
        return VertexAssignment.from_records(records)
    except MalformedInputError as exc:
        raise MalformedInputError(f"partition: {exc}") from None


def format_partition(S0: VertexAssignment) -> str:
    lines = []
    for v, row in zip(S0.vertices, S0.weights):
        for c, w in zip(S0.clusters, row):
            if w > 0:
                lines.append(f"{v},{c}" if S0.kind == "hard" else f"{v},{c},{float(w)!r}")
    return "\n".join(lines) + "\n"


def parse_features(text: str, K: SimplicialComplex) -> tuple[int, np.ndarray]:
    """Feature table: a simplex label (vertices joined by ``-``) then values.

    Returns the dimension and a matrix whose rows follow the simplex order of
    ``K``.  Every simplex of that dimension must appear exactly once.
    """
    rows: dict[int, list[float]] = {}
    dim = width = None
    for number, fields in _records(text):
        label = make_simplex(fields[0].split("-"))
        p = len(label) - 1
        if dim is None:
            dim, width = p, len(fields) - 1
        if p != dim:
            raise ParseError(number, f"mixes dimension {p} with dimension {dim}")
        if len(fields) - 1 != width:
            raise ParseError(number, f"expected {width} values, found {len(fields) - 1}")
        if label not in K:
            raise ParseError(number, f"simplex {label} is not in the complex")
        i = K.index(label)
        if i in rows:
            raise ParseError(number, f"simplex {label} listed twice")
        try:
            rows[i] = [float(x) for x in fields[1:]]
        except ValueError:
            raise ParseError(number, "feature values must be numbers") from None
    if dim is None:
        raise MalformedInputError("feature file is empty")
    if len(rows) != len(K.simplices(dim)):
        raise MalformedInputError(
            f"features given for {len(rows)} of {len(K.simplices(dim))} simplices of dimension {dim}")
    X = np.array([rows[i] for i in range(len(rows))], dtype=float).reshape(len(rows), width)
    return dim, X


# -- output -----------------------------------------------------------------


def _matrix_doc(m: LabeledMatrix) -> dict:
    return {"shape": list(m.shape), "entries": [[r, c, v] for r, c, v in m.triplets()]}


def pooled_document(result: PooledResult, K: SimplicialComplex,
                    normalized_adjacency: bool = False) -> dict:
    """Structured form of a pooling run; triplets are sorted by (row, col)."""
    pooled = result.support_complex()
    doc = {
        "format": FORMAT,
        "input": {
            "simplices": [[list(s) for s in layer] for layer in K.simplices_by_dim],
            "betti": list(betti(K)),
        },
        "output": {
            "dim": result.dim,
            "simplices": [[list(s) for s in layer] for layer in result.labels],
            "betti": list(betti(pooled)),
            "extraneous_boundary_entries": len(result.extraneous_entries()),
        },
        "boundaries": {str(p): _matrix_doc(B) for p, B in sorted(result.boundaries.items())},
        "adjacency": {str(p): _matrix_doc(A) for p, A in sorted(result.adjacency.items())},
    }
    if normalized_adjacency:
        doc["adjacency_normalized"] = {
            str(p): _matrix_doc(A) for p, A in sorted(result.adjacency_normalized.items())}
    if result.features:
        doc["features"] = {str(p): X.tolist() for p, X in sorted(result.features.items())}
    doc["assignment"] = {
        f"{q},{p}": _matrix_doc(result.assignment.block(q, p))
        for q, p in sorted(result.assignment.blocks)
    }
    return doc


def dumps(doc, indent: int = 1, _level: int = 0) -> str:
    """JSON with one line per dictionary key and each list on a single line."""
    if not isinstance(doc, dict) or not doc:
        return json.dumps(doc, separators=(",", ":"))
    pad = " " * (indent * (_level + 1))
    items = [f"{pad}{json.dumps(k)}: {dumps(v, indent, _level + 1)}" for k, v in doc.items()]
    return "{\n" + ",\n".join(items) + "\n" + " " * (indent * _level) + "}"


def _quote(name: str) -> str:
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(K: SimplicialComplex | PooledResult, clusters: Mapping[str, str] | None = None,
               name: str = "K") -> str:
    """Graphviz description of the 1-skeleton.

    ``clusters`` maps vertices to cluster ids of a hard partition; nodes of
    the same cluster share a fill colour.
    """
    if isinstance(K, PooledResult):
        K = K.support_complex()
    palette = ("#e41a1c", "#377eb8", "#4daf4a", "#984ea3", "#ff7f00",
               "#ffff33", "#a65628", "#f781bf", "#999999")
    order = {c: i for i, c in enumerate(sorted(set(clusters.values())))} if clusters else {}
    lines = [f"graph {_quote(name)} {{"]
    for v in K.vertices:
        if clusters and v in clusters:
            c = clusters[v]
            colour = palette[order[c] % len(palette)]
            lines.append(f'  {_quote(v)} [cluster={_quote(c)}, style=filled, fillcolor="{colour}"];')
        else:
            lines.append(f"  {_quote(v)};")
    for a, b in K.simplices(1):
        lines.append(f"  {_quote(a)} -- {_quote(b)};")
    lines.append("}")
    return "\n".join(lines) + "\n"
