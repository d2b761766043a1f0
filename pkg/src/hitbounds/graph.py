"""Finite weighted graphs with a marked origin and absorbing target set.

A graph is a finite vertex set with a symmetric nonnegative weight function on
vertex pairs (self-loops allowed), a distinguished origin vertex and a
non-empty set of target vertices not containing the origin.  The random walk
driven by these weights steps from x to y with probability w(x,y)/w_x, where
w_x is the total weight at x (a self-loop counts once).

Vertex labels are opaque (ints or strings).  A canonical integer indexing is
fixed at construction: integer labels first in numeric order, then string
labels in lexicographic order.  All matrix-valued quantities elsewhere in the
package are aligned to this indexing.

The on-disk format is JSON with fields ``vertices``, ``edges`` (triples
``[u, v, w]``), ``origin``, ``targets`` and optional ``metadata``.
Serialization emits a normal form (sorted vertices and edges, float weights)
that round-trips bit-exactly.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from collections import deque

import numpy as np

DENSE_VERTEX_LIMIT = 2000


class GraphError(ValueError):
    """Invalid graph structure or invalid operation on a graph."""


class ParseError(GraphError):
    """Malformed graph file."""


def _label_key(label):
    if isinstance(label, bool) or not isinstance(label, (int, str)):
        raise GraphError(f"vertex label must be int or str, got {label!r}")
    return (0, label, "") if isinstance(label, int) else (1, 0, label)


class WeightedGraph:
    """Immutable weighted graph with origin and targets.

    Treat instances as frozen: all derived data (canonical indexing, vertex
    weights, adjacency) is computed once at construction.
    """

    def __init__(self, edges, origin, targets, vertices=(), metadata=None):
        labels = set()
        pair_weights = {}
        for item in edges:
            try:
                u, v, w = item
            except (TypeError, ValueError):
                raise GraphError(f"edge must be a (u, v, weight) triple, got {item!r}")
            _label_key(u), _label_key(v)
            w = self._check_weight(u, v, w)
            labels.add(u)
            labels.add(v)
            key = (u, v) if _label_key(u) <= _label_key(v) else (v, u)
            if key in pair_weights:
                if pair_weights[key] != w:
                    raise GraphError(
                        f"conflicting duplicate edge {u!r}-{v!r}: "
                        f"{pair_weights[key]} vs {w}"
                    )
            else:
                pair_weights[key] = w
        for x in vertices:
            _label_key(x)
            labels.add(x)
        _label_key(origin)
        labels.add(origin)
        targets = tuple(targets)
        if not targets:
            raise GraphError("target set must be non-empty")
        for t in targets:
            _label_key(t)
            labels.add(t)
        if origin in targets:
            raise GraphError(f"origin {origin!r} must not be a target")

        self.labels = tuple(sorted(labels, key=_label_key))
        self.index = {x: i for i, x in enumerate(self.labels)}
        self.n = len(self.labels)
        self.origin = origin
        self.targets = tuple(sorted(set(targets), key=_label_key))
        self.origin_index = self.index[origin]
        self.target_indices = frozenset(self.index[t] for t in self.targets)
        self.metadata = dict(metadata) if metadata else {}

        adj = [dict() for _ in range(self.n)]
        for (u, v), w in pair_weights.items():
            if w == 0.0:
                continue  # zero weight == absent edge
            i, j = self.index[u], self.index[v]
            adj[i][j] = w
            adj[j][i] = w
        self.adjacency = tuple(adj)
        self.vertex_weights = np.array(
            [math.fsum(nbrs.values()) for nbrs in adj], dtype=float
        )

    @staticmethod
    def _check_weight(u, v, w):
        if isinstance(w, bool) or not isinstance(w, (int, float)):
            raise GraphError(f"weight of edge {u!r}-{v!r} must be a number, got {w!r}")
        w = float(w)
        if not math.isfinite(w):
            raise GraphError(f"weight of edge {u!r}-{v!r} must be finite")
        if w < 0.0:
            raise GraphError(f"negative weight {w} on edge {u!r}-{v!r}")
        return w

    # -- basic queries ----------------------------------------------------

    def weight(self, x, y) -> float:
        """Weight of the edge x-y (0.0 if absent)."""
        return self.adjacency[self.index[x]].get(self.index[y], 0.0)

    def vertex_weight(self, x) -> float:
        """Total weight w_x incident to x; a self-loop counts once."""
        return float(self.vertex_weights[self.index[x]])

    def set_weight(self, vertices=None) -> float:
        """Sum of vertex weights over a vertex set (default: the targets)."""
        if vertices is None:
            vertices = self.targets
        return float(sum(self.vertex_weights[self.index[x]] for x in set(vertices)))

    def total_weight(self) -> float:
        """w_V = sum of all vertex weights."""
        return float(self.vertex_weights.sum())

    def edge_list(self):
        """Sorted list of (i, j, w) index triples with i <= j."""
        out = []
        for i, nbrs in enumerate(self.adjacency):
            for j, w in nbrs.items():
                if i <= j:
                    out.append((i, j, w))
        out.sort()
        return out

    def neighbors(self, x):
        """Labels adjacent to x, in canonical order."""
        return tuple(self.labels[j] for j in sorted(self.adjacency[self.index[x]]))

    def distance(self, x, targets=None):
        """BFS hop distance from x to a vertex set (default: the targets).

        Returns math.inf when unreachable.  Self-loops do not shorten paths.
        """
        if targets is None:
            goal = self.target_indices
        elif isinstance(targets, (int, str)):
            goal = {self.index[targets]}
        else:
            goal = {self.index[t] for t in targets}
        start = self.index[x]
        if start in goal:
            return 0
        seen = {start}
        queue = deque([(start, 0)])
        while queue:
            i, d = queue.popleft()
            for j in sorted(self.adjacency[i]):
                if j in seen:
                    continue
                if j in goal:
                    return d + 1
                seen.add(j)
                queue.append((j, d + 1))
        return math.inf

    def component_of(self, x):
        """Canonical indices of the connected component containing x (sorted)."""
        start = self.index[x]
        seen = {start}
        queue = deque([start])
        while queue:
            i = queue.popleft()
            for j in self.adjacency[i]:
                if j not in seen:
                    seen.add(j)
                    queue.append(j)
        return sorted(seen)

    def weight_matrix(self, sparse=None):
        """Symmetric weight matrix in canonical order (dense or CSR)."""
        if sparse is None:
            sparse = self.n > DENSE_VERTEX_LIMIT
        if not sparse:
            m = np.zeros((self.n, self.n))
            for i, nbrs in enumerate(self.adjacency):
                for j, w in nbrs.items():
                    m[i, j] = w
            return m
        from scipy.sparse import csr_matrix

        rows, cols, vals = [], [], []
        for i, nbrs in enumerate(self.adjacency):
            for j, w in nbrs.items():
                rows.append(i)
                cols.append(j)
                vals.append(w)
        return csr_matrix((vals, (rows, cols)), shape=(self.n, self.n))

    # -- derived graphs ---------------------------------------------------

    def replace(self, origin=None, targets=None, metadata=None) -> "WeightedGraph":
        """Copy with a different origin/target marking on the same weights."""
        edges = [(self.labels[i], self.labels[j], w) for i, j, w in self.edge_list()]
        return WeightedGraph(
            edges,
            self.origin if origin is None else origin,
            self.targets if targets is None else targets,
            vertices=self.labels,
            metadata=self.metadata if metadata is None else metadata,
        )

    def contract_targets(self) -> "WeightedGraph":
        """Merge all targets into one vertex, dropping target-internal weight.

        Parallel edges produced by the merge are aggregated by summing.  The
        hitting time of the target set from the origin has the same law before
        and after.  The merged vertex keeps the canonically smallest target
        label.
        """
        merged = self.targets[0]
        tset = self.target_indices
        acc = {}
        for i, j, w in self.edge_list():
            u_t, v_t = i in tset, j in tset
            if u_t and v_t:
                continue
            u = merged if u_t else self.labels[i]
            v = merged if v_t else self.labels[j]
            key = (u, v) if _label_key(u) <= _label_key(v) else (v, u)
            acc[key] = acc.get(key, 0.0) + w
        keep = [x for x in self.labels if self.index[x] not in tset] + [merged]
        return WeightedGraph(
            [(u, v, w) for (u, v), w in acc.items()],
            self.origin,
            (merged,),
            vertices=keep,
            metadata=self.metadata,
        )

    def restrict_accessible(self) -> "WeightedGraph":
        """Drop non-target vertices unreachable from the origin with targets deleted.

        Target vertices are always kept.  The result satisfies the standing
        assumption that every surviving non-target vertex is accessible from
        the origin without first entering the target set; the hitting law from
        the origin is unchanged.
        """
        tset = self.target_indices
        seen = {self.origin_index}
        queue = deque([self.origin_index])
        while queue:
            i = queue.popleft()
            for j in self.adjacency[i]:
                if j not in seen and j not in tset:
                    seen.add(j)
                    queue.append(j)
        keep = seen | tset
        edges = [
            (self.labels[i], self.labels[j], w)
            for i, j, w in self.edge_list()
            if i in keep and j in keep
        ]
        return WeightedGraph(
            edges,
            self.origin,
            self.targets,
            vertices=[self.labels[i] for i in sorted(keep)],
            metadata=self.metadata,
        )


# -- file format ----------------------------------------------------------

_REQUIRED_FIELDS = ("vertices", "edges", "origin", "targets")


def parse(text: str) -> WeightedGraph:
    """Parse the JSON graph format into a WeightedGraph."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ParseError("top-level value must be an object")
    unknown = set(doc) - set(_REQUIRED_FIELDS) - {"metadata"}
    if unknown:
        raise ParseError(f"unknown fields: {sorted(unknown)}")
    for field in _REQUIRED_FIELDS:
        if field not in doc:
            raise ParseError(f"missing field {field!r}")
    vertices = doc["vertices"]
    if not isinstance(vertices, list):
        raise ParseError("'vertices' must be a list")
    known = set()
    for x in vertices:
        _label_key(x)
        if x in known:
            raise ParseError(f"duplicate vertex {x!r}")
        known.add(x)
    edges = doc["edges"]
    if not isinstance(edges, list):
        raise ParseError("'edges' must be a list")
    for item in edges:
        if not isinstance(item, list) or len(item) != 3:
            raise ParseError(f"edge must be a [u, v, w] triple, got {item!r}")
        if item[0] not in known or item[1] not in known:
            raise ParseError(f"edge {item!r} references an unknown vertex")
    if doc["origin"] not in known:
        raise ParseError(f"unknown origin {doc['origin']!r}")
    targets = doc["targets"]
    if not isinstance(targets, list) or not targets:
        raise ParseError("'targets' must be a non-empty list")
    for t in targets:
        if t not in known:
            raise ParseError(f"unknown target {t!r}")
    metadata = doc.get("metadata", {})
    if not isinstance(metadata, dict):
        raise ParseError("'metadata' must be an object")
    try:
        return WeightedGraph(
            [(u, v, w) for u, v, w in edges],
            doc["origin"],
            targets,
            vertices=vertices,
            metadata=metadata,
        )
    except ParseError:
        raise
    except GraphError as exc:
        raise ParseError(str(exc)) from None


def serialize(graph: WeightedGraph) -> str:
    """Emit the normal-form JSON text (bit-exact round-trip)."""
    doc = {
        "vertices": list(graph.labels),
        "edges": [
            [graph.labels[i], graph.labels[j], float(w)]
            for i, j, w in graph.edge_list()
        ],
        "origin": graph.origin,
        "targets": list(graph.targets),
        "metadata": graph.metadata,
    }
    return json.dumps(doc, indent=1) + "\n"


def read_graph_file(path) -> WeightedGraph:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


def write_graph_file(graph: WeightedGraph, path) -> None:
    """Atomic write (temp file + rename) of the normal form."""
    write_text_atomic(serialize(graph), path)


def write_text_atomic(text: str, path) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
