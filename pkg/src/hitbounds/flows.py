"""Loss flows: the network-flow picture of the damped absorbed walk.

For beta in (0, 1) the expected discounted edge traversals

    f(x, y) = G_beta(o, x) * beta * K_z(x, y)

form a nonnegative flow with source at the origin and sink at the target:
at every non-target vertex the outflow equals beta times (inflow plus the
unit source at the origin), and nothing flows out of the target.  The walk
statistics are linear functionals of f: survival S = total flow into the
target, visit count R = 1 + flow into the origin, and Gamma = R w_z / w_o
is recovered from flow ratios alone.

The edge ratio theta(x, y) = f(x, y) / f(y, x) is the ratio of a vertex
potential, so its product around any cycle is 1 (reversibility); the
directed quantity s(x, y) = (beta f(x,y) - f(y,x)) / (f(x,y) - beta f(y,x))
is the natural per-edge progress variable, with h(s) = s (1 - s beta) /
(beta - s) its multiplicative transform.

decompose peels the flow into weighted self-avoiding origin-to-target path
flows plus a dead-end remainder that never reaches the target.  Each path
component is determined by its backtracking ratios; its survival and Gamma
factor over edges through s and h(s), which gives the array representation
used for extremal reasoning: survival is exactly beta * sum of alpha *
prod(s), and R is bounded by 2/(1-beta^2) * (1 - beta * sum of alpha * s_first).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import engine
from .graph import GraphError, WeightedGraph, _label_key


class FlowError(ValueError):
    """Invalid flow, infeasible parameters, or undefined flow quantity."""


_ADMISSIBLE_SLACK = 1e-12


@dataclass(eq=False)
class LossFlow:
    """A damped origin-to-target flow on a labelled vertex set.

    matrix[i, j] is the flow on the directed edge i -> j in the canonical
    order of labels.  graph is set when the flow came from a weighted graph
    (after target contraction); synthetic path flows carry graph=None.
    """

    beta: float
    labels: tuple
    origin: object
    target: object
    matrix: np.ndarray = field(repr=False)
    graph: WeightedGraph | None = field(default=None, repr=False)

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise FlowError(f"beta must lie in (0, 1), got {self.beta!r}")
        self.labels = tuple(self.labels)
        self.index = {x: i for i, x in enumerate(self.labels)}
        self.matrix = np.asarray(self.matrix, dtype=float)
        n = len(self.labels)
        if self.matrix.shape != (n, n):
            raise FlowError(f"flow matrix must be {n}x{n}")
        if self.origin not in self.index or self.target not in self.index:
            raise FlowError("origin and target must be among the labels")
        if self.origin == self.target:
            raise FlowError("origin must differ from the target")
        self.origin_index = self.index[self.origin]
        self.target_index = self.index[self.target]

    def value(self, x, y) -> float:
        """Flow on the directed edge x -> y."""
        return float(self.matrix[self.index[x], self.index[y]])


def build_flow(graph: WeightedGraph, beta: float) -> LossFlow:
    """The canonical flow of the damped absorbed walk on a graph.

    The graph is normalized first: targets contracted to a single vertex and
    inaccessible pockets dropped (neither changes the hitting law).  The
    returned flow lives on the normalized graph.
    """
    if not 0.0 < beta < 1.0:
        raise FlowError(f"beta must lie in (0, 1), got {beta!r}")
    work = graph.contract_targets().restrict_accessible()
    comp, vals = engine.green_row(work, beta)
    kz_rows = engine._killed_rows(work, comp)
    m = np.zeros((work.n, work.n))
    for k, i in enumerate(comp):
        if vals[k] == 0.0:
            continue
        for j, p in kz_rows[i].items():
            m[i, j] = vals[k] * beta * p
    return LossFlow(beta=beta, labels=work.labels, origin=work.origin,
                    target=work.targets[0], matrix=m, graph=work)


def node_law_residual(flow: LossFlow) -> float:
    """Largest violation of the conservation law, in absolute flow units.

    At non-target x: outflow = beta * (inflow + 1 if x is the origin).
    At the target: outflow = 0.
    """
    m = flow.matrix
    inflow = m.sum(axis=0)
    outflow = m.sum(axis=1)
    lhs = flow.beta * inflow
    lhs[flow.origin_index] += flow.beta
    resid = np.abs(lhs - outflow)
    resid[flow.target_index] = abs(outflow[flow.target_index])
    return float(resid.max())


def theta(flow: LossFlow, x, y) -> float:
    """Backtracking ratio f(x, y) / f(y, x); the target end is always 0."""
    fxy = flow.value(x, y)
    fyx = flow.value(y, x)
    if fyx == 0.0:
        if fxy == 0.0:
            raise FlowError(f"no flow on edge {x!r}-{y!r}")
        return math.inf
    return fxy / fyx


def cycle_reversibility_gap(flow: LossFlow, cycles=None, limit: int = 64) -> float:
    """Largest relative mismatch of flow products around cycles.

    Reversibility of the underlying walk makes the product of f along any
    cycle avoiding the target equal the product along its reversal.  With
    cycles=None a fundamental cycle basis of the support (off the target)
    is sampled, up to `limit` cycles.  Returns 0.0 when there are none.
    """
    m = flow.matrix
    zi = flow.target_index
    if cycles is None:
        support = m + m.T
        n = len(flow.labels)
        parent = {}
        extra = []
        seen = set()
        for root in range(n):
            if root == zi or root in seen or not support[root].any():
                continue
            seen.add(root)
            parent[root] = None
            queue = [root]
            for i in queue:
                for j in np.flatnonzero(support[i]):
                    j = int(j)
                    if j == zi:
                        continue
                    if j not in seen:
                        seen.add(j)
                        parent[j] = i
                        queue.append(j)
                    elif parent.get(i) != j and i < j:
                        extra.append((i, j))
        cycles_idx = []
        for i, j in extra[:limit]:
            up_i, up_j = [i], [j]
            while parent[up_i[-1]] is not None:
                up_i.append(parent[up_i[-1]])
            while parent[up_j[-1]] is not None:
                up_j.append(parent[up_j[-1]])
            common = set(up_i) & set(up_j)
            ci = up_i[: next(k for k, v in enumerate(up_i) if v in common) + 1]
            cj = up_j[: next(k for k, v in enumerate(up_j) if v in common) + 1]
            if ci[-1] != cj[-1]:
                continue  # different anchors cannot happen in a tree; be safe
            cycles_idx.append(ci + cj[-2::-1] + [ci[0]])
    else:
        cycles_idx = []
        for cyc in cycles:
            idx = [flow.index[v] for v in cyc]
            if idx[0] != idx[-1]:
                idx.append(idx[0])
            cycles_idx.append(idx)

    worst = 0.0
    for idx in cycles_idx:
        fw = bw = 1.0
        for a, b in zip(idx, idx[1:]):
            fw *= m[a, b]
            bw *= m[b, a]
        denom = max(abs(fw), abs(bw))
        if denom > 0.0:
            worst = max(worst, abs(fw - bw) / denom)
    return worst


def flow_parameters(flow: LossFlow) -> engine.WalkParameters:
    """(S, R, Gamma) read off the flow alone.

    S = flow into the target, R = 1 + flow into the origin, and Gamma sums
    theta-path products times terminal flows: path independence of the
    theta products makes any origin-to-x support path usable.
    """
    m = flow.matrix
    zi = flow.target_index
    oi = flow.origin_index
    s = float(m[:, zi].sum())
    r = 1.0 + float(m[:, oi].sum())

    support = m + m.T
    pot = {oi: 1.0}  # theta-product along a support path from the origin
    queue = [oi]
    for i in queue:
        for j in np.flatnonzero(support[i]):
            j = int(j)
            if j == zi or j in pot:
                continue
            if m[j, i] > 0.0:
                pot[j] = pot[i] * (m[i, j] / m[j, i])
                queue.append(j)
    gam = 0.0
    for i in np.flatnonzero(m[:, zi]):
        i = int(i)
        if i not in pot:
            raise FlowError(
                "gamma undefined: no two-way support path from the origin "
                f"to terminal vertex {flow.labels[i]!r}")
        gam += pot[i] * float(m[i, zi]) / flow.beta
    params = engine.WalkParameters(beta=flow.beta, survival=s, visits=r,
                                   gamma=gam, graph=flow.graph)
    if flow.graph is not None:
        params.validate()
    return params


# -- path flows ------------------------------------------------------------


def _path_flow_values(thetas, beta):
    """Forward/backward flows of the path flow with the given interior ratios.

    thetas are the ratios on edges 1..l-1; the last edge has ratio 0.  The
    flow on edge i is the running product of (beta - theta_{i-1}) /
    (1 - beta theta_i) with theta_0 = 0.
    """
    full = list(thetas) + [0.0]
    forward = []
    prev_theta = 0.0
    acc = 1.0
    for th in full:
        if not 0.0 <= th < beta:
            raise FlowError(f"infeasible ratio {th}: needs 0 <= theta < beta")
        acc *= (beta - prev_theta) / (1.0 - beta * th)
        forward.append(acc)
        prev_theta = th
    backward = [th * f for th, f in zip(full, forward)]
    return forward, backward


def path_flow(path, thetas, beta: float) -> LossFlow:
    """Standalone path flow on the given vertices with interior ratios thetas.

    path lists l+1 distinct labels from origin to target; thetas gives the
    l-1 interior backtracking ratios (the terminal edge always has ratio 0).
    Feasibility requires 0 <= theta < beta on every edge.
    """
    path = list(path)
    if len(path) < 2:
        raise FlowError("path needs at least one edge")
    if len(set(path)) != len(path):
        raise FlowError("path vertices must be distinct")
    thetas = [float(t) for t in thetas]
    if len(thetas) != len(path) - 2:
        raise FlowError(
            f"expected {len(path) - 2} interior ratios, got {len(thetas)}")
    if not 0.0 < beta < 1.0:
        raise FlowError(f"beta must lie in (0, 1), got {beta!r}")
    forward, backward = _path_flow_values(thetas, beta)
    labels = tuple(sorted(path, key=_label_key))
    index = {x: i for i, x in enumerate(labels)}
    m = np.zeros((len(labels), len(labels)))
    for k, (u, v) in enumerate(zip(path, path[1:])):
        m[index[u], index[v]] = forward[k]
        m[index[v], index[u]] = backward[k]
    return LossFlow(beta=beta, labels=labels, origin=path[0], target=path[-1],
                    matrix=m)


def s_value(flow: LossFlow, x, y) -> float:
    """Progress variable s(x, y) = (beta f(x,y) - f(y,x)) / (f(x,y) - beta f(y,x)).

    Defined for edges whose net progress points from x to y; raises
    FlowError when the denominator is not positive.
    """
    fxy = flow.value(x, y)
    fyx = flow.value(y, x)
    denom = fxy - flow.beta * fyx
    if denom <= 0.0:
        raise FlowError(f"s undefined on {x!r}->{y!r} (no forward progress)")
    return (flow.beta * fxy - fyx) / denom


def h_transform(s: float, beta: float) -> float:
    """h(s) = s (1 - s beta) / (beta - s), increasing on 0 <= s < beta."""
    if not 0.0 < beta < 1.0:
        raise FlowError(f"beta must lie in (0, 1), got {beta!r}")
    if not 0.0 <= s < beta:
        raise FlowError(f"s must lie in [0, beta), got {s!r}")
    return s * (1.0 - s * beta) / (beta - s)


# -- decomposition ---------------------------------------------------------


@dataclass(frozen=True)
class PathComponent:
    """One peeled origin-to-target path flow with weight alpha.

    path lists the vertex labels; forward/backward are the flows of the
    unit-strength path flow (multiply by alpha for the peeled amount).
    """

    alpha: float
    path: tuple
    forward: tuple
    backward: tuple

    @property
    def length(self) -> int:
        return len(self.path) - 1

    @property
    def thetas(self) -> tuple:
        return tuple(b / f for b, f in zip(self.backward, self.forward))

    def survival(self) -> float:
        """Flow delivered to the target by the unit-strength component."""
        return self.forward[-1]


@dataclass(eq=False)
class FlowDecomposition:
    """Path components plus the dead-end remainder of a flow."""

    flow: LossFlow
    components: list
    dead_alpha: float
    dead_matrix: np.ndarray = field(repr=False)

    @property
    def total_alpha(self) -> float:
        return float(sum(c.alpha for c in self.components))

    def reconstruct(self) -> np.ndarray:
        m = self.dead_matrix.copy()
        index = self.flow.index
        for comp in self.components:
            for k, (u, v) in enumerate(zip(comp.path, comp.path[1:])):
                m[index[u], index[v]] += comp.alpha * comp.forward[k]
                m[index[v], index[u]] += comp.alpha * comp.backward[k]
        return m

    def reconstruction_error(self) -> float:
        """Largest absolute difference from the original flow matrix."""
        return float(np.abs(self.reconstruct() - self.flow.matrix).max())

    def dead_flow(self):
        """The normalized dead-end flow, or None when its weight vanishes."""
        if self.dead_alpha <= 0.0:
            return None
        return self.dead_matrix / self.dead_alpha

    def laws(self) -> dict:
        """Numerical summary of everything the decomposition must satisfy."""
        zi = self.flow.target_index
        scale = float(self.flow.matrix.max()) or 1.0
        min_len = None
        if self.flow.graph is not None:
            d = self.flow.graph.distance(self.flow.graph.origin)
            min_len = None if math.isinf(d) else int(d)
        shortest_ok = True
        if min_len is not None:
            shortest_ok = all(c.length >= min_len for c in self.components)
        return {
            "reconstruction_error": self.reconstruction_error(),
            "total_alpha": self.total_alpha,
            "alpha_within_unit": self.total_alpha <= 1.0 + 1e-9,
            "dead_alpha": self.dead_alpha,
            "dead_target_inflow": float(self.dead_matrix[:, zi].sum()),
            "scale": scale,
            "component_count": len(self.components),
            "paths_at_least_distance": shortest_ok,
        }

    def to_dict(self) -> dict:
        """JSON-ready serialization (paths, weights, flow tables, law checks)."""
        labels = self.flow.labels
        dead_edges = [
            [labels[i], labels[j], float(self.dead_matrix[i, j])]
            for i, j in zip(*np.nonzero(self.dead_matrix))
        ]
        return {
            "beta": self.flow.beta,
            "origin": self.flow.origin,
            "target": self.flow.target,
            "components": [
                {
                    "alpha": c.alpha,
                    "path": list(c.path),
                    "forward": list(c.forward),
                    "backward": list(c.backward),
                    "thetas": list(c.thetas),
                }
                for c in self.components
            ],
            "dead_alpha": self.dead_alpha,
            "dead_edges": dead_edges,
            "laws": self.laws(),
        }


def decompose(flow: LossFlow) -> FlowDecomposition:
    """Peel the flow into path components plus a dead-end remainder.

    Repeatedly: take the admissible directed edges (those with
    f(y, x) < beta f(x, y), strictly, with relative slack 1e-12), follow the
    lexicographically smallest shortest admissible path from origin to
    target, and subtract the largest multiple of its path flow that keeps
    the remainder nonnegative.  Each round zeroes at least one edge pair,
    so the loop terminates; what remains never reaches the target.
    """
    beta = flow.beta
    w = flow.matrix.copy()
    n = len(flow.labels)
    oi, zi = flow.origin_index, flow.target_index
    scale = float(w.max())
    if scale > 0.0 and float(w[zi].max()) > 1e-12 * scale:
        raise FlowError("flow out of the target: not an absorbed-walk flow")
    w[zi, :] = 0.0
    components = []
    edge_pairs = int(np.count_nonzero(w + w.T) // 2)
    tiny = 1e-17 * (scale if scale > 0.0 else 1.0)

    for _ in range(edge_pairs + 1):
        admissible = (w > 0.0) & (w.T < beta * w * (1.0 - _ADMISSIBLE_SLACK))
        dist = np.full(n, -1)
        dist[zi] = 0
        queue = [zi]
        for j in queue:
            for i in np.flatnonzero(admissible[:, j]):
                i = int(i)
                if dist[i] < 0:
                    dist[i] = dist[j] + 1
                    queue.append(i)
        if dist[oi] < 0:
            break
        path = [oi]
        cur = oi
        while cur != zi:
            nxt = [int(j) for j in np.flatnonzero(admissible[cur])
                   if dist[j] == dist[cur] - 1]
            cur = min(nxt)
            path.append(cur)
        thetas = [w[path[k + 1], path[k]] / w[path[k], path[k + 1]]
                  for k in range(len(path) - 2)]
        forward, backward = _path_flow_values(thetas, beta)
        ratios = [w[path[k], path[k + 1]] / forward[k]
                  for k in range(len(path) - 1)]
        alpha = min(ratios)
        tight = ratios.index(alpha)
        for k in range(len(path) - 1):
            a, b = path[k], path[k + 1]
            if k == tight:
                w[a, b] = 0.0
                w[b, a] = 0.0
            else:
                w[a, b] = max(w[a, b] - alpha * forward[k], 0.0)
                w[b, a] = max(w[b, a] - alpha * backward[k], 0.0)
                # peeling preserves the pair ratio exactly; if cancellation
                # leaves one direction at roundoff scale, drop the pair
                if w[a, b] <= tiny or (backward[k] > 0.0 and w[b, a] <= tiny):
                    w[a, b] = 0.0
                    w[b, a] = 0.0
        components.append(PathComponent(
            alpha=float(alpha),
            path=tuple(flow.labels[i] for i in path),
            forward=tuple(map(float, forward)),
            backward=tuple(map(float, backward))))
    else:
        raise FlowError("decomposition failed to terminate")

    total = float(sum(c.alpha for c in components))
    dead_alpha = max(0.0, 1.0 - total)
    return FlowDecomposition(flow=flow, components=components,
                             dead_alpha=dead_alpha, dead_matrix=w)


# -- array representation --------------------------------------------------


@dataclass(frozen=True)
class ArrayRow:
    """(alpha, interior s values, path length) for one path component.

    The terminal edge is excluded from the s array: its value is always
    beta for a feasible path flow.
    """

    alpha: float
    s: tuple
    length: int


@dataclass
class ArrayRepresentation:
    """The flow reduced to per-path progress arrays.

    Exact identity: survival_value() reproduces S_beta.  Bound:
    visits_upper_bound() dominates R_beta (the factor 2 absorbs the
    dead-end contribution).  gamma_values() lists prod h(s) per component,
    the Gamma of each path flow taken on its own.
    """

    beta: float
    rows: tuple
    dead_alpha: float

    def survival_value(self) -> float:
        return self.beta * math.fsum(
            row.alpha * math.prod(row.s, start=1.0) for row in self.rows)

    def first_edge_s(self, row: ArrayRow) -> float:
        return row.s[0] if row.s else self.beta

    def visits_upper_bound(self) -> float:
        mix = math.fsum(row.alpha * self.first_edge_s(row) for row in self.rows)
        return 2.0 / (1.0 - self.beta ** 2) * (1.0 - self.beta * mix)

    def gamma_values(self) -> tuple:
        out = []
        for row in self.rows:
            if any(s >= self.beta for s in row.s):
                out.append(math.inf)  # degenerate edge; cannot arise from graphs
            else:
                out.append(math.prod(
                    (h_transform(s, self.beta) for s in row.s), start=1.0))
        return tuple(out)

    def gamma_value(self) -> float:
        """Whole-flow Gamma: sum of alpha * prod h(s) over path components."""
        return float(math.fsum(
            row.alpha * g for row, g in zip(self.rows, self.gamma_values())))


def array_representation(source) -> ArrayRepresentation:
    """Arrays from a LossFlow or an existing FlowDecomposition."""
    decomposition = decompose(source) if isinstance(source, LossFlow) else source
    beta = decomposition.flow.beta
    rows = []
    for comp in decomposition.components:
        interior = tuple(
            (beta - th) / (1.0 - beta * th) for th in comp.thetas[:-1])
        rows.append(ArrayRow(alpha=comp.alpha, s=interior, length=comp.length))
    return ArrayRepresentation(beta=beta, rows=tuple(rows),
                               dead_alpha=decomposition.dead_alpha)


def gamma_chain_bound(graph: WeightedGraph, beta: float) -> tuple:
    """(Gamma_beta, its chain lower bound h((S/beta)^(1/n))^n), n = dist - 1.

    The bound follows from the per-edge h factorization: spreading the
    total progress evenly over n edges minimizes the product.
    """
    if not 0.0 < beta < 1.0:
        raise FlowError(f"beta must lie in (0, 1), got {beta!r}")
    work = graph.contract_targets().restrict_accessible()
    d = work.distance(work.origin)
    if not math.isfinite(d) or d < 2:
        raise FlowError("needs dist(origin, target) >= 2")
    n = int(d) - 1
    s_total = engine.survival_transform(work, beta)
    gam = engine.gamma(work, beta)
    sbar = (s_total / beta) ** (1.0 / n)
    if sbar >= beta:
        raise FlowError("survival too large for the chain bound")
    return gam, h_transform(sbar, beta) ** n
