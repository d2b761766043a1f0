"""Exact hitting-time statistics via linear solves.

Everything here is derived from the killed transition kernel K_z: the kernel
of the walk with all rows at target vertices zeroed.  For a damping factor
beta in (0, 1], the resolvent-type kernel

    G_beta = sum_k (beta K_z)^k,   solved as (I - beta K_z) X = I,

collects the expected discounted visit counts of the walk absorbed at the
target set.  From it:

  * survival_transform: S_beta = E[beta^T], T the hitting time of the targets
    (equivalently the probability that a walk killed with rate 1-beta per
    step survives to reach them),
  * origin_visits: R_beta = G_beta(o, o), the expected discounted number of
    visits to the origin, initial visit included; R_1 = w_o * r(o, z),
  * gamma: R_beta * w_z / w_o,
  * effective_resistance: r(o, z) = G_1(o, o) / w_o.

Dense direct solves are used up to DENSE_VERTEX_LIMIT vertices; path-shaped
components fall back to a linear-time banded solve, anything larger to a
sparse iterative solve with residual tolerance 1e-12.

Expectations are reported as math.inf when the walk cannot reach the target
set; no exception is raised for that case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import DENSE_VERTEX_LIMIT, GraphError, WeightedGraph

PMF_HORIZON_CAP = 10_000_000
_SPARSE_MAXITER = 50_000


def transition_kernel(graph: WeightedGraph, sparse=None):
    """Full transition kernel K(x, y) = w(x, y) / w_x in canonical order."""
    if np.any(graph.vertex_weights == 0.0):
        dead = [graph.labels[i] for i in np.flatnonzero(graph.vertex_weights == 0.0)]
        raise GraphError(f"zero vertex weight at {dead}; kernel undefined")
    m = graph.weight_matrix(sparse=sparse)
    if hasattr(m, "multiply"):
        from scipy.sparse import diags

        return diags(1.0 / graph.vertex_weights) @ m
    return m / graph.vertex_weights[:, None]


def killed_kernel(graph: WeightedGraph, sparse=None):
    """Kernel with target rows zeroed.

    Target vertices may have zero weight (their rows are zero either way);
    a zero-weight non-target vertex is an error.
    """
    bad = [
        graph.labels[i]
        for i in np.flatnonzero(graph.vertex_weights == 0.0)
        if i not in graph.target_indices
    ]
    if bad:
        raise GraphError(f"zero vertex weight at non-target {bad}; kernel undefined")
    m = graph.weight_matrix(sparse=sparse)
    scale = np.array(
        [
            0.0 if (i in graph.target_indices or w == 0.0) else 1.0 / w
            for i, w in enumerate(graph.vertex_weights)
        ]
    )
    if hasattr(m, "multiply"):
        from scipy.sparse import diags

        return diags(scale) @ m
    return m * scale[:, None]


# -- solver helpers -------------------------------------------------------


def _path_order(graph: WeightedGraph, comp):
    """Vertex order along a path-shaped component, or None.

    A component qualifies when it is a tree of maximum degree two without
    self-loops; the induced killed system is then tridiagonal.
    """
    compset = set(comp)
    degs = []
    for i in comp:
        nbrs = [j for j in graph.adjacency[i] if j in compset]
        if i in nbrs:
            return None
        degs.append(len(nbrs))
        if len(nbrs) > 2:
            return None
    if sum(degs) // 2 != len(comp) - 1:
        return None
    if len(comp) == 1:
        return list(comp)
    start = next(i for i, d in zip(comp, degs) if d == 1)
    order = [start]
    prev, cur = None, start
    while len(order) < len(comp):
        nxt = [j for j in graph.adjacency[cur] if j != prev and j in compset]
        if not nxt:
            return None
        prev, cur = cur, nxt[0]
        order.append(cur)
    return order


def _killed_rows(graph: WeightedGraph, rows):
    """Killed-kernel row entries {col: prob} for the given canonical rows."""
    out = {}
    for i in rows:
        if i in graph.target_indices or graph.vertex_weights[i] == 0.0:
            out[i] = {}
        else:
            wi = graph.vertex_weights[i]
            out[i] = {j: w / wi for j, w in graph.adjacency[i].items()}
    return out


def _solve_component(graph: WeightedGraph, beta, comp, rhs, transpose=False):
    """Solve (I - beta K_z)|comp x = rhs (or the transposed system).

    rhs is indexed by position in comp; the solution is returned the same way.
    """
    m = len(comp)
    pos = {i: k for k, i in enumerate(comp)}
    rows = _killed_rows(graph, comp)
    order = _path_order(graph, comp) if m > DENSE_VERTEX_LIMIT else None
    if order is not None:
        perm = [pos[i] for i in order]
        inv = np.empty(m, dtype=int)
        inv[perm] = np.arange(m)
        sub = np.zeros(m)  # A[k, k-1] in path order, A = I - beta K_z
        sup = np.zeros(m)  # A[k, k+1]
        for k, i in enumerate(order):
            for j, p in rows[i].items():
                if j not in pos:
                    continue  # absorbed column outside the restricted system
                kj = inv[pos[j]]
                if kj == k - 1:
                    sub[k] = -beta * p
                elif kj == k + 1:
                    sup[k] = -beta * p
                elif kj != k:
                    raise AssertionError("non-tridiagonal entry in path solve")
        if transpose:
            # A^T[k, k-1] = A[k-1, k] = sup[k-1]; A^T[k, k+1] = A[k+1, k] = sub[k+1]
            new_sub = np.zeros(m)
            new_sup = np.zeros(m)
            new_sub[1:] = sup[:-1]
            new_sup[:-1] = sub[1:]
            sub, sup = new_sub, new_sup
        from scipy.linalg import solve_banded

        ab = np.zeros((3, m))
        ab[0, 1:] = sup[:-1]
        ab[1] = 1.0
        ab[2, :-1] = sub[1:]
        x_perm = solve_banded((1, 1), ab, np.asarray(rhs)[perm])
        out = np.empty(m)
        out[perm] = x_perm
        return out
    if m <= DENSE_VERTEX_LIMIT:
        a = np.eye(m)
        for i in comp:
            for j, p in rows[i].items():
                if j in pos:
                    a[pos[i], pos[j]] -= beta * p
        if transpose:
            a = a.T
        return np.linalg.solve(a, np.asarray(rhs, dtype=float))
    # large non-path component: sparse iterative solve
    from scipy.sparse import csr_matrix, eye
    from scipy.sparse.linalg import bicgstab

    ii, jj, vv = [], [], []
    for i in comp:
        for j, p in rows[i].items():
            if j not in pos:
                continue
            ii.append(pos[i])
            jj.append(pos[j])
            vv.append(-beta * p)
    a = eye(m, format="csr") + csr_matrix((vv, (ii, jj)), shape=(m, m))
    if transpose:
        a = a.T.tocsr()
    b = np.asarray(rhs, dtype=float)
    try:
        x, info = bicgstab(a, b, rtol=1e-12, atol=0.0, maxiter=_SPARSE_MAXITER)
    except TypeError:  # older scipy spells the tolerance 'tol'
        x, info = bicgstab(a, b, tol=1e-12, atol=0.0, maxiter=_SPARSE_MAXITER)
    resid = np.linalg.norm(a @ x - b)
    if info != 0 or not resid <= 1e-10 * max(1.0, np.linalg.norm(b)):
        raise RuntimeError(
            f"iterative solve failed (info={info}, residual={resid:.3e})"
        )
    return x


def _origin_component(graph: WeightedGraph):
    comp = graph.component_of(graph.origin)
    has_target = any(i in graph.target_indices for i in comp)
    return comp, has_target


def green_row(graph: WeightedGraph, beta: float):
    """G_beta(origin, x) for x in the origin's component.

    Returns (component canonical indices, values).  Requires beta in (0, 1];
    at beta = 1 the component must contain a target (otherwise every entry
    would be infinite).
    """
    _check_beta(beta, allow_one=True)
    comp, has_target = _origin_component(graph)
    if beta == 1.0 and not has_target:
        raise GraphError("targets unreachable from origin: visit counts infinite")
    rhs = np.zeros(len(comp))
    rhs[comp.index(graph.origin_index)] = 1.0
    vals = _solve_component(graph, beta, comp, rhs, transpose=True)
    return comp, vals


def green_kernel(graph: WeightedGraph, beta: float) -> np.ndarray:
    """Full matrix G_beta = (I - beta K_z)^{-1} in canonical order.

    Components that cannot reach a target are filled with math.inf at
    beta = 1 (infinite expected visits) instead of raising.
    """
    _check_beta(beta, allow_one=True)
    if graph.n > DENSE_VERTEX_LIMIT:
        raise GraphError(
            f"green_kernel is dense-only (<= {DENSE_VERTEX_LIMIT} vertices); "
            "use green_row or the banded/sparse paths"
        )
    out = np.zeros((graph.n, graph.n))
    remaining = set(range(graph.n))
    while remaining:
        comp = graph.component_of(graph.labels[min(remaining)])
        remaining -= set(comp)
        has_target = any(i in graph.target_indices for i in comp)
        if beta == 1.0 and not has_target:
            out[np.ix_(comp, comp)] = math.inf
            continue
        rhs = np.eye(len(comp))
        sol = np.column_stack(
            [_solve_component(graph, beta, comp, rhs[:, k]) for k in range(len(comp))]
        )
        out[np.ix_(comp, comp)] = sol
    return out


def _check_beta(beta, allow_one=False):
    top = 1.0 if allow_one else math.nextafter(1.0, 0.0)
    if not (isinstance(beta, (int, float)) and 0.0 < float(beta) <= top):
        limit = "(0, 1]" if allow_one else "(0, 1)"
        raise GraphError(f"beta must lie in {limit}, got {beta!r}")


# -- scalar statistics ----------------------------------------------------


def expected_hitting_time(graph: WeightedGraph) -> float:
    """E[T], the expected number of steps from the origin to the target set.

    Solves (I - K_z) h = 1 on the origin's component minus the targets.
    Returns math.inf when the targets are unreachable.
    """
    comp, has_target = _origin_component(graph)
    if not has_target:
        return math.inf
    sub = [i for i in comp if i not in graph.target_indices]
    h = _solve_component(graph, 1.0, sub, np.ones(len(sub)))
    return float(h[sub.index(graph.origin_index)])


def survival_transform(graph: WeightedGraph, beta: float) -> float:
    """S_beta = E[beta^T] (0 when the targets are unreachable)."""
    _check_beta(beta, allow_one=True)
    comp, has_target = _origin_component(graph)
    if not has_target:
        return 0.0
    comp, vals = green_row(graph, beta)
    return float(
        sum(vals[k] for k, i in enumerate(comp) if i in graph.target_indices)
    )


def origin_visits(graph: WeightedGraph, beta: float) -> float:
    """R_beta = G_beta(o, o): expected visits to the origin, initial included.

    At beta = 1 this equals w_o * r(o, z); math.inf when z is unreachable.
    """
    _check_beta(beta, allow_one=True)
    comp, has_target = _origin_component(graph)
    if beta == 1.0 and not has_target:
        return math.inf
    comp, vals = green_row(graph, beta)
    return float(vals[comp.index(graph.origin_index)])


def gamma(graph: WeightedGraph, beta: float) -> float:
    """Gamma_beta = R_beta * w_z / w_o."""
    r = origin_visits(graph, beta)
    wo = graph.vertex_weight(graph.origin)
    if wo == 0.0:
        raise GraphError("origin has zero vertex weight")
    return r * graph.set_weight() / wo


def effective_resistance(graph: WeightedGraph) -> float:
    """r(o, z) = G_1(o, o) / w_o for the network with unit conductance = weight."""
    wo = graph.vertex_weight(graph.origin)
    comp, has_target = _origin_component(graph)
    if not has_target:
        return math.inf
    if wo == 0.0:
        raise GraphError("origin has zero vertex weight")
    return origin_visits(graph, 1.0) / wo


# -- distributions --------------------------------------------------------


@dataclass
class HittingStats:
    """Exact hitting-time distribution summary.

    pmf[k] = P(T = k) for k = 0..horizon; survival_mass = P(T > horizon).
    transform_samples holds (beta, S_beta) pairs when requested.
    """

    expected: float
    pmf: np.ndarray
    survival_mass: float
    transform_samples: tuple = ()

    @property
    def horizon(self) -> int:
        return len(self.pmf) - 1

    def cdf_at(self, x: float) -> float:
        """P(T <= x) from the tabulated pmf (x may be fractional)."""
        k = min(int(math.floor(x)), self.horizon)
        if k < 0:
            return 0.0
        return float(self.pmf[: k + 1].sum())


def default_horizon(graph: WeightedGraph, expected: float) -> int:
    base = 4 * graph.n * graph.n
    if math.isfinite(expected):
        base = max(int(math.ceil(16.0 * expected)), base)
    return min(base, PMF_HORIZON_CAP)


def hitting_time_pmf(graph: WeightedGraph, horizon: int | None = None) -> HittingStats:
    """Exact pmf of T by iterating the killed kernel from the origin.

    The default horizon is max(16 E[T], 4 n^2), capped at 1e7.  Iteration
    stops early once the surviving mass underflows to zero.
    """
    expected = expected_hitting_time(graph)
    if horizon is None:
        horizon = default_horizon(graph, expected)
    horizon = int(horizon)
    if horizon < 0:
        raise GraphError("horizon must be nonnegative")
    comp, _ = _origin_component(graph)
    alive_idx = [i for i in comp if i not in graph.target_indices]
    pos = {i: k for k, i in enumerate(alive_idx)}
    rows = _killed_rows(graph, alive_idx)

    use_sparse = len(alive_idx) > 200
    if use_sparse:
        from scipy.sparse import csr_matrix

        ii, jj, vv = [], [], []
        arrive = np.zeros(len(alive_idx))
        for i in alive_idx:
            for j, p in rows[i].items():
                if j in graph.target_indices:
                    arrive[pos[i]] += p
                elif j in pos:
                    ii.append(pos[i])
                    jj.append(pos[j])
                    vv.append(p)
        kz = csr_matrix((vv, (ii, jj)), shape=(len(alive_idx), len(alive_idx)))
        step = lambda v: v @ kz
    else:
        kz = np.zeros((len(alive_idx), len(alive_idx)))
        arrive = np.zeros(len(alive_idx))
        for i in alive_idx:
            for j, p in rows[i].items():
                if j in graph.target_indices:
                    arrive[pos[i]] += p
                elif j in pos:
                    kz[pos[i], pos[j]] += p
        step = lambda v: v @ kz

    pmf = np.zeros(horizon + 1)
    v = np.zeros(len(alive_idx))
    v[pos[graph.origin_index]] = 1.0
    for k in range(1, horizon + 1):
        pmf[k] = float(v @ arrive)
        v = step(v)
        if not v.any():
            break
    survival = float(v.sum())
    return HittingStats(expected=expected, pmf=pmf, survival_mass=survival)


@dataclass
class WalkParameters:
    """The (S, R, Gamma) triple of the damped walk at a fixed beta."""

    beta: float
    survival: float
    visits: float
    gamma: float
    graph: WeightedGraph | None = field(default=None, repr=False, compare=False)

    @classmethod
    def from_graph(cls, graph: WeightedGraph, beta: float) -> "WalkParameters":
        s = survival_transform(graph, beta)
        r = origin_visits(graph, beta)
        wo = graph.vertex_weight(graph.origin)
        g = r * graph.set_weight() / wo if wo else math.inf
        p = cls(beta=float(beta), survival=s, visits=r, gamma=g, graph=graph)
        p.validate()
        return p

    def validate(self, tol: float = 1e-9) -> None:
        if not -tol <= self.survival <= 1.0 + tol:
            raise GraphError(f"survival {self.survival} outside [0, 1]")
        if self.visits < 1.0 - tol:
            raise GraphError(f"visit count {self.visits} below 1")
        if self.graph is not None and math.isfinite(self.visits):
            wo = self.graph.vertex_weight(self.graph.origin)
            expect = self.visits * self.graph.set_weight() / wo
            if abs(self.gamma - expect) > 1e-12 * max(1.0, abs(expect)):
                raise GraphError("gamma inconsistent with visits * w_z / w_o")
