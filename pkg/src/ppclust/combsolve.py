"""Exact solvers for square linear assignment and uniform-marginal transport.

Both kernels are compiled with numba (``nogil`` so callers may run solves on
threads). Inputs are validated in the Python wrappers.

The assignment solver is the O(n^3) shortest-augmenting-path Hungarian method
with row/column potentials. The transport solver is the transportation
simplex (MODI / u-v method) started from a least-cost basis; flows are
kept as exact integers by scaling supplies to ``n`` and demands to ``m``.
Entering cells follow Dantzig's rule, switching to Bland's rule after any
degenerate pivot until the next non-degenerate one, so the method cannot cycle.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from .exceptions import NegativeCostError, NonSquareError

__all__ = ["solve_assignment", "solve_uniform_transport"]


@njit(cache=True, nogil=True)
def _hungarian(cost):
    n = cost.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    match = np.zeros(n + 1, np.int64)  # match[j] = 1-based row assigned to column j
    way = np.zeros(n + 1, np.int64)
    minv = np.empty(n + 1)
    used = np.empty(n + 1, np.bool_)
    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv[:] = np.inf
        used[:] = False
        while True:
            used[j0] = True
            i0 = match[j0]
            delta = np.inf
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[match[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while True:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1
            if j0 == 0:
                break
    perm = np.empty(n, np.int64)
    for j in range(1, n + 1):
        perm[match[j] - 1] = j - 1
    total = 0.0
    for i in range(n):
        total += cost[i, perm[i]]
    return perm, total


@njit(cache=True, nogil=True)
def _potentials(cost, basic, u, v, queue, seen):
    m, n = cost.shape
    seen[:] = False
    u[0] = 0.0
    seen[0] = True
    queue[0] = 0
    head, tail = 0, 1
    while head < tail:
        node = queue[head]
        head += 1
        if node < m:
            for j in range(n):
                if basic[node, j] and not seen[m + j]:
                    v[j] = cost[node, j] - u[node]
                    seen[m + j] = True
                    queue[tail] = m + j
                    tail += 1
        else:
            c = node - m
            for i in range(m):
                if basic[i, c] and not seen[i]:
                    u[i] = cost[i, c] - v[c]
                    seen[i] = True
                    queue[tail] = i
                    tail += 1


@njit(cache=True, nogil=True)
def _tree_path(basic, start_row, end_col, parent, queue, seen):
    """Nodes on the basis-tree path from column ``end_col`` back to row ``start_row``."""
    m, n = basic.shape
    seen[:] = False
    parent[:] = -1
    seen[start_row] = True
    queue[0] = start_row
    head, tail = 0, 1
    target = m + end_col
    while head < tail and not seen[target]:
        node = queue[head]
        head += 1
        if node < m:
            for j in range(n):
                if basic[node, j] and not seen[m + j]:
                    seen[m + j] = True
                    parent[m + j] = node
                    queue[tail] = m + j
                    tail += 1
        else:
            c = node - m
            for i in range(m):
                if basic[i, c] and not seen[i]:
                    seen[i] = True
                    parent[i] = node
                    queue[tail] = i
                    tail += 1
    path = [target]
    node = target
    while node != start_row:
        node = parent[node]
        path.append(node)
    return path


@njit(cache=True, nogil=True)
def _transport_simplex(cost, tol, max_pivots):
    m, n = cost.shape
    supply = np.full(m, n, np.int64)
    demand = np.full(n, m, np.int64)
    flow = np.zeros((m, n), np.int64)
    basic = np.zeros((m, n), np.bool_)

    # least-cost start: each allocation closes exactly one line (row or column),
    # the last closes both, giving m + n - 1 basic cells that form a spanning tree
    row_open = np.ones(m, np.bool_)
    col_open = np.ones(n, np.bool_)
    rows_left = m
    cols_left = n
    for cell in np.argsort(cost.ravel(), kind="mergesort"):
        i = cell // n
        j = cell % n
        if not (row_open[i] and col_open[j]):
            continue
        x = min(supply[i], demand[j])
        flow[i, j] = x
        basic[i, j] = True
        supply[i] -= x
        demand[j] -= x
        if rows_left == 1 and cols_left == 1:
            break
        if supply[i] == 0 and rows_left > 1:
            row_open[i] = False
            rows_left -= 1
        else:
            col_open[j] = False
            cols_left -= 1

    u = np.zeros(m)
    v = np.zeros(n)
    queue = np.empty(m + n, np.int64)
    seen = np.empty(m + n, np.bool_)
    parent = np.empty(m + n, np.int64)
    bland = False
    pivots = 0
    while pivots < max_pivots:
        _potentials(cost, basic, u, v, queue, seen)
        ei = -1
        ej = -1
        best = -tol
        for a in range(m):
            for b in range(n):
                if basic[a, b]:
                    continue
                rc = cost[a, b] - u[a] - v[b]
                if rc < best:
                    best = rc
                    ei = a
                    ej = b
                    if bland:
                        break
            if bland and ei >= 0:
                break
        if ei < 0:
            return flow, True
        path = _tree_path(basic, ei, ej, parent, queue, seen)
        # path runs col ej -> row -> col -> ... -> row ei; edge k has sign - for even k
        theta = -1
        li = -1
        lj = -1
        for k in range(len(path) - 1):
            if k % 2 == 0:
                a, b = path[k], path[k + 1]
                r = b if b < m else a
                c = (a if a >= m else b) - m
                f = flow[r, c]
                if theta < 0 or f < theta or (f == theta and r * n + c < li * n + lj):
                    theta = f
                    li = r
                    lj = c
        for k in range(len(path) - 1):
            a, b = path[k], path[k + 1]
            r = b if b < m else a
            c = (a if a >= m else b) - m
            if k % 2 == 0:
                flow[r, c] -= theta
            else:
                flow[r, c] += theta
        flow[ei, ej] += theta
        basic[li, lj] = False
        basic[ei, ej] = True
        bland = theta == 0
        pivots += 1
    return flow, False


def _check_cost(cost) -> np.ndarray:
    C = np.ascontiguousarray(cost, dtype=float)
    if C.ndim != 2 or C.shape[0] < 1 or C.shape[1] < 1:
        raise ValueError(f"cost matrix must be 2-D and non-empty, got shape {C.shape}")
    if not np.all(np.isfinite(C)):
        raise ValueError("cost matrix entries must be finite")
    if np.any(C < 0):
        raise NegativeCostError("cost matrix entries must be non-negative")
    return C


def solve_assignment(cost):
    """Minimum-cost perfect matching of a square non-negative cost matrix.

    Returns ``(perm, total_cost)`` where row ``i`` is assigned column
    ``perm[i]`` and ``total_cost = sum(cost[i, perm[i]])``. When several
    permutations are optimal, the one returned is some optimum, chosen
    deterministically.
    """
    C = _check_cost(cost)
    if C.shape[0] != C.shape[1]:
        raise NonSquareError(f"assignment needs a square matrix, got shape {C.shape}")
    return _hungarian(C)


def solve_uniform_transport(cost):
    """Optimal transport between uniform weights ``1/m`` (rows) and ``1/n`` (columns).

    Returns ``(plan, total_cost)``: an ``(m, n)`` plan whose rows sum to ``1/m``
    and columns to ``1/n``, and ``sum(plan * cost)`` at the optimum.
    """
    C = _check_cost(cost)
    m, n = C.shape
    cmax = float(C.max())
    tol = 1e-12 * cmax if cmax > 0 else 0.0
    flow, converged = _transport_simplex(C, tol, 50 * m * n + 1000)
    if not converged:  # pragma: no cover - anti-cycling makes this unreachable
        raise RuntimeError("transportation simplex exceeded its pivot budget")
    total = float(np.sum(flow * C)) / (m * n)
    return flow / float(m * n), total
