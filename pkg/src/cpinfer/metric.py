"""Sample core-periphery metric T(A, c) and its O(1)/O(degree) swap updates.

With N = C(n, 2) pairs, the metric only depends on four integers:

* ``m``   -- number of edges,
* ``m_pp`` -- edges with both endpoints in the periphery,
* ``k``   -- core size, which fixes N1 = N - C(n - k, 2) core-touching pairs,
* ``n``.

so T = (M1 - Abar * N1) / (N * sqrt(Abar (1 - Abar) Dbar (1 - Dbar))) with
M1 = m - m_pp, Abar = m / N and Dbar = N1 / N. This is the Pearson
correlation between the upper triangles of A and of the ideal pattern
Delta_ij = c_i + c_j - c_i c_j.
"""

from __future__ import annotations

import math

import numpy as np

from .graph import Graph, LabelAssignment, as_labels

INFEASIBLE = -math.inf


class DegenerateError(ValueError):
    """The metric is undefined for this graph or labelling."""


def pairs(n: int) -> int:
    return n * (n - 1) // 2


def t_from_counts(n: int, m: int, k: int, m_pp: int) -> float:
    """Evaluate T from integer counts; returns ``INFEASIBLE`` if undefined."""
    big_n = pairs(n)
    n1 = big_n - pairs(n - k)
    if n1 <= 0 or n1 >= big_n or m <= 0 or m >= big_n:
        return INFEASIBLE
    a_bar = m / big_n
    d_bar = n1 / big_n
    num = (m - m_pp) - a_bar * n1
    return num / (big_n * math.sqrt(a_bar * (1.0 - a_bar) * d_bar * (1.0 - d_bar)))


def check_graph(g: Graph) -> None:
    if g.n < 3:
        raise DegenerateError(f"need at least 3 nodes, got n={g.n}")
    if g.m == 0:
        raise DegenerateError("graph has no edges; the metric is undefined")
    if g.m == g.n_pairs:
        raise DegenerateError("graph is complete; the metric is undefined")


def check_labels(g: Graph, c: LabelAssignment) -> None:
    if len(c) != g.n:
        raise ValueError(f"labels have length {len(c)}, graph has n={g.n}")
    # k = n - 1 makes every pair core-touching, so Dbar = 1 as well
    if not 1 <= c.k <= g.n - 2:
        raise DegenerateError(f"core size k={c.k} must lie in [1, n-2] for n={g.n}")


def periphery_edges(g: Graph, c: LabelAssignment) -> int:
    e = g.edges()
    return int(np.count_nonzero((c.c[e[:, 0]] == 0) & (c.c[e[:, 1]] == 0)))


def periphery_neighbor_counts(g: Graph, c: np.ndarray) -> np.ndarray:
    src = np.repeat(np.arange(g.n, dtype=np.int64), g.degrees)
    counts = np.bincount(src, weights=(c[g.indices] == 0), minlength=g.n)
    return counts.astype(np.int64)


def t_sample(g: Graph, c) -> float:
    """Sample CP metric T(A, c).

    Raises ``DegenerateError`` for empty/complete graphs and for labellings
    whose core-touching indicator is constant (k = 0 or k >= n - 1).
    """
    c = as_labels(c)
    check_graph(g)
    check_labels(g, c)
    return t_from_counts(g.n, g.m, c.k, periphery_edges(g, c))


class SwapState:
    """Mutable bookkeeping for single-label toggles of T(A, c).

    Besides ``m_pp`` and ``k`` the state keeps, for every node, how many of
    its neighbours are in the periphery; proposing a toggle is then O(1) and
    applying one is O(deg(u)).
    """

    def __init__(self, g: Graph, c):
        c = as_labels(c)
        check_graph(g)
        check_labels(g, c)
        self.graph = g
        self.c = c.c.copy()
        self.k = c.k
        self.m = g.m
        self.n_pairs = g.n_pairs
        self.a_bar = g.m / g.n_pairs
        self.peri_nbrs = periphery_neighbor_counts(g, self.c)
        self.m_pp = int(self.peri_nbrs[self.c == 0].sum()) // 2
        self.t = t_from_counts(g.n, self.m, self.k, self.m_pp)

    @property
    def n1(self) -> int:
        """Number of pairs touching the core."""
        return self.n_pairs - pairs(self.graph.n - self.k)

    @property
    def m1(self) -> int:
        """Number of edges touching the core."""
        return self.m - self.m_pp

    def labels(self) -> LabelAssignment:
        return LabelAssignment(self.c)

    def _toggled(self, u: int) -> tuple[int, int]:
        if self.c[u]:
            return self.k - 1, self.m_pp + int(self.peri_nbrs[u])
        return self.k + 1, self.m_pp - int(self.peri_nbrs[u])

    def swap_delta(self, u: int) -> float:
        """T after toggling ``u`` (state untouched); ``INFEASIBLE`` if degenerate."""
        k, m_pp = self._toggled(u)
        if not 1 <= k <= self.graph.n - 2:
            return INFEASIBLE
        return t_from_counts(self.graph.n, self.m, k, m_pp)

    def swap_apply(self, u: int) -> "SwapState":
        k, m_pp = self._toggled(u)
        if not 1 <= k <= self.graph.n - 2:
            raise DegenerateError(f"toggling node {u} would make the core size {k}")
        nb = self.graph.neighbors(u)
        # neighbours count u as periphery iff c[u] == 0
        self.peri_nbrs[nb] += 1 if self.c[u] else -1
        self.c[u] ^= 1
        self.k, self.m_pp = k, m_pp
        self.t = t_from_counts(self.graph.n, self.m, k, m_pp)
        return self
