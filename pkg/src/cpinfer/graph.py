"""Simple undirected graphs, core/periphery label vectors and edge-list I/O."""

from __future__ import annotations

import logging
import os
import re
import tempfile
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np

logger = logging.getLogger(__name__)


class ParseError(ValueError):
    """Raised when an edge-list or labels file cannot be parsed."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class Graph:
    """Immutable simple undirected graph stored in CSR form.

    ``indptr``/``indices`` hold the sorted neighbour lists, so ``neighbors(i)``
    is ``indices[indptr[i]:indptr[i + 1]]``. Isolated nodes are allowed.
    """

    __slots__ = ("n", "m", "indptr", "indices", "degrees")

    def __init__(self, n: int, indptr: np.ndarray, indices: np.ndarray):
        if n < 1:
            raise ValueError("a graph needs at least one node")
        indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        indices = np.ascontiguousarray(indices, dtype=np.int64)
        if indptr.shape != (n + 1,) or indptr[0] != 0 or indptr[-1] != len(indices):
            raise ValueError("malformed CSR index pointer")
        degrees = np.diff(indptr)
        if degrees.sum() % 2:
            raise ValueError("adjacency is not symmetric (odd degree sum)")
        indptr.setflags(write=False)
        indices.setflags(write=False)
        degrees.setflags(write=False)
        self.n = int(n)
        self.indptr = indptr
        self.indices = indices
        self.degrees = degrees
        self.m = int(degrees.sum() // 2)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]] | np.ndarray) -> "Graph":
        """Build a graph from (i, j) index pairs, dropping loops and duplicates."""
        arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        if arr.size == 0:
            arr = arr.reshape(0, 2)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError("edges must be an (m, 2) array of node indices")
        if arr.size and (arr.min() < 0 or arr.max() >= n):
            raise ValueError(f"edge endpoint out of range [0, {n})")
        arr = arr[arr[:, 0] != arr[:, 1]]
        lo = np.minimum(arr[:, 0], arr[:, 1])
        hi = np.maximum(arr[:, 0], arr[:, 1])
        keys = np.unique(lo * n + hi)
        lo, hi = keys // n, keys % n
        src = np.concatenate([lo, hi])
        dst = np.concatenate([hi, lo])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return cls(n, indptr, dst)

    @classmethod
    def from_dense(cls, adjacency: np.ndarray) -> "Graph":
        a = np.asarray(adjacency)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("adjacency must be square")
        if not np.array_equal(a, a.T):
            raise ValueError("adjacency must be symmetric")
        i, j = np.nonzero(np.triu(a, 1))
        return cls.from_edges(a.shape[0], np.column_stack([i, j]))

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def has_edge(self, i: int, j: int) -> bool:
        nb = self.neighbors(i)
        pos = np.searchsorted(nb, j)
        return bool(pos < len(nb) and nb[pos] == j)

    def edges(self) -> np.ndarray:
        """Return the (m, 2) array of edges with i < j, sorted."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees)
        mask = src < self.indices
        return np.column_stack([src[mask], self.indices[mask]])

    def to_dense(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.int8)
        e = self.edges()
        a[e[:, 0], e[:, 1]] = 1
        a[e[:, 1], e[:, 0]] = 1
        return a

    @property
    def n_pairs(self) -> int:
        return self.n * (self.n - 1) // 2

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.n == other.n and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices))

    def __hash__(self):
        return hash((self.n, self.m, self.indices.tobytes()))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"


@dataclass(frozen=True, eq=False)
class LabelAssignment:
    """Binary core (1) / periphery (0) labels with cached core size ``k``."""

    c: np.ndarray
    k: int = field(init=False)

    def __post_init__(self):
        c = np.array(self.c, dtype=np.int8, copy=True).ravel()
        if c.size and not np.all((c == 0) | (c == 1)):
            raise ValueError("labels must be 0 or 1")
        c.setflags(write=False)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "k", int(c.sum()))

    @classmethod
    def from_core(cls, n: int, core: Iterable[int]) -> "LabelAssignment":
        c = np.zeros(n, dtype=np.int8)
        c[list(core)] = 1
        return cls(c)

    @property
    def n(self) -> int:
        return len(self.c)

    @property
    def alpha(self) -> float:
        return self.k / self.n

    def core(self) -> np.ndarray:
        return np.flatnonzero(self.c)

    def complement(self) -> "LabelAssignment":
        return LabelAssignment(1 - self.c)

    def __len__(self) -> int:
        return len(self.c)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LabelAssignment):
            return NotImplemented
        return np.array_equal(self.c, other.c)

    def __hash__(self):
        return hash(self.c.tobytes())

    def __repr__(self) -> str:
        return f"LabelAssignment(n={self.n}, k={self.k})"


def as_labels(c: LabelAssignment | Sequence[int] | np.ndarray) -> LabelAssignment:
    return c if isinstance(c, LabelAssignment) else LabelAssignment(np.asarray(c))


# ---------------------------------------------------------------------------
# statistics


def density(g: Graph) -> float:
    """Empirical edge density 2m / n^2 (diagonal included in the denominator)."""
    return 2.0 * g.m / (g.n * g.n)


def misclassification(est, truth) -> float:
    """Fraction of nodes whose estimated label differs from the truth."""
    est, truth = as_labels(est), as_labels(truth)
    if len(est) != len(truth):
        raise ValueError(f"label length mismatch: {len(est)} != {len(truth)}")
    return float(np.mean(est.c != truth.c))


# ---------------------------------------------------------------------------
# edge lists


@dataclass
class EdgeListResult:
    graph: Graph
    node_ids: list[str]
    self_loops: int = 0
    duplicates: int = 0

    @property
    def index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.node_ids)}


def from_edge_list(lines: Iterable[str] | TextIO,
                   nodes: Sequence[str] | None = None) -> EdgeListResult:
    """Parse a whitespace-separated edge list.

    Node tokens are arbitrary strings mapped to dense indices in first-seen
    order. Passing ``nodes`` pre-registers ids in that order, which keeps
    isolated nodes and makes a write/read round trip exact. Lines starting
    with ``#`` and blank lines are skipped; tokens past the second are
    ignored. Self-loops are dropped, repeated and reversed edges merged.

    A header comment ``# nodes: N`` appearing before the first edge (and
    with ``nodes`` unset) declares the ids ``0..N-1`` up front, which is how
    generated graphs keep their isolated nodes.
    """
    ids: dict[str, int] = {}
    for name in nodes or ():
        ids.setdefault(str(name), len(ids))
    pairs: list[tuple[int, int]] = []
    loops = 0
    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            header = _NODES_HEADER.match(line)
            if header and nodes is None and not pairs and not ids:
                ids = {str(i): i for i in range(int(header.group(1)))}
            continue
        tok = line.split()
        if len(tok) < 2:
            raise ParseError(f"expected two endpoints, got {line!r}", line_no)
        a = ids.setdefault(tok[0], len(ids))
        b = ids.setdefault(tok[1], len(ids))
        if a == b:
            loops += 1
            continue
        pairs.append((a, b))
    if not ids:
        raise ParseError("edge list is empty")
    g = Graph.from_edges(len(ids), np.array(pairs, dtype=np.int64).reshape(-1, 2))
    dups = len(pairs) - g.m
    if loops:
        logger.warning("dropped %d self-loop(s)", loops)
    if dups:
        logger.info("merged %d duplicate edge(s)", dups)
    return EdgeListResult(g, list(ids), loops, dups)


_NODES_HEADER = re.compile(r"#\s*nodes:\s*(\d+)\s*$")


def read_edge_list(path: str | os.PathLike, nodes: Sequence[str] | None = None) -> EdgeListResult:
    with open(path, encoding="utf-8") as fh:
        return from_edge_list(fh, nodes)


def format_edge_list(g: Graph, node_ids: Sequence[str] | None = None) -> str:
    """Serialise edges one per line.

    With default integer ids a ``# nodes: n`` header is written so that
    isolated nodes survive a round trip; custom ids need ``nodes=`` on read.
    """
    if node_ids is None:
        names = [str(i) for i in range(g.n)]
        head = f"# nodes: {g.n}\n"
    else:
        names, head = node_ids, ""
    return head + "".join(f"{names[i]}\t{names[j]}\n" for i, j in g.edges())


def format_labels(labels: LabelAssignment, node_ids: Sequence[str] | None = None) -> str:
    names = node_ids if node_ids is not None else [str(i) for i in range(labels.n)]
    return "".join(f"{names[i]}\t{int(v)}\n" for i, v in enumerate(labels.c))


def parse_labels(lines: Iterable[str], index: dict[str, int] | None = None) -> LabelAssignment:
    """Parse ``node-id<TAB>0|1`` lines.

    Without ``index`` the node ids must be the dense integers 0..n-1.
    """
    entries: dict[int, int] = {}
    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tok = line.split()
        if len(tok) != 2 or tok[1] not in ("0", "1"):
            raise ParseError(f"expected 'node<TAB>0|1', got {line!r}", line_no)
        if index is not None:
            if tok[0] not in index:
                raise ParseError(f"unknown node id {tok[0]!r}", line_no)
            i = index[tok[0]]
        else:
            try:
                i = int(tok[0])
            except ValueError:
                raise ParseError(f"non-integer node id {tok[0]!r}", line_no) from None
        entries[i] = int(tok[1])
    n = len(index) if index is not None else len(entries)
    if sorted(entries) != list(range(n)):
        raise ParseError("labels do not cover every node exactly once")
    return LabelAssignment(np.array([entries[i] for i in range(n)], dtype=np.int8))


def write_atomic(path: str | os.PathLike, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
