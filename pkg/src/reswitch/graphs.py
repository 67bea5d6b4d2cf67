"""Weighted multigraph with a designated always-on backbone edge set.

The graph is the static data of a budgeted switching problem: each edge
carries a positive conductance w_e, a connected spanning subset of edges
(the backbone) is permanently closed, and the remaining edges may be
opened or closed. The central object is the switched Laplacian

    L_s = sum_e s_e * w_e * a_e a_e^T,    a_e = e_i - e_j (i < j),

for a switch vector s in [0,1]^m. Parallel edges are kept distinct, and
all per-edge vectors are indexed by input edge order.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import InvalidInputError
from . import solver


@dataclass(frozen=True)
class Graph:
    """Immutable multigraph; edges are (i, j, w) tuples with 0-based i < j."""

    n: int
    edges: tuple[tuple[int, int, float], ...]
    backbone: frozenset[int]

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def ei(self) -> np.ndarray:
        return np.array([e[0] for e in self.edges], dtype=np.int64)

    @cached_property
    def ej(self) -> np.ndarray:
        return np.array([e[1] for e in self.edges], dtype=np.int64)

    @cached_property
    def w(self) -> np.ndarray:
        return np.array([e[2] for e in self.edges], dtype=float)

    @cached_property
    def backbone_mask(self) -> np.ndarray:
        mask = np.zeros(self.m, dtype=bool)
        mask[list(self.backbone)] = True
        return mask

    @cached_property
    def incidence(self) -> sp.csr_matrix:
        """Signed edge-node incidence A (m x n), row a_e = e_i - e_j."""
        rows = np.repeat(np.arange(self.m), 2)
        cols = np.column_stack([self.ei, self.ej]).ravel()
        data = np.tile([1.0, -1.0], self.m)
        return sp.csr_matrix((data, (rows, cols)), shape=(self.m, self.n))

    def backbone_indicator(self) -> np.ndarray:
        """Switch vector with backbone edges closed and all others open."""
        return self.backbone_mask.astype(float)


@dataclass(frozen=True, eq=False)
class Configuration:
    """Binary switch assignment, optionally with its induced voltages."""

    sbin: np.ndarray
    voltages: np.ndarray | None = None


def make_graph(n: int, edges, backbone) -> Graph:
    """Build a Graph, normalizing endpoint order, and reject invalid data."""
    norm = []
    for (i, j, w) in edges:
        i, j = int(i), int(j)
        if i > j:
            i, j = j, i
        norm.append((i, j, float(w)))
    g = Graph(n=int(n), edges=tuple(norm), backbone=frozenset(int(k) for k in backbone))
    problems = validate(g)
    if problems:
        raise InvalidInputError("; ".join(problems))
    return g


def validate(g: Graph) -> list[str]:
    """Return a list of invariant violations; empty list means valid."""
    out = []
    for k, (i, j, w) in enumerate(g.edges):
        if not (0 <= i < g.n and 0 <= j < g.n):
            out.append(f"edge {k} endpoint out of range")
        elif i == j:
            out.append(f"self-loop at edge {k}")
        elif i > j:
            out.append(f"edge {k} endpoints not ordered i < j")
        if not (w > 0):
            out.append(f"nonpositive weight at edge {k}")
    for k in g.backbone:
        if not (0 <= k < g.m):
            out.append(f"backbone index {k} out of range")
    if out:
        return out
    if g.n > 0:
        adj = _backbone_adjacency(g)
        ncomp, labels = connected_components(adj, directed=False)
        if ncomp != 1:
            seen = set()
            for node in range(g.n):
                if labels[node] != labels[0] and labels[node] not in seen:
                    seen.add(labels[node])
                    out.append(f"backbone does not span node {node}")
    return out


def _backbone_adjacency(g: Graph) -> sp.csr_matrix:
    idx = sorted(g.backbone)
    ei = g.ei[idx] if idx else np.zeros(0, dtype=np.int64)
    ej = g.ej[idx] if idx else np.zeros(0, dtype=np.int64)
    data = np.ones(len(idx))
    return sp.csr_matrix((data, (ei, ej)), shape=(g.n, g.n))


def check_switch(g: Graph, s: np.ndarray) -> np.ndarray:
    """Validate a switch vector: length m, entries in [0,1], backbone pinned to 1."""
    s = np.asarray(s, dtype=float)
    if s.shape != (g.m,):
        raise InvalidInputError(f"switch vector has shape {s.shape}, expected ({g.m},)")
    if np.any(s < -1e-12) or np.any(s > 1 + 1e-12):
        raise InvalidInputError("switch entries must lie in [0, 1]")
    if g.backbone and not np.all(s[list(g.backbone)] == 1.0):
        raise InvalidInputError("backbone switch entries must equal 1")
    return s


def check_demand(g: Graph, d: np.ndarray) -> np.ndarray:
    """Validate a demand vector: length n and zero sum (d perpendicular to 1)."""
    d = np.asarray(d, dtype=float)
    if d.shape != (g.n,):
        raise InvalidInputError(f"demand vector has shape {d.shape}, expected ({g.n},)")
    nrm = np.linalg.norm(d)
    if abs(d.sum()) > 1e-12 * max(nrm, 1e-300):
        raise InvalidInputError("demand entries must sum to zero")
    return d


def assemble_laplacian(g: Graph, s: np.ndarray) -> sp.csr_matrix:
    """Switched Laplacian L_s = sum_e s_e w_e a_e a_e^T as sparse CSR."""
    s = check_switch(g, s)
    x = s * g.w
    rows = np.concatenate([g.ei, g.ej, g.ei, g.ej])
    cols = np.concatenate([g.ei, g.ej, g.ej, g.ei])
    data = np.concatenate([x, x, -x, -x])
    return sp.coo_matrix((data, (rows, cols)), shape=(g.n, g.n)).tocsr()


def assemble_laplacian_dense(g: Graph, s: np.ndarray) -> np.ndarray:
    """Dense switched Laplacian, for small instances and test oracles."""
    s = check_switch(g, s)
    x = s * g.w
    L = np.zeros((g.n, g.n))
    np.add.at(L, (g.ei, g.ei), x)
    np.add.at(L, (g.ej, g.ej), x)
    np.add.at(L, (g.ei, g.ej), -x)
    np.add.at(L, (g.ej, g.ei), -x)
    return L


def effective_resistances(g: Graph, s: np.ndarray,
                          cfg: solver.SolverConfig | None = None,
                          dense_threshold: int = 2000) -> np.ndarray:
    """Per-edge effective resistance rho_e = a_e^T L_s^+ a_e.

    Uses the dense pseudoinverse below dense_threshold, otherwise one
    iterative solve per edge.
    """
    s = check_switch(g, s)
    if g.n <= dense_threshold:
        L = assemble_laplacian_dense(g, s)
        Lp = solver.pinv_laplacian(L)
        return Lp[g.ei, g.ei] + Lp[g.ej, g.ej] - 2.0 * Lp[g.ei, g.ej]
    cfg = cfg or solver.SolverConfig()
    L = assemble_laplacian(g, s)
    ctx = solver.context_from_edges(g.n, g.ei[g.backbone_mask], g.ej[g.backbone_mask],
                                    (s * g.w)[g.backbone_mask], cfg)
    rho = np.empty(g.m)
    for k in range(g.m):
        a = np.zeros(g.n)
        a[g.ei[k]] = 1.0
        a[g.ej[k]] = -1.0
        res = solver.solve(L, a, cfg, context=ctx)
        rho[k] = a @ res.x
    return rho


def leverages(g: Graph, s: np.ndarray, **kw) -> np.ndarray:
    """Leverage scores l_e = s_e * w_e * rho_e(s), each in [0,1].

    For connected binary s the active leverages sum to n-1 (Foster).
    """
    s = check_switch(g, s)
    return s * g.w * effective_resistances(g, s, **kw)


def algebraic_connectivity(g: Graph, s: np.ndarray, dense_threshold: int = 2000) -> float:
    """Second-smallest eigenvalue of L_s; positive iff the graph is connected."""
    s = check_switch(g, s)
    if g.n <= dense_threshold:
        L = assemble_laplacian_dense(g, s)
        return float(np.linalg.eigvalsh(L)[1])
    L = assemble_laplacian(g, s)
    rng = np.random.default_rng(0)
    x0 = rng.standard_normal((g.n, 1))
    ones = np.ones((g.n, 1))
    vals, _ = sp.linalg.lobpcg(L, x0, Y=ones, largest=False, tol=1e-8, maxiter=500)
    return float(vals[0])


# --- instance file format -------------------------------------------------
#
# Line-oriented text; '#' starts a comment. First data line is "n m q",
# then m lines "i j w b" with 1-based node ids and b in {0,1} marking
# backbone edges, then n demand values (one per line).

def read_instance(path) -> tuple[Graph, np.ndarray, int]:
    with open(path, "r", encoding="ascii") as fh:
        tokens = []
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                tokens.extend(line.split())
    if len(tokens) < 3:
        raise InvalidInputError("instance file truncated: missing header")
    try:
        n, m, q = int(tokens[0]), int(tokens[1]), int(tokens[2])
        need = 3 + 4 * m + n
        if len(tokens) != need:
            raise InvalidInputError(
                f"instance file has {len(tokens)} fields, expected {need}")
        edges = []
        backbone = []
        pos = 3
        for k in range(m):
            i, j = int(tokens[pos]) - 1, int(tokens[pos + 1]) - 1
            w = float(tokens[pos + 2])
            b = int(tokens[pos + 3])
            if b not in (0, 1):
                raise InvalidInputError(f"backbone flag at edge {k} must be 0 or 1")
            edges.append((i, j, w))
            if b:
                backbone.append(k)
            pos += 4
        d = np.array([float(t) for t in tokens[pos:pos + n]])
    except ValueError as exc:
        raise InvalidInputError(f"instance file parse error: {exc}") from exc
    g = make_graph(n, edges, backbone)
    return g, check_demand(g, d), q


def write_instance(path, g: Graph, d: np.ndarray, q: int) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(instance_text(g, d, q))


def instance_text(g: Graph, d: np.ndarray, q: int) -> str:
    """Canonical serialization used for digests (no comments, repr floats)."""
    lines = [f"{g.n} {g.m} {int(q)}"]
    for k, (i, j, w) in enumerate(g.edges):
        b = 1 if k in g.backbone else 0
        lines.append(f"{i + 1} {j + 1} {float(w)!r} {b}")
    lines.extend(f"{float(v)!r}" for v in np.asarray(d, dtype=float))
    return "\n".join(lines) + "\n"
