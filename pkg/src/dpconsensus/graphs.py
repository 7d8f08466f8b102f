"""Undirected weighted signed graphs: structural balance, gauges, spectra."""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SignedGraph",
    "GraphSpectrum",
    "StructurallyUnbalancedError",
    "check_structural_balance",
    "spectrum",
    "jacobi_eigenvalues",
    "load_edge_list",
    "parse_edge_list",
    "fixture_graph",
]


class StructurallyUnbalancedError(ValueError):
    """The sign pattern admits no two-camp split; the protocol must not run."""


class DisconnectedGraphError(ValueError):
    pass


@dataclass(frozen=True)
class SignedGraph:
    """Symmetric signed adjacency with zero diagonal over a connected graph.

    Weights are arbitrary nonzero reals; ``a_ij == 0`` means "no edge".
    Instances are immutable and safe to share across worker threads.
    """

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("weights must be a square matrix")
        if w.shape[0] < 2:
            raise ValueError("need at least 2 agents")
        if not np.allclose(w, w.T, atol=0.0):
            raise ValueError("weights must be symmetric")
        if np.any(np.diag(w) != 0.0):
            raise ValueError("self-loops are not allowed")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if not _connected(w):
            raise DisconnectedGraphError("graph induced by nonzero weights is not connected")

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        return np.abs(self.weights).sum(axis=1)

    def laplacian(self) -> np.ndarray:
        return np.diag(self.degrees) - self.weights

    @classmethod
    def from_edges(cls, n: int, edges) -> "SignedGraph":
        """Build from an iterable of 1-based ``(i, j, w)`` triples."""
        w = np.zeros((n, n))
        for i, j, wt in edges:
            if i == j:
                raise ValueError(f"self-loop on agent {i}")
            w[i - 1, j - 1] = wt
            w[j - 1, i - 1] = wt
        return cls(w)


@dataclass(frozen=True)
class GraphSpectrum:
    """Laplacian data for a balanced signed graph under a fixed gauge."""

    laplacian: np.ndarray
    gauge_laplacian: np.ndarray
    lambda2: float
    laplacian_norm: float
    degrees: np.ndarray
    c_min: float = field(init=False)
    c_max: float = field(init=False)
    degree_square_sum: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "c_min", float(self.degrees.min()))
        object.__setattr__(self, "c_max", float(self.degrees.max()))
        object.__setattr__(self, "degree_square_sum", float((self.degrees**2).sum()))


def _connected(w: np.ndarray) -> bool:
    # Union-find over nonzero-weight edges.
    n = w.shape[0]
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    rows, cols = np.nonzero(w)
    for i, j in zip(rows, cols):
        if i < j:
            parent[find(i)] = find(j)
    root = find(0)
    return all(find(i) == root for i in range(n))


def check_structural_balance(g: SignedGraph) -> np.ndarray:
    """Two-color the sign pattern into a gauge vector ``s`` with entries +-1.

    Returns ``s`` such that ``s_i * s_j * sgn(a_ij) == +1`` on every edge,
    normalized so that agent 1 carries +1.  Raises
    :class:`StructurallyUnbalancedError` when no such coloring exists.
    """
    n = g.n
    w = g.weights
    s = np.zeros(n, dtype=int)
    s[0] = 1
    stack = [0]
    while stack:
        i = stack.pop()
        for j in np.nonzero(w[i])[0]:
            want = s[i] * (1 if w[i, j] > 0 else -1)
            if s[j] == 0:
                s[j] = want
                stack.append(j)
            elif s[j] != want:
                raise StructurallyUnbalancedError(
                    f"edge ({i + 1},{j + 1}) is inconsistent with any two-camp split"
                )
    return s.astype(float)


def jacobi_eigenvalues(m: np.ndarray, tol: float = 1e-10, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps until the off-diagonal Frobenius norm drops below ``tol``.
    Deterministic and dependency-free; intended for n <= a few hundred.
    """
    a = np.array(m, dtype=float)
    n = a.shape[0]
    for _ in range(max_sweeps):
        off = np.sqrt(max(np.sum(a**2) - np.sum(np.diag(a) ** 2), 0.0))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) < tol / (n * n):
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = c
                rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
    return np.sort(np.diag(a))


def spectrum(g: SignedGraph, s: np.ndarray) -> GraphSpectrum:
    """Laplacian, gauge Laplacian and degree statistics for gauge ``s``."""
    s = np.asarray(s, dtype=float)
    if s.shape != (g.n,) or not np.all(np.abs(s) == 1.0):
        raise ValueError("gauge must be a length-n vector of +-1")
    sw = s[:, None] * g.weights * s[None, :]
    if np.any(sw < 0):
        raise ValueError("not a valid gauge: S A S has negative entries")
    lap = g.laplacian()
    lap_s = s[:, None] * lap * s[None, :]
    eigs = jacobi_eigenvalues(lap_s)
    lambda2 = float(eigs[1])
    lap_norm = float(eigs[-1])  # largest eigenvalue of the PSD gauge Laplacian
    return GraphSpectrum(
        laplacian=lap,
        gauge_laplacian=lap_s,
        lambda2=lambda2,
        laplacian_norm=lap_norm,
        degrees=g.degrees,
    )


def parse_edge_list(text: str) -> SignedGraph:
    """Parse the ``i j w`` one-edge-per-line format (1-based indices)."""
    edges = []
    nmax = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 'i j w', got {line!r}")
        i, j, w = int(parts[0]), int(parts[1]), float(parts[2])
        if i < 1 or j < 1:
            raise ValueError(f"line {lineno}: indices are 1-based")
        nmax = max(nmax, i, j)
        edges.append((i, j, w))
    return SignedGraph.from_edges(nmax, edges)


def load_edge_list(path) -> SignedGraph:
    with open(path) as f:
        return parse_edge_list(f.read())


def fixture_graph(name: str) -> SignedGraph:
    """Load one of the shipped fixture graphs (``fig1a`` or ``fig1b``)."""
    ref = importlib.resources.files("dpconsensus.fixtures") / f"{name}.txt"
    return parse_edge_list(ref.read_text())
