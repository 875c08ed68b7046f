"""Communication graph and Laplacian-derived quantities.

All simulation and certificate modules consume a :class:`GraphTopology`,
which precomputes the Laplacian, its Moore-Penrose inverse, and the spectral
extremes once at construction. Graphs are undirected, unweighted, and must
be connected.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, DisconnectedGraph, InvalidEdge

# Eigenvalues below this are treated as the structural zero of the Laplacian.
_ZERO_EIG_TOL = 1e-9


@dataclass
class GraphTopology:
    """Connected undirected graph over players 1..N with cached spectra.

    Immutable by convention after :func:`build_graph`; safe to share across
    threads read-only. Edges are stored as sorted 1-based pairs, matching
    the external config convention.
    """

    N: int
    edges: tuple
    L: np.ndarray
    Lpinv: np.ndarray
    lambda_min_nz: float
    lambda_max: float
    Pi: np.ndarray = field(repr=False, default=None)

    def degree_sequence(self):
        return np.diag(self.L).astype(int)


def build_graph(N, edges):
    """Build a :class:`GraphTopology` from a 1-based edge list.

    Raises InvalidEdge for self-loops, out-of-range indices, or duplicate
    edges, and DisconnectedGraph when rank(L) < N-1.
    """
    if N < 1:
        raise InvalidEdge(f"player count must be positive, got {N}")
    norm = []
    seen = set()
    for e in edges:
        i, j = e
        if i == j:
            raise InvalidEdge(f"self-loop on player {i}")
        if not (1 <= i <= N and 1 <= j <= N):
            raise InvalidEdge(f"edge ({i},{j}) out of range 1..{N}")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise InvalidEdge(f"duplicate edge {key}")
        seen.add(key)
        norm.append(key)
    norm.sort()

    L = np.zeros((N, N))
    for i, j in norm:
        a, b = i - 1, j - 1
        L[a, a] += 1.0
        L[b, b] += 1.0
        L[a, b] -= 1.0
        L[b, a] -= 1.0

    w, V = np.linalg.eigh(L)
    nz = w > _ZERO_EIG_TOL
    if np.count_nonzero(nz) != N - 1:
        raise DisconnectedGraph(
            f"graph with {N} nodes and {len(norm)} edges is not connected"
        )
    inv_w = np.where(nz, 1.0 / np.where(nz, w, 1.0), 0.0)
    Lpinv = (V * inv_w) @ V.T
    Pi = np.eye(N) - np.full((N, N), 1.0 / N)

    lambda_min_nz = float(w[nz][0]) if N > 1 else 0.0
    lambda_max = float(w[-1])
    return GraphTopology(
        N=N,
        edges=tuple(norm),
        L=L,
        Lpinv=Lpinv,
        lambda_min_nz=lambda_min_nz,
        lambda_max=lambda_max,
        Pi=Pi,
    )


def _select_matrix(G, name):
    if name == "L":
        return G.L
    if name == "Lpinv":
        return G.Lpinv
    if name == "Pi":
        return G.Pi
    raise ValueError(f"unknown matrix name {name!r}; expected L, Lpinv, or Pi")


def kron_apply(G, M_name, v):
    """Apply (M otimes I_n) to a stacked vector of N blocks, blockwise.

    Equivalent to np.kron(M, I_n) @ v without materializing the Kronecker
    product; v must have length N*n for some n >= 1.
    """
    M = _select_matrix(G, M_name)
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0 or v.size % G.N != 0:
        raise DimensionMismatch(
            f"vector of length {v.size} is not N*n with N={G.N}"
        )
    n = v.size // G.N
    return (M @ v.reshape(G.N, n)).ravel()
