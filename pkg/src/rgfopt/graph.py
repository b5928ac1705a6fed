"""Directed communication topologies and their stochastic weighting matrices.

Edge convention: an edge (i, j) means agent j receives from agent i.
Every node always has a self-loop, so in- and out-neighbor sets contain
the node itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Digraph",
    "WeightPair",
    "AugmentedMatrix",
    "GraphError",
    "is_strongly_connected",
    "make_cycle",
    "make_ring",
    "make_complete",
    "make_random_strongly_connected",
    "equal_neighbor_weights",
    "build_augmented",
    "delta_hat",
    "limit_matrix",
    "matrix_power_gap",
    "matrix_power_gap_series",
]

STOCHASTIC_TOL = 1e-12


class GraphError(ValueError):
    """Invalid topology or weighting construction."""


@dataclass(frozen=True)
class Digraph:
    """Directed graph over agents 0..n_agents-1 with implicit self-loops.

    `edges` holds ordered pairs (i, j): j receives from i.  Self-loops are
    added automatically and never need to be listed.
    """

    n_agents: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.n_agents < 1:
            raise GraphError(f"need at least one agent, got {self.n_agents}")
        for (i, j) in self.edges:
            if not (0 <= i < self.n_agents and 0 <= j < self.n_agents):
                raise GraphError(f"edge ({i}, {j}) out of range for N={self.n_agents}")
        with_loops = frozenset(self.edges) | {(i, i) for i in range(self.n_agents)}
        object.__setattr__(self, "edges", with_loops)

    def in_neighbors(self, i: int) -> list[int]:
        """Agents j whose messages reach i (includes i)."""
        return sorted(j for j in range(self.n_agents) if (j, i) in self.edges)

    def out_neighbors(self, i: int) -> list[int]:
        """Agents j that receive from i (includes i)."""
        return sorted(j for j in range(self.n_agents) if (i, j) in self.edges)

    def to_edge_list_text(self) -> str:
        """Serialize as text: first line N, then `i j` lines, self-loops omitted."""
        lines = [str(self.n_agents)]
        for (i, j) in sorted(self.edges):
            if i != j:
                lines.append(f"{i} {j}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edge_list_text(cls, text: str) -> "Digraph":
        rows = [ln for ln in text.strip().splitlines() if ln.strip()]
        if not rows:
            raise GraphError("empty edge-list text")
        n = int(rows[0])
        edges = set()
        for ln in rows[1:]:
            i, j = (int(tok) for tok in ln.split())
            edges.add((i, j))
        return cls(n_agents=n, edges=frozenset(edges))


@dataclass(frozen=True)
class WeightPair:
    """Row-stochastic mixing matrix and column-stochastic splitting matrix."""

    w_row: np.ndarray
    w_col: np.ndarray

    def __post_init__(self):
        wr = np.asarray(self.w_row, dtype=float)
        wc = np.asarray(self.w_col, dtype=float)
        if wr.shape != wc.shape or wr.ndim != 2 or wr.shape[0] != wr.shape[1]:
            raise GraphError(f"weight matrices must be square and same shape, got {wr.shape}, {wc.shape}")
        if (wr < 0).any() or (wc < 0).any():
            raise GraphError("weight matrices must be nonnegative")
        row_err = np.abs(wr.sum(axis=1) - 1.0).max()
        col_err = np.abs(wc.sum(axis=0) - 1.0).max()
        if row_err > STOCHASTIC_TOL:
            raise GraphError(f"w_row rows must sum to 1 (max error {row_err:.2e})")
        if col_err > STOCHASTIC_TOL:
            raise GraphError(f"w_col columns must sum to 1 (max error {col_err:.2e})")
        wr.flags.writeable = False
        wc.flags.writeable = False
        object.__setattr__(self, "w_row", wr)
        object.__setattr__(self, "w_col", wc)

    @property
    def n_agents(self) -> int:
        return self.w_row.shape[0]


@dataclass(frozen=True)
class AugmentedMatrix:
    """2N x 2N coupling of decision and surplus dynamics at gain delta."""

    w_aug: np.ndarray
    delta: float

    def __post_init__(self):
        w = np.asarray(self.w_aug, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] % 2 != 0:
            raise GraphError(f"augmented matrix must be square of even size, got {w.shape}")
        w.flags.writeable = False
        object.__setattr__(self, "w_aug", w)

    @property
    def n_agents(self) -> int:
        return self.w_aug.shape[0] // 2


def is_strongly_connected(g: Digraph) -> bool:
    """True iff every node reaches every other node along directed edges.

    Forward and reverse BFS from node 0; total function, never raises on a
    well-formed digraph.
    """
    n = g.n_agents
    if n == 1:
        return True
    fwd = [[] for _ in range(n)]
    rev = [[] for _ in range(n)]
    for (i, j) in g.edges:
        if i != j:
            fwd[i].append(j)
            rev[j].append(i)

    def reaches_all(adj) -> bool:
        seen = [False] * n
        seen[0] = True
        stack = [0]
        count = 1
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    count += 1
                    stack.append(v)
        return count == n

    return reaches_all(fwd) and reaches_all(rev)


def make_cycle(n: int) -> Digraph:
    """Directed cycle i -> i+1 (mod n), strongly connected by construction."""
    if n < 2:
        raise GraphError(f"cycle needs n >= 2, got {n}")
    return Digraph(n, frozenset((i, (i + 1) % n) for i in range(n)))


def make_ring(n: int) -> Digraph:
    """Bidirectional ring: edges both ways between consecutive nodes."""
    if n < 2:
        raise GraphError(f"ring needs n >= 2, got {n}")
    edges = set()
    for i in range(n):
        edges.add((i, (i + 1) % n))
        edges.add(((i + 1) % n, i))
    return Digraph(n, frozenset(edges))


def make_complete(n: int) -> Digraph:
    """Complete digraph: every ordered pair is an edge."""
    if n < 2:
        raise GraphError(f"complete digraph needs n >= 2, got {n}")
    return Digraph(n, frozenset((i, j) for i in range(n) for j in range(n) if i != j))


def make_random_strongly_connected(n: int, extra_edge_prob: float, seed: int) -> Digraph:
    """Directed cycle backbone plus independently sampled extra edges.

    The backbone guarantees strong connectivity; the result is deterministic
    for a given seed.
    """
    if n < 2:
        raise GraphError(f"need n >= 2, got {n}")
    if not 0.0 <= extra_edge_prob <= 1.0:
        raise GraphError(f"extra_edge_prob must be in [0, 1], got {extra_edge_prob}")
    rng = np.random.default_rng(seed)
    edges = {(i, (i + 1) % n) for i in range(n)}
    draws = rng.random((n, n))
    for i in range(n):
        for j in range(n):
            if i != j and draws[i, j] < extra_edge_prob:
                edges.add((i, j))
    return Digraph(n, frozenset(edges))


def equal_neighbor_weights(g: Digraph) -> WeightPair:
    """Uniform weights over in-neighbors (rows) and out-neighbors (columns).

    w_row[i, j] = 1/|in(i)| for j in in(i); w_col[i, j] = 1/|out(j)| for
    i in out(j).  Requires a strongly connected digraph.
    """
    if not is_strongly_connected(g):
        raise GraphError("equal_neighbor_weights requires a strongly connected digraph")
    n = g.n_agents
    w_row = np.zeros((n, n))
    w_col = np.zeros((n, n))
    for i in range(n):
        nin = g.in_neighbors(i)
        for j in nin:
            w_row[i, j] = 1.0 / len(nin)
    for j in range(n):
        nout = g.out_neighbors(j)
        for i in nout:
            w_col[i, j] = 1.0 / len(nout)
    return WeightPair(w_row=w_row, w_col=w_col)


def build_augmented(wp: WeightPair, delta: float) -> AugmentedMatrix:
    """Assemble [[W_r, dI], [I - W_r, W_c - dI]]; column sums stay exactly 1.

    delta = 0 is accepted (it is the reference point for the spectral gain
    bound); negative delta is rejected.
    """
    if delta < 0:
        raise GraphError(f"delta must be nonnegative, got {delta}")
    n = wp.n_agents
    eye = np.eye(n)
    w = np.block([
        [wp.w_row, delta * eye],
        [eye - wp.w_row, wp.w_col - delta * eye],
    ])
    return AugmentedMatrix(w_aug=w, delta=float(delta))


def delta_hat(wp: WeightPair) -> float:
    """Conservative upper bound on the surplus gain for geometric convergence.

    Computed as ((1 - |s3|) / (20 + 8N))^N where s3 is the third-largest
    eigenvalue by modulus of the augmented matrix at delta = 0 (counted with
    multiplicity; eigenvalues of the nonsymmetric matrix may be complex, so
    moduli are used throughout).  The bound is extremely conservative: for
    N = 10 it is already below 1e-30.
    """
    n = wp.n_agents
    if 2 * n < 3:
        raise GraphError(f"need at least 3 augmented states, got 2N={2 * n}")
    w0 = build_augmented(wp, 0.0)
    try:
        eigvals = np.linalg.eigvals(w0.w_aug)
    except np.linalg.LinAlgError as exc:
        raise GraphError(f"eigenvalue computation failed for {2 * n}x{2 * n} augmented matrix: {exc}") from exc
    moduli = np.sort(np.abs(eigvals))[::-1]
    sigma3 = moduli[2]
    return float(((1.0 - sigma3) / (20.0 + 8.0 * n)) ** n)


def limit_matrix(n: int) -> np.ndarray:
    """Target of the augmented matrix powers: [[11^T/N, 11^T/N], [0, 0]]."""
    lim = np.zeros((2 * n, 2 * n))
    lim[:n, :] = 1.0 / n
    return lim


def matrix_power_gap(am: AugmentedMatrix, t: int) -> float:
    """Max-absolute-row-sum distance between W^t and the limit matrix."""
    if t < 1:
        raise GraphError(f"power must be >= 1, got {t}")
    p = np.linalg.matrix_power(am.w_aug, t)
    diff = p - limit_matrix(am.n_agents)
    return float(np.abs(diff).sum(axis=1).max())


def matrix_power_gap_series(am: AugmentedMatrix, t_max: int) -> np.ndarray:
    """Gap at every power t = 1..t_max, computed by cumulative multiplication."""
    if t_max < 1:
        raise GraphError(f"t_max must be >= 1, got {t_max}")
    lim = limit_matrix(am.n_agents)
    out = np.empty(t_max)
    p = np.eye(2 * am.n_agents)
    for t in range(1, t_max + 1):
        p = p @ am.w_aug
        out[t - 1] = np.abs(p - lim).sum(axis=1).max()
    return out
