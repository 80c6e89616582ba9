"""Potts Hamiltonians on a king's graph.

A model lives on an m x n grid where every site holds a discrete
variable with its own dimension, sites carry energy tables, and
king-adjacent site pairs (Chebyshev distance 1, diagonals included)
carry pairwise energy tables:

    E(x) = sum_{<a,b>} E_ab(x_a, x_b) + sum_a E_a(x_a).

Models are built either directly (native grids) or by clustering an
Ising graph: consecutive blocks of t spins become one effective
variable with 2^t states, blocks placed row-major on the grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence, Tuple

import numpy as np

from .errors import (DimensionError, GeometryError, InvalidIndexError,
                     UnsupportedError)
from .ising import IsingGraph

Site = Tuple[int, int]


@dataclass(frozen=True)
class ClusterTopology:
    """Grid shape for clustering: rows x cols clusters of t spins each."""

    rows: int
    cols: int
    spins_per_cluster: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1 or self.spins_per_cluster < 1:
            raise DimensionError(f"topology entries must be positive, got {self}")

    @property
    def n_spins(self) -> int:
        return self.rows * self.cols * self.spins_per_cluster


def king_adjacent(a: Site, b: Site) -> bool:
    """True when two distinct sites are a king's move apart."""
    dr, dc = abs(a[0] - b[0]), abs(a[1] - b[1])
    return max(dr, dc) == 1


def cluster_spin_values(t: int) -> np.ndarray:
    """Spin configurations of the 2^t cluster states.

    Row b (0-based, state index b+1) holds the t spin values of that
    state; bit q of b gives spin (-1)^bit for the q-th spin, least
    significant bit first. State 1 is therefore all spins up.
    """
    b = np.arange(2 ** t)[:, None]
    q = np.arange(t)[None, :]
    return (1 - 2 * ((b >> q) & 1)).astype(np.int8)


class PottsHamiltonian:
    """Energy tables on a king's-graph grid.

    Sites are keyed by 1-based ``(row, col)`` tuples; states are
    1-based. Node tables are dense vectors, edge tables are dense
    matrices stored once per pair with the row-major-earlier site first.
    ``cluster_map`` is present when the model came from an Ising graph
    and maps each site to the ordered 1-based spin indices it absorbs.
    """

    def __init__(self, rows: int, cols: int):
        if rows < 1 or cols < 1:
            raise DimensionError(f"grid must be at least 1x1, got {rows}x{cols}")
        self.rows = rows
        self.cols = cols
        self._dims: dict[Site, int] = {}
        self._node: dict[Site, np.ndarray] = {}
        self._edge: dict[tuple[Site, Site], np.ndarray] = {}
        self.cluster_map: dict[Site, tuple[int, ...]] | None = None

    # -- construction -------------------------------------------------

    def _check_site(self, site: Site):
        r, c = site
        if not (1 <= r <= self.rows and 1 <= c <= self.cols):
            raise InvalidIndexError(
                f"site {site} outside {self.rows}x{self.cols} grid")

    def set_node(self, site: Site, table: Sequence[float]):
        self._check_site(site)
        arr = np.asarray(table, dtype=np.float64).copy()
        if arr.ndim != 1 or arr.size < 1:
            raise DimensionError(f"node table at {site} must be a non-empty vector")
        old = self._dims.get(site)
        if old is not None and old != arr.size:
            raise DimensionError(
                f"site {site} dimension changed from {old} to {arr.size}")
        self._dims[site] = arr.size
        self._node[site] = arr

    def set_edge(self, a: Site, b: Site, table):
        self._check_site(a)
        self._check_site(b)
        if a == b:
            raise GeometryError(f"edge endpoints coincide at {a}")
        if not king_adjacent(a, b):
            raise GeometryError(f"sites {a} and {b} are not king-adjacent")
        arr = np.asarray(table, dtype=np.float64).copy()
        if arr.ndim != 2:
            raise DimensionError(f"edge table for {a}-{b} must be a matrix")
        if b < a:
            a, b = b, a
            arr = arr.T
        for site, size in ((a, arr.shape[0]), (b, arr.shape[1])):
            old = self._dims.get(site)
            if old is None:
                self._dims[site] = size
            elif old != size:
                raise DimensionError(
                    f"edge table for {a}-{b} disagrees with dimension {old} at {site}")
        self._edge[(a, b)] = arr

    # -- access --------------------------------------------------------

    def sites(self) -> Iterator[Site]:
        """All grid sites in row-major order."""
        for r in range(1, self.rows + 1):
            for c in range(1, self.cols + 1):
                yield (r, c)

    def dim(self, site: Site) -> int:
        self._check_site(site)
        return self._dims.get(site, 1)

    def node_table(self, site: Site) -> np.ndarray:
        self._check_site(site)
        table = self._node.get(site)
        if table is None:
            return np.zeros(self.dim(site), dtype=np.float64)
        return table

    def edge_table(self, a: Site, b: Site) -> np.ndarray | None:
        """Table oriented (state of a, state of b), or None if absent."""
        if b < a:
            table = self._edge.get((b, a))
            return None if table is None else table.T
        return self._edge.get((a, b))

    def edge_tables(self) -> Iterator[tuple[tuple[Site, Site], np.ndarray]]:
        for pair in sorted(self._edge):
            yield pair, self._edge[pair]

    @property
    def n_states(self) -> int:
        total = 1
        for site in self.sites():
            total *= self.dim(site)
        return total

    def __repr__(self):
        return f"PottsHamiltonian({self.rows}x{self.cols}, edges={len(self._edge)})"


def cluster(graph: IsingGraph, topology: ClusterTopology) -> PottsHamiltonian:
    """Group an Ising graph into effective grid variables.

    Spin with 1-based index l belongs to cluster k = (l-1) // t, and
    cluster k sits row-major at (k // cols + 1, k % cols + 1). Each
    cluster's 2^t states enumerate its spin configurations as in
    :func:`cluster_spin_values`. Node tables hold intra-cluster
    couplings plus fields; edge tables hold the inter-cluster couplings.

    Raises:
        DimensionError: spin count does not match the topology.
        GeometryError: a coupling connects clusters that are not
            king-adjacent, naming the offending spins.
    """
    m, n, t = topology.rows, topology.cols, topology.spins_per_cluster
    if graph.n_spins != topology.n_spins:
        raise DimensionError(
            f"graph has {graph.n_spins} spins, topology ({m},{n},{t}) "
            f"needs {topology.n_spins}")

    d = 2 ** t
    spins = cluster_spin_values(t).astype(np.float64)

    def cluster_of(spin: int) -> int:
        return (spin - 1) // t

    def site_of(k: int) -> Site:
        return (k // n + 1, k % n + 1)

    node = [np.zeros(d) for _ in range(m * n)]
    inter: dict[tuple[int, int], np.ndarray] = {}

    for k in range(m * n):
        base = k * t
        for q in range(t):
            node[k] += graph.fields[base + q] * spins[:, q]

    for (i, j), coupling in graph.couplings.items():
        ki, kj = cluster_of(i), cluster_of(j)
        qi, qj = (i - 1) % t, (j - 1) % t
        if ki == kj:
            node[ki] += coupling * spins[:, qi] * spins[:, qj]
            continue
        if ki > kj:
            ki, kj = kj, ki
            qi, qj = qj, qi
        if not king_adjacent(site_of(ki), site_of(kj)):
            raise GeometryError(
                f"coupling between spins {i} and {j} connects clusters at "
                f"{site_of(cluster_of(i))} and {site_of(cluster_of(j))}, "
                f"which are not king-adjacent")
        table = inter.setdefault((ki, kj), np.zeros((d, d)))
        table += coupling * np.outer(spins[:, qi], spins[:, qj])

    h = PottsHamiltonian(m, n)
    for k in range(m * n):
        h.set_node(site_of(k), node[k])
    for (ki, kj), table in inter.items():
        h.set_edge(site_of(ki), site_of(kj), table)
    h.cluster_map = {site_of(k): tuple(range(k * t + 1, (k + 1) * t + 1))
                     for k in range(m * n)}
    return h


def _as_site_values(h: PottsHamiltonian, assignment) -> dict[Site, int]:
    if isinstance(assignment, Mapping):
        values = dict(assignment)
    else:
        flat = list(assignment)
        if len(flat) != h.rows * h.cols:
            raise DimensionError(
                f"assignment has {len(flat)} values, grid has {h.rows * h.cols} sites")
        values = {site: flat[idx] for idx, site in enumerate(h.sites())}
    for site in h.sites():
        if site not in values:
            raise InvalidIndexError(f"assignment missing site {site}")
        state = values[site]
        if not 1 <= state <= h.dim(site):
            raise InvalidIndexError(
                f"state {state} at site {site} outside 1..{h.dim(site)}")
    return values


def potts_energy(h: PottsHamiltonian, assignment) -> float:
    """Exact energy of a full assignment.

    Args:
        h: the model.
        assignment: either a mapping site -> state or a row-major
            sequence of 1-based states.
    """
    values = _as_site_values(h, assignment)
    energy = 0.0
    for site in h.sites():
        table = h._node.get(site)
        if table is not None:
            energy += float(table[values[site] - 1])
    for (a, b), table in h._edge.items():
        energy += float(table[values[a] - 1, values[b] - 1])
    return energy


def decode(h: PottsHamiltonian, assignment) -> np.ndarray:
    """Spin assignment (+1/-1 per source spin) encoded by a Potts assignment.

    Requires a cluster map; inverse of the state enumeration used by
    :func:`cluster`, so ``decode(cluster(g, topo), encode(...)) `` is the
    identity on spin configurations.
    """
    if h.cluster_map is None:
        raise UnsupportedError("model carries no cluster map; decode needs one")
    values = _as_site_values(h, assignment)
    n_spins = sum(len(group) for group in h.cluster_map.values())
    spins = np.zeros(n_spins, dtype=np.int8)
    for site, group in h.cluster_map.items():
        b = values[site] - 1
        for q, spin_index in enumerate(group):
            spins[spin_index - 1] = 1 - 2 * ((b >> q) & 1)
    return spins


def encode(h: PottsHamiltonian, spins: Sequence[int]) -> tuple[int, ...]:
    """Potts assignment (row-major) for a spin configuration."""
    if h.cluster_map is None:
        raise UnsupportedError("model carries no cluster map; encode needs one")
    s = np.asarray(spins)
    out = []
    for site in h.sites():
        group = h.cluster_map[site]
        b = 0
        for q, spin_index in enumerate(group):
            if s[spin_index - 1] < 0:
                b |= 1 << q
        out.append(b + 1)
    return tuple(out)
