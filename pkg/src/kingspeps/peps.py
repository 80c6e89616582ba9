"""Boltzmann-weight tensor network of a grid model and its contraction.

The network works in a *transformed frame*: one of the eight dihedral
symmetries of the grid is applied up front, and all sweeping happens
top-to-bottom, left-to-right in the transformed coordinates. Running
the same search under several transforms probes different contraction
orders of the same model.

Interaction bookkeeping uses the backward star of each site: every
king edge is stored once, on its row-major-later endpoint, under the
direction that points back to the earlier endpoint:

    "w"  : (r, c-1)   -- same row, left
    "nw" : (r-1, c-1) -- upper left diagonal
    "n"  : (r-1, c)   -- directly above
    "ne" : (r-1, c+1) -- upper right diagonal

With that layout a row-to-row transfer operator, the summed boundary
of the lower half, and the conditional weights of a single site all
read off the same four tables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (ContractionDegenerateError, InvalidIndexError,
                     NumericError)
from .potts import PottsHamiltonian
from .tensor_core import (BoundaryMps, ContractionParams, RowMpo, apply_mpo,
                          compress)
from .tensor_core import overlap as mps_overlap

_TRANSFORM_NAMES = ("r0", "r90", "r180", "r270", "r0f", "r90f", "r180f", "r270f")


@dataclass(frozen=True)
class LatticeTransform:
    """One of the eight dihedral symmetries of the grid.

    ``code % 4`` counts quarter turns; codes 4..7 additionally flip the
    columns (the flip is applied before the rotation). Together the
    eight transforms form the symmetry group of the square: composing
    :meth:`apply` with :meth:`inverse` is the identity on coordinates.
    """

    code: int = 0

    def __post_init__(self):
        if not 0 <= self.code <= 7:
            raise InvalidIndexError(f"transform code must be 0..7, got {self.code}")

    @property
    def rotations(self) -> int:
        return self.code % 4

    @property
    def reflected(self) -> bool:
        return self.code >= 4

    @property
    def name(self) -> str:
        return _TRANSFORM_NAMES[self.code]

    def transformed_dims(self, dims):
        m, n = dims
        return (n, m) if self.rotations % 2 else (m, n)

    def apply(self, site, dims):
        """Map original 1-based coordinates to the transformed frame."""
        m, n = dims
        r, c = site
        if not (1 <= r <= m and 1 <= c <= n):
            raise InvalidIndexError(f"site {site} outside {m}x{n} grid")
        if self.reflected:
            c = n + 1 - c
        k = self.rotations
        if k == 0:
            return (r, c)
        if k == 1:
            return (c, m + 1 - r)
        if k == 2:
            return (m + 1 - r, n + 1 - c)
        return (n + 1 - c, r)

    def inverse(self, site, dims):
        """Map transformed coordinates back; ``dims`` is the original shape."""
        m, n = dims
        tm, tn = self.transformed_dims(dims)
        rt, ct = site
        if not (1 <= rt <= tm and 1 <= ct <= tn):
            raise InvalidIndexError(f"site {site} outside {tm}x{tn} grid")
        k = self.rotations
        if k == 0:
            r, c = rt, ct
        elif k == 1:
            r, c = m + 1 - ct, rt
        elif k == 2:
            r, c = m + 1 - rt, n + 1 - ct
        else:
            r, c = ct, n + 1 - rt
        if self.reflected:
            c = n + 1 - c
        return (r, c)


ALL_TRANSFORMS = tuple(LatticeTransform(code) for code in range(8))

IDENTITY_TRANSFORM = ALL_TRANSFORMS[0]

_BACK_OFFSETS = {"w": (0, -1), "nw": (-1, -1), "n": (-1, 0), "ne": (-1, 1)}


def apply_transform(transform: LatticeTransform, site, dims):
    """Coordinate map of a transform; see :meth:`LatticeTransform.apply`."""
    return transform.apply(site, dims)


class PepsNetwork:
    """Boltzmann tables of a model in a transformed frame.

    Carries both raw energy tables (used for exact incremental
    energies) and their Boltzmann weights ``exp(-beta * E)`` in the
    requested dtype. Immutable once built; share freely.
    """

    def __init__(self, hamiltonian: PottsHamiltonian,
                 transform: LatticeTransform, beta: float,
                 dtype=np.float64):
        if not beta > 0:
            raise NumericError(f"beta must be positive, got {beta}")
        self.hamiltonian = hamiltonian
        self.transform = transform
        self.beta = float(beta)
        self.dtype = np.dtype(dtype)
        dims = (hamiltonian.rows, hamiltonian.cols)
        self.rows, self.cols = transform.transformed_dims(dims)

        self.site_dims: dict[tuple[int, int], int] = {}
        self.site_energy: dict[tuple[int, int], np.ndarray] = {}
        self.site_weight: dict[tuple[int, int], np.ndarray] = {}
        self.back_energy: dict[tuple[tuple[int, int], str], np.ndarray] = {}
        self.back_weight: dict[tuple[tuple[int, int], str], np.ndarray] = {}

        for site in hamiltonian.sites():
            ts = transform.apply(site, dims)
            self.site_dims[ts] = hamiltonian.dim(site)
            energy = hamiltonian.node_table(site)
            self.site_energy[ts] = energy
            self.site_weight[ts] = self._boltzmann(energy)

        for (a, b), table in hamiltonian.edge_tables():
            ta, tb = transform.apply(a, dims), transform.apply(b, dims)
            if tb < ta:
                ta, tb = tb, ta
                table = table.T
            delta = (tb[0] - ta[0], tb[1] - ta[1])
            direction = next(d for d, off in _BACK_OFFSETS.items()
                             if off == (-delta[0], -delta[1]))
            self.back_energy[(tb, direction)] = table
            self.back_weight[(tb, direction)] = self._boltzmann(table)

    def _boltzmann(self, energy: np.ndarray) -> np.ndarray:
        with np.errstate(over="ignore"):
            weight = np.exp(-self.beta * np.asarray(energy, dtype=np.float64))
        if not np.all(np.isfinite(weight)):
            raise NumericError(
                "Boltzmann weight overflowed; reduce beta or rescale energies")
        return weight.astype(self.dtype)

    # -- transformed-frame helpers --------------------------------------

    def dim_at(self, row: int, col: int) -> int:
        return self.site_dims[(row, col)]

    def row_dims(self, row: int) -> list[int]:
        return [self.site_dims[(row, c)] for c in range(1, self.cols + 1)]

    def back(self, row: int, col: int, direction: str, *, weight: bool):
        store = self.back_weight if weight else self.back_energy
        return store.get(((row, col), direction))

    def position(self, row: int, col: int) -> int:
        """Row-major 1-based linear position in the transformed frame."""
        return (row - 1) * self.cols + col

    def site_of(self, position: int) -> tuple[int, int]:
        return ((position - 1) // self.cols + 1, (position - 1) % self.cols + 1)

    def original_position(self, position: int) -> int:
        """Map a transformed linear position to the original frame."""
        site = self.transform.inverse(
            self.site_of(position),
            (self.hamiltonian.rows, self.hamiltonian.cols))
        return (site[0] - 1) * self.hamiltonian.cols + site[1]

    def __repr__(self):
        return (f"PepsNetwork({self.rows}x{self.cols}, beta={self.beta}, "
                f"transform={self.transform.name})")


def build_network(hamiltonian: PottsHamiltonian,
                  transform: LatticeTransform = IDENTITY_TRANSFORM,
                  beta: float = 1.0, dtype=np.float64) -> PepsNetwork:
    """Build the Boltzmann network whose full contraction is the
    partition function Z = sum_x exp(-beta * E(x))."""
    return PepsNetwork(hamiltonian, transform, beta, dtype)


def row_transfer_mpo(net: PepsNetwork, row: int) -> RowMpo:
    """Transfer operator from row ``row`` to ``row + 1``.

    Input physical legs carry the states x of row ``row``, output legs
    the states y of row ``row + 1``. The tensor at column c multiplies
    the weights of: site (row+1, c), the vertical edge above it, the
    horizontal edge to (row+1, c-1), and both diagonals between the two
    rows that end at column c. The bond between columns c and c+1
    carries x_c and/or y_c, but only when some weight to its right
    actually depends on them, so uncoupled columns factorize with bond
    extent 1. Applying the full chain to an all-ones start accumulates
    exactly the Boltzmann weight of everything at or below row ``row+1``
    plus the inter-row couplings.
    """
    if not 1 <= row < net.rows:
        raise InvalidIndexError(f"row pair {row}|{row + 1} outside grid")
    n = net.cols
    lower = row + 1

    # carried_x[c] / carried_y[c]: does the bond between columns c and
    # c+1 need the upper / lower state of column c?
    carried_x = [False] * (n + 2)
    carried_y = [False] * (n + 2)
    for c in range(1, n):
        carried_x[c] = net.back(lower, c + 1, "nw", weight=True) is not None
        carried_y[c] = (net.back(lower, c + 1, "w", weight=True) is not None
                        or net.back(lower, c, "ne", weight=True) is not None)

    tensors = []
    for c in range(1, n + 1):
        dx = net.dim_at(row, c)
        dy = net.dim_at(lower, c)
        dxl = net.dim_at(row, c - 1) if carried_x[c - 1] else 1
        dyl = net.dim_at(lower, c - 1) if carried_y[c - 1] else 1
        dxr = dx if carried_x[c] else 1
        dyr = dy if carried_y[c] else 1

        a = np.ones((dxl, dyl, dx, dy), dtype=net.dtype)
        a = a * net.site_weight[(lower, c)][None, None, None, :]
        w_vert = net.back(lower, c, "n", weight=True)
        if w_vert is not None:
            a = a * w_vert[None, None, :, :]
        if c > 1:
            w_horiz = net.back(lower, c, "w", weight=True)
            if w_horiz is not None:
                a = a * w_horiz[None, :, None, :]
            w_nw = net.back(lower, c, "nw", weight=True)
            if w_nw is not None:
                a = a * w_nw[:, None, None, :]
            w_ne_prev = net.back(lower, c - 1, "ne", weight=True)
            if w_ne_prev is not None:
                # couples x_c with y_{c-1}; table is (d_x, d_{y,c-1})
                a = a * w_ne_prev.T[None, :, :, None]

        t = np.zeros((dxl * dyl, dx, dy, dxr * dyr), dtype=net.dtype)
        flat = a.reshape(dxl * dyl, dx, dy)
        for x in range(dx):
            for y in range(dy):
                rbond = (x if carried_x[c] else 0) * dyr + (y if carried_y[c] else 0)
                t[:, x, y, rbond] = flat[:, x, y]
        tensors.append(t)
    return RowMpo(tensors)


def first_row_mps(net: PepsNetwork) -> BoundaryMps:
    """MPS of row 1's own weights: site terms and intra-row horizontal
    edges. Contracted against a bottom environment it completes Z."""
    n = net.cols
    carried = [net.back(1, c + 1, "w", weight=True) is not None
               for c in range(n)] + [False]
    # carried[c-1] refers to the bond left of column c (1-based columns)
    tensors = []
    for c in range(1, n + 1):
        d = net.dim_at(1, c)
        dl = net.dim_at(1, c - 1) if (c > 1 and carried[c - 1]) else 1
        dr = d if carried[c] else 1
        v = np.ones((dl, d), dtype=net.dtype) * net.site_weight[(1, c)][None, :]
        if c > 1:
            w_horiz = net.back(1, c, "w", weight=True)
            if w_horiz is not None:
                v = v * w_horiz
        t = np.zeros((dl, d, dr), dtype=net.dtype)
        for x in range(d):
            t[:, x, x if carried[c] else 0] = v[:, x]
        tensors.append(t)
    return BoundaryMps(tensors).normalize_scale()


class EnvironmentCache:
    """Memoized environments of one solver run.

    Holds the bottom boundary MPS per row, right parts keyed by
    ``(row, column, fixed values of the row above at columns >= column)``
    and left parts keyed by the fixed prefix of the current row. Keys
    contain exactly the values the environment depends on, which is what
    lets merged search branches share work. Entries are bit-reproducible
    for identical keys; a cache must not outlive its network.
    """

    def __init__(self):
        self._bottom: dict[int, BoundaryMps] = {}
        self._right: dict[tuple, np.ndarray] = {}
        self._left: dict[tuple, np.ndarray] = {}
        self._network: PepsNetwork | None = None
        self.negative_clamps = 0

    def clear(self):
        self._bottom.clear()
        self._right.clear()
        self._left.clear()
        self._network = None
        self.negative_clamps = 0

    def __len__(self):
        return len(self._bottom) + len(self._right) + len(self._left)

    def _bind(self, net: PepsNetwork):
        if self._network is None:
            self._network = net
        elif self._network is not net:
            raise ValueError("EnvironmentCache reused with a different network; "
                             "call clear() between runs")

    def bottom(self, net: PepsNetwork, row: int,
               params: ContractionParams) -> BoundaryMps:
        self._bind(net)
        for r in range(net.rows, row - 1, -1):
            if r in self._bottom:
                continue
            if r == net.rows:
                env = BoundaryMps.ones(net.row_dims(r), dtype=net.dtype)
            else:
                grown = apply_mpo(row_transfer_mpo(net, r).transpose(),
                                  self._bottom[r + 1])
                env, _ = compress(grown, params)
            self._bottom[r] = env
        return self._bottom[row]

    def left_part(self, net: PepsNetwork, row: int, prefix: tuple[int, ...],
                  bottom: BoundaryMps) -> np.ndarray:
        """Bottom-MPS tensors of ``row`` contracted with the fixed values
        ``prefix`` of columns 1..len(prefix)."""
        self._bind(net)
        key = (row, prefix)
        found = self._left.get(key)
        if found is not None:
            return found
        if not prefix:
            vec = np.ones(1, dtype=net.dtype)
        else:
            prev = self.left_part(net, row, prefix[:-1], bottom)
            vec = prev @ bottom.tensors[len(prefix) - 1][:, prefix[-1] - 1, :]
            mx = np.max(np.abs(vec))
            if mx > 0:
                vec = vec / mx
        self._left[key] = vec
        return vec

    def right_part(self, net: PepsNetwork, row: int, col: int,
                   above: tuple[int, ...], bottom: BoundaryMps) -> np.ndarray:
        """Summed weights of the free columns right of ``col`` in ``row``.

        ``above`` carries the fixed values of row ``row - 1`` at columns
        ``col..cols`` (empty for the first row). The result has shape
        ``(d_col, right bond of column col)`` and is indexed by the
        candidate state of column ``col``.
        """
        self._bind(net)
        key = (row, col, above)
        found = self._right.get(key)
        if found is not None:
            return found
        if col == net.cols:
            env = np.ones((net.dim_at(row, col), 1), dtype=net.dtype)
        else:
            tail = self.right_part(net, row, col + 1, above[1:], bottom)
            a = bottom.tensors[col]  # column col + 1, 0-based storage
            h = np.einsum("axb,xb->xa", a, tail)
            v = _free_column_weights(net, row, col + 1, above, col)
            env = v @ h
            mx = np.max(np.abs(env))
            if mx > 0:
                env = env / mx
        self._right[key] = env
        return env


def bottom_env(net: PepsNetwork, row: int, params: ContractionParams,
               cache: EnvironmentCache | None = None) -> BoundaryMps:
    """Boundary MPS summing everything strictly below ``row`` plus the
    couplings between rows ``row`` and ``row + 1``.

    The physical legs are the states of row ``row``; for the last row
    the environment is the all-ones product state. Built by repeatedly
    applying the transposed transfer operator and compressing; memoized
    per row in the cache.
    """
    if not 1 <= row <= net.rows:
        raise InvalidIndexError(f"row {row} outside 1..{net.rows}")
    if cache is None:
        cache = EnvironmentCache()
    return cache.bottom(net, row, params)


def _free_column_weights(net: PepsNetwork, row: int, col: int,
                         above: tuple[int, ...], anchor: int) -> np.ndarray:
    """Weight matrix V[x_{col-1}, x_col] of a free column.

    Collects the site weight, the horizontal edge to the left, and the
    vertical/diagonal couplings to the fixed row above. ``above`` holds
    the fixed values starting at column ``anchor``.
    """
    d_prev = net.dim_at(row, col - 1)
    d = net.dim_at(row, col)
    v = np.ones((d_prev, d), dtype=net.dtype) * net.site_weight[(row, col)][None, :]
    w_horiz = net.back(row, col, "w", weight=True)
    if w_horiz is not None:
        v = v * w_horiz
    if row > 1:
        w_vert = net.back(row, col, "n", weight=True)
        if w_vert is not None:
            v = v * w_vert[above[col - anchor] - 1, :][None, :]
        w_nw = net.back(row, col, "nw", weight=True)
        if w_nw is not None:
            v = v * w_nw[above[col - 1 - anchor] - 1, :][None, :]
        if col < net.cols:
            w_ne = net.back(row, col, "ne", weight=True)
            if w_ne is not None:
                v = v * w_ne[above[col + 1 - anchor] - 1, :][None, :]
    return v


def _candidate_weights(net: PepsNetwork, row: int, col: int,
                       partial) -> np.ndarray:
    """Boltzmann weights of the next site against its fixed neighbors."""
    n = net.cols
    w = net.site_weight[(row, col)].copy()
    if col > 1:
        w_horiz = net.back(row, col, "w", weight=True)
        if w_horiz is not None:
            w = w * w_horiz[partial[net.position(row, col - 1) - 1] - 1, :]
    if row > 1:
        w_vert = net.back(row, col, "n", weight=True)
        if w_vert is not None:
            w = w * w_vert[partial[net.position(row - 1, col) - 1] - 1, :]
        if col > 1:
            w_nw = net.back(row, col, "nw", weight=True)
            if w_nw is not None:
                w = w * w_nw[partial[net.position(row - 1, col - 1) - 1] - 1, :]
        if col < n:
            w_ne = net.back(row, col, "ne", weight=True)
            if w_ne is not None:
                w = w * w_ne[partial[net.position(row - 1, col + 1) - 1] - 1, :]
    return w


def conditional_distribution(net: PepsNetwork, cache: EnvironmentCache | None,
                             params: ContractionParams,
                             partial) -> np.ndarray:
    """Conditional Boltzmann distribution of the next site.

    ``partial`` must assign exactly the row-major predecessors of the
    site being queried, in the transformed frame. The numerator combines
    the exact left part of the current row, the candidate weights, the
    summed right part of the row, and the bottom environment; the vector
    is normalized to sum 1 with negative truncation noise clamped to
    zero (counted on ``cache.negative_clamps``).

    Raises:
        ContractionDegenerateError: every weight underflowed to zero.
    """
    if cache is None:
        cache = EnvironmentCache()
    partial = tuple(partial)
    k = len(partial) + 1
    total = net.rows * net.cols
    if k > total:
        raise InvalidIndexError(
            f"partial assignment already covers all {total} sites")
    if partial and min(partial) < 1:
        raise InvalidIndexError("state values are 1-based")
    row, col = net.site_of(k)

    try:
        bottom = cache.bottom(net, row, params)
        prefix = partial[(row - 1) * net.cols:(row - 1) * net.cols + col - 1]
        left = cache.left_part(net, row, prefix, bottom)
        if row > 1:
            above = partial[(row - 2) * net.cols + col - 1:(row - 1) * net.cols]
        else:
            above = ()
        right = cache.right_part(net, row, col, above, bottom)
        weights = _candidate_weights(net, row, col, partial)
        numerator = np.einsum("a,asb,sb->s", left,
                              bottom.tensors[col - 1], right) * weights
    except IndexError:
        raise InvalidIndexError(
            f"partial assignment contains a state outside its site dimension")

    negative = numerator < 0
    if negative.any():
        cache.negative_clamps += int(negative.sum())
        numerator = np.where(negative, 0.0, numerator)
    norm = float(numerator.sum())
    if norm <= 0.0 or not math.isfinite(norm):
        raise ContractionDegenerateError(
            "conditional weights vanished", position=(row, col))
    return (numerator / norm).astype(np.float64)


def contract_network(net: PepsNetwork, params: ContractionParams | None = None,
                     cache: EnvironmentCache | None = None):
    """Full contraction of the network.

    Returns ``(value, log_scale)``; the partition function is
    ``value * exp(log_scale)``. With ``params=None`` the contraction is
    exact up to the rank-revealing floor (no bond cap).
    """
    if params is None:
        params = ContractionParams(bond_dim=2 ** 31 - 1, num_sweeps=0,
                                   beta=net.beta)
    if cache is None:
        cache = EnvironmentCache()
    env = cache.bottom(net, 1, params)
    return mps_overlap(first_row_mps(net), env)
