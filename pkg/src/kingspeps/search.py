"""Branch-and-bound search in probability space.

The solver sweeps the grid row-major in the transformed frame, adding
one variable at a time. At each step every branch spawns one child per
state of the new site, branches that agree on the *boundary* (the
assigned sites still adjacent to unexplored ones) are merged keeping
the lowest-energy representative, and the population is pruned to the
most probable ``max_states``. Merging records the discarded branch as a
droplet on the survivor: the set of bulk sites where the two differed,
plus the energy gap. Unpacking droplets afterwards reconstructs the
low-energy configurations the merges absorbed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import DimensionError, InvalidIndexError, UnsupportedError
from .peps import (ALL_TRANSFORMS, EnvironmentCache, LatticeTransform,
                   PepsNetwork, build_network, conditional_distribution)
from .potts import PottsHamiltonian, potts_energy
from .tensor_core import ContractionParams

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SearchParams:
    """Branch population limits.

    ``cut_off_prob`` drops branches whose probability falls below that
    fraction of the current best branch; 0 disables the threshold.
    """

    max_states: int = 256
    cut_off_prob: float = 1e-4

    def __post_init__(self):
        if self.max_states < 1:
            raise DimensionError(f"max_states must be >= 1, got {self.max_states}")
        if not 0.0 <= self.cut_off_prob <= 1.0:
            raise DimensionError(
                f"cut_off_prob must lie in [0, 1], got {self.cut_off_prob}")


@dataclass(frozen=True)
class DropletParams:
    """Filters for recorded excitations.

    ``energy_cutoff`` bounds the energy gap above the surviving branch;
    ``hamming_cutoff`` is the minimal distance between excitations kept
    on the same branch. ``mode`` selects the distance: "spin" counts
    differing source spins (needs a cluster map), "potts" counts
    differing grid variables.
    """

    energy_cutoff: float = 0.0
    hamming_cutoff: int = 0
    metric: str = "hamming"
    mode: str = "potts"

    def __post_init__(self):
        if self.energy_cutoff < 0:
            raise DimensionError(
                f"energy_cutoff must be >= 0, got {self.energy_cutoff}")
        if self.hamming_cutoff < 0:
            raise DimensionError(
                f"hamming_cutoff must be >= 0, got {self.hamming_cutoff}")
        if self.metric != "hamming":
            raise UnsupportedError(f"unknown droplet metric {self.metric!r}")
        if self.mode not in ("spin", "potts"):
            raise UnsupportedError(f"unknown droplet mode {self.mode!r}")


@dataclass(frozen=True)
class Droplet:
    """A localized excitation relative to its carrier configuration.

    ``flips`` maps 1-based row-major positions to the alternative state;
    ``sub_droplets`` are the excitations that were attached to the
    discarded branch when it merged, valid within this droplet's
    context.
    """

    flips: tuple[tuple[int, int], ...]
    delta_energy: float
    sub_droplets: tuple["Droplet", ...] = ()

    def remap(self, position_map) -> "Droplet":
        flips = tuple(sorted((position_map[pos], value)
                             for pos, value in self.flips))
        return Droplet(flips, self.delta_energy,
                       tuple(s.remap(position_map) for s in self.sub_droplets))


@dataclass(frozen=True)
class PartialConfig:
    """One branch of the search.

    ``values`` are the assigned states in row-major transformed order;
    ``log_probability`` accumulates the log conditionals; ``energy`` is
    the exact energy of all terms determined so far.
    """

    values: tuple[int, ...]
    log_probability: float
    energy: float
    droplets: tuple[Droplet, ...] = ()


@dataclass
class Solution:
    """Ranked full configurations in original coordinates."""

    states: list[tuple[int, ...]]
    energies: list[float]
    log_probabilities: list[float]
    droplets: list[tuple[Droplet, ...]]
    largest_discarded_probability: float
    beta: float
    parameters: dict = field(default_factory=dict)

    @property
    def best_energy(self) -> float:
        return self.energies[0]


def boundary_sites(dims, k: int) -> list[tuple[int, int]]:
    """Assigned sites sharing a king edge with an unassigned one.

    ``k`` is the row-major position of the last assigned site. Sites
    come back sorted row-major. Empty once everything is assigned.
    """
    m, n = dims
    if not 1 <= k <= m * n:
        raise InvalidIndexError(f"position {k} outside 1..{m * n}")
    if k == m * n:
        return []
    i, j = (k - 1) // n + 1, (k - 1) % n + 1
    out = []
    if i > 1 and j < n:
        out.extend((i - 1, c) for c in range(j, n + 1))
    if j == n or i < m:
        out.extend((i, c) for c in range(1, j + 1))
    else:
        # last row, mid-row: only the current site touches the frontier
        out.append((i, j))
    return out


def branch(states: Sequence[PartialConfig], k: int, net: PepsNetwork,
           cache: EnvironmentCache, params: ContractionParams
           ) -> list[PartialConfig]:
    """Extend every branch by all states of site ``k``.

    Children pick up the log conditional and the exact energy of the
    newly determined terms (the site's own table plus its edges to
    already-assigned neighbors).
    """
    row, col = net.site_of(k)
    out = []
    for state in states:
        if len(state.values) != k - 1:
            raise DimensionError(
                f"branch at position {k} requires {k - 1} assigned values, "
                f"got {len(state.values)}")
        conditional = conditional_distribution(net, cache, params, state.values)
        for s in range(1, net.dim_at(row, col) + 1):
            p = conditional[s - 1]
            log_p = state.log_probability + (math.log(p) if p > 0 else -math.inf)
            energy = state.energy + _new_terms_energy(net, row, col,
                                                      state.values, s)
            out.append(PartialConfig(state.values + (s,), log_p, energy,
                                     state.droplets))
    return out


def _new_terms_energy(net: PepsNetwork, row: int, col: int,
                      values: tuple[int, ...], state: int) -> float:
    energy = float(net.site_energy[(row, col)][state - 1])
    if col > 1:
        table = net.back(row, col, "w", weight=False)
        if table is not None:
            energy += table[values[net.position(row, col - 1) - 1] - 1, state - 1]
    if row > 1:
        for direction, c in (("nw", col - 1), ("n", col), ("ne", col + 1)):
            if not 1 <= c <= net.cols:
                continue
            table = net.back(row, col, direction, weight=False)
            if table is not None:
                energy += table[values[net.position(row - 1, c) - 1] - 1, state - 1]
    return energy


def _droplet_distance(a: Droplet, b: Droplet, carrier: tuple[int, ...],
                      mode: str) -> int:
    """Hamming distance between the configurations two droplets produce."""
    flips_a = dict(a.flips)
    flips_b = dict(b.flips)
    distance = 0
    for pos in set(flips_a) | set(flips_b):
        va = flips_a.get(pos, carrier[pos - 1])
        vb = flips_b.get(pos, carrier[pos - 1])
        if mode == "spin":
            distance += ((va - 1) ^ (vb - 1)).bit_count()
        elif va != vb:
            distance += 1
    return distance


def merge_and_collect(states: Sequence[PartialConfig], k: int, dims,
                      dp: DropletParams) -> list[PartialConfig]:
    """Merge branches with identical boundary values, collecting droplets.

    Within a group the lowest-energy branch survives (ties broken
    lexicographically). A discarded branch within ``energy_cutoff``
    becomes a droplet on the survivor, carrying its own droplets as
    sub-droplets, unless it comes closer than ``hamming_cutoff`` to an
    already-attached droplet; of such a clashing pair only the lower
    excitation energy is kept.
    """
    positions = [(site[0] - 1) * dims[1] + site[1]
                 for site in boundary_sites(dims, k)]
    groups: dict[tuple[int, ...], list[PartialConfig]] = {}
    for state in states:
        key = tuple(state.values[p - 1] for p in positions)
        groups.setdefault(key, []).append(state)

    merged = []
    for group in groups.values():
        group.sort(key=lambda s: (s.energy, s.values))
        survivor = group[0]
        droplets = list(survivor.droplets)
        for other in group[1:]:
            gap = other.energy - survivor.energy
            if gap > dp.energy_cutoff:
                continue
            flips = tuple((p, other.values[p - 1])
                          for p in range(1, k + 1)
                          if other.values[p - 1] != survivor.values[p - 1])
            if not flips:
                continue
            candidate = Droplet(flips, gap, other.droplets)
            clashing = [d for d in droplets
                        if _droplet_distance(candidate, d, survivor.values,
                                             dp.mode) < dp.hamming_cutoff]
            if any(d.delta_energy <= gap for d in clashing):
                continue
            if clashing:
                droplets = [d for d in droplets if d not in clashing]
            droplets.append(candidate)
        merged.append(replace(survivor, droplets=tuple(droplets)))
    return merged


def prune(states: Sequence[PartialConfig], sp: SearchParams,
          largest_discarded: float = -math.inf):
    """Keep the ``max_states`` most probable branches above the threshold.

    Returns the kept branches and the updated running maximum of the
    discarded log probabilities.
    """
    if not states:
        return list(states), largest_discarded
    ranked = sorted(states, key=lambda s: (-s.log_probability, s.values))
    best = ranked[0].log_probability
    if sp.cut_off_prob > 0.0:
        threshold = best + math.log(sp.cut_off_prob)
        cut = len(ranked)
        while cut > 1 and ranked[cut - 1].log_probability < threshold:
            cut -= 1
        ranked, below = ranked[:cut], ranked[cut:]
    else:
        below = []
    kept = ranked[:sp.max_states]
    for dropped in below + ranked[sp.max_states:]:
        largest_discarded = max(largest_discarded, dropped.log_probability)
    return kept, largest_discarded


def low_energy_spectrum(h: PottsHamiltonian,
                        transform: LatticeTransform = ALL_TRANSFORMS[0],
                        params: ContractionParams | None = None,
                        search_params: SearchParams | None = None,
                        droplet_params: DropletParams | None = None,
                        dtype=np.float64) -> Solution:
    """Run the full branch-merge-prune sweep over the grid.

    With ``droplet_params=None`` branches are never merged (pure
    branch-and-bound); otherwise merging follows
    :func:`merge_and_collect` at every site except the last one, where
    the boundary is empty and merging would collapse the whole spectrum
    into a single configuration.

    Returns:
        A :class:`Solution` with complete assignments mapped back to
        original coordinates, exact energies sorted ascending, chain
        log-probabilities, per-state droplets, and the largest discarded
        probability seen anywhere in the search.
    """
    params = params or ContractionParams()
    search_params = search_params or SearchParams()
    if (droplet_params is not None and droplet_params.mode == "spin"
            and h.cluster_map is None):
        raise UnsupportedError(
            "spin-mode droplet distances need a cluster map; "
            "use mode='potts' for native grid models")

    net = build_network(h, transform, params.beta, dtype)
    cache = EnvironmentCache()
    dims = (net.rows, net.cols)
    total = net.rows * net.cols

    states = [PartialConfig((), 0.0, 0.0)]
    largest_discarded = -math.inf
    for k in range(1, total + 1):
        states = branch(states, k, net, cache, params)
        if droplet_params is not None and k < total:
            states = merge_and_collect(states, k, dims, droplet_params)
        states, largest_discarded = prune(states, search_params,
                                          largest_discarded)
        if k % net.cols == 0:
            logger.debug("row %d/%d: %d branches, %d cached environments",
                         k // net.cols, net.rows, len(states), len(cache))

    position_map = {p: net.original_position(p) for p in range(1, total + 1)}
    finalized = []
    for state in states:
        original = [0] * total
        for p, value in enumerate(state.values, start=1):
            original[position_map[p] - 1] = value
        original = tuple(original)
        energy = potts_energy(h, original)
        droplets = tuple(d.remap(position_map) for d in state.droplets)
        finalized.append((original, energy, state.log_probability, droplets))
    finalized.sort(key=lambda item: (item[1], item[0]))

    return Solution(
        states=[item[0] for item in finalized],
        energies=[item[1] for item in finalized],
        log_probabilities=[item[2] for item in finalized],
        droplets=[item[3] for item in finalized],
        largest_discarded_probability=math.exp(largest_discarded)
        if largest_discarded > -math.inf else 0.0,
        beta=params.beta,
        parameters={
            "beta": params.beta,
            "bond_dim": params.bond_dim,
            "num_sweeps": params.num_sweeps,
            "max_states": search_params.max_states,
            "cut_off_prob": search_params.cut_off_prob,
            "transform": transform.name,
            "energy_cutoff": droplet_params.energy_cutoff if droplet_params else None,
            "hamming_cutoff": droplet_params.hamming_cutoff if droplet_params else None,
            "droplet_mode": droplet_params.mode if droplet_params else None,
        },
    )


def _apply_flips(values: tuple[int, ...], flips) -> tuple[int, ...]:
    out = list(values)
    for pos, value in flips:
        out[pos - 1] = value
    return tuple(out)


def unpack_droplets(solution: Solution, max_depth: int | None = 2) -> Solution:
    """Expand droplets into explicit configurations.

    Each droplet applied to its carrier yields an extra state at
    ``carrier energy + delta_energy``; sub-droplets recurse within their
    parent's context, down to ``max_depth`` levels (None for unlimited).
    The result is re-sorted ascending and deduplicated by assignment.
    """
    entries = []

    def expand(values, energy, log_p, droplet: Droplet, level: int):
        if max_depth is not None and level > max_depth:
            return
        flipped = _apply_flips(values, droplet.flips)
        flipped_energy = energy + droplet.delta_energy
        flipped_log_p = log_p - solution.beta * droplet.delta_energy
        entries.append((flipped_energy, flipped, flipped_log_p,
                        droplet.sub_droplets))
        for sub in droplet.sub_droplets:
            expand(flipped, flipped_energy, flipped_log_p, sub, level + 1)

    for values, energy, log_p, droplets in zip(
            solution.states, solution.energies, solution.log_probabilities,
            solution.droplets):
        entries.append((energy, values, log_p, droplets))
        for droplet in droplets:
            expand(values, energy, log_p, droplet, 1)

    entries.sort(key=lambda item: (item[0], item[1]))
    seen = set()
    states, energies, log_ps, droplets = [], [], [], []
    for energy, values, log_p, ds in entries:
        if values in seen:
            continue
        seen.add(values)
        states.append(values)
        energies.append(energy)
        log_ps.append(log_p)
        droplets.append(tuple(ds))

    return Solution(states, energies, log_ps, droplets,
                    solution.largest_discarded_probability, solution.beta,
                    dict(solution.parameters))


def merge_solutions(solutions: Sequence[Solution]) -> Solution:
    """Combine per-transform runs: sort by energy, deduplicate by state."""
    if not solutions:
        raise DimensionError("nothing to merge")
    entries = []
    for sol in solutions:
        entries.extend(zip(sol.energies, sol.states, sol.log_probabilities,
                           sol.droplets))
    entries.sort(key=lambda item: (item[0], item[1]))
    seen = set()
    states, energies, log_ps, droplets = [], [], [], []
    for energy, values, log_p, ds in entries:
        if values in seen:
            continue
        seen.add(values)
        states.append(values)
        energies.append(energy)
        log_ps.append(log_p)
        droplets.append(ds)
    return Solution(states, energies, log_ps, droplets,
                    max(s.largest_discarded_probability for s in solutions),
                    solutions[0].beta, dict(solutions[0].parameters))
