"""Exhaustive-enumeration reference for small instances.

Everything here is brute force on purpose: exact spectra, partition
functions, and conditional distributions computed by summation over all
completions. Guarded at 2^24 configurations.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, TooLargeError
from .potts import PottsHamiltonian

ENUMERATION_GUARD = 2 ** 24


def config_energies(h: PottsHamiltonian, configs: np.ndarray) -> np.ndarray:
    """Energies of many assignments at once.

    Args:
        h: the model.
        configs: integer array (n_configs, n_sites) of 1-based states in
            row-major site order.
    """
    configs = np.asarray(configs)
    sites = list(h.sites())
    if configs.ndim != 2 or configs.shape[1] != len(sites):
        raise DimensionError(
            f"configs must be (n, {len(sites)}), got {configs.shape}")
    index_of = {site: i for i, site in enumerate(sites)}
    energies = np.zeros(configs.shape[0], dtype=np.float64)
    for i, site in enumerate(sites):
        table = h.node_table(site)
        energies += table[configs[:, i] - 1]
    for (a, b), table in h.edge_tables():
        energies += table[configs[:, index_of[a]] - 1,
                          configs[:, index_of[b]] - 1]
    return energies


def _enumerate_configs(dims: list[int]) -> np.ndarray:
    total = 1
    for d in dims:
        total *= d
    if total > ENUMERATION_GUARD:
        raise TooLargeError(
            f"{total} configurations exceed the enumeration guard "
            f"({ENUMERATION_GUARD})")
    grids = np.unravel_index(np.arange(total), dims)
    return (np.stack(grids, axis=1) + 1).astype(np.int64)


def _log_sum_exp(values: np.ndarray) -> float:
    peak = float(np.max(values))
    return peak + float(np.log(np.sum(np.exp(values - peak))))


class ExactSpectrum:
    """Complete enumeration of a model, sorted ascending by energy.

    Ties are broken lexicographically by assignment, so the ordering is
    reproducible. The partition function is available on demand.
    """

    def __init__(self, h: PottsHamiltonian, limit: int | None = None):
        dims = [h.dim(site) for site in h.sites()]
        configs = _enumerate_configs(dims)
        energies = config_energies(h, configs)
        # energy primary, assignment columns as tie breakers
        keys = tuple(configs[:, i] for i in range(configs.shape[1] - 1, -1, -1))
        order = np.lexsort(keys + (energies,))
        self._states = configs[order]
        self._energies = energies[order]
        self.limit = limit

    @property
    def states(self) -> np.ndarray:
        if self.limit is None:
            return self._states
        return self._states[:self.limit]

    @property
    def energies(self) -> np.ndarray:
        if self.limit is None:
            return self._energies
        return self._energies[:self.limit]

    @property
    def min_energy(self) -> float:
        return float(self._energies[0])

    def __len__(self):
        return len(self.states)

    def log_partition(self, beta: float) -> float:
        return _log_sum_exp(-beta * self._energies)

    def partition(self, beta: float) -> float:
        return float(np.exp(self.log_partition(beta)))


def exact_spectrum(h: PottsHamiltonian, limit: int | None = None) -> ExactSpectrum:
    """Enumerate all assignments of a small model.

    Raises:
        TooLargeError: the state space exceeds 2^24.
    """
    return ExactSpectrum(h, limit=limit)


def exact_conditional(h: PottsHamiltonian, beta: float, partial,
                      k: int | None = None) -> np.ndarray:
    """Exact Boltzmann conditional of site ``k`` given its row-major
    predecessors, by summation over all completions."""
    partial = tuple(int(v) for v in partial)
    sites = list(h.sites())
    if k is None:
        k = len(partial) + 1
    elif k != len(partial) + 1:
        raise DimensionError(
            f"partial has {len(partial)} values but k={k}; expected k={len(partial) + 1}")
    if not 1 <= k <= len(sites):
        raise DimensionError(f"site position {k} outside 1..{len(sites)}")

    free_dims = [h.dim(site) for site in sites[k - 1:]]
    completions = _enumerate_configs(free_dims)
    prefix = np.tile(np.asarray(partial, dtype=np.int64), (completions.shape[0], 1))
    configs = np.concatenate([prefix, completions], axis=1)
    log_weights = -beta * config_energies(h, configs)

    d = h.dim(sites[k - 1])
    log_mass = np.empty(d)
    for state in range(1, d + 1):
        mask = completions[:, 0] == state
        log_mass[state - 1] = (_log_sum_exp(log_weights[mask])
                               if mask.any() else -np.inf)
    total = _log_sum_exp(log_mass)
    return np.exp(log_mass - total)
