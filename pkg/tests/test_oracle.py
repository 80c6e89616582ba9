"""Enumeration reference: spectra, partition functions, conditionals."""

import math

import numpy as np
import pytest

from kingspeps import (ALL_TRANSFORMS, IsingGraph, PottsHamiltonian,
                       ClusterTopology, cluster, config_energies,
                       exact_conditional, exact_spectrum, potts_energy)
from kingspeps.errors import DimensionError, TooLargeError
from conftest import random_potts


def test_single_site_spectrum():
    h = PottsHamiltonian(1, 1)
    h.set_node((1, 1), [0.0, 3.0])
    spec = exact_spectrum(h)
    assert list(spec.energies) == [0.0, 3.0]
    assert list(spec.states[0]) == [1]
    assert list(spec.states[1]) == [2]


def test_zero_model_all_degenerate():
    h = PottsHamiltonian(2, 2)
    for site in h.sites():
        h.set_node(site, [0.0, 0.0])
    spec = exact_spectrum(h)
    assert len(spec) == 16
    assert np.all(spec.energies == 0.0)


def test_ferromagnetic_pair_ground_degeneracy():
    g = IsingGraph(2, {(1, 2): -1.0})
    h = cluster(g, ClusterTopology(1, 2, 1))
    spec = exact_spectrum(h)
    assert spec.min_energy == pytest.approx(-1.0)
    assert spec.energies[1] == pytest.approx(-1.0)
    assert spec.energies[2] == pytest.approx(1.0)


def test_energies_consistent_with_potts_energy():
    h = random_potts(2, 3, 2, seed=9)
    spec = exact_spectrum(h)
    for state, energy in zip(spec.states[:10], spec.energies[:10]):
        assert potts_energy(h, tuple(state)) == pytest.approx(energy, rel=1e-12)


def test_limit():
    h = random_potts(2, 2, 2, seed=1)
    full = exact_spectrum(h)
    limited = exact_spectrum(h, limit=3)
    assert len(limited) == 3
    assert np.allclose(limited.energies, full.energies[:3])
    assert limited.log_partition(1.0) == pytest.approx(full.log_partition(1.0))


def test_guard():
    h = PottsHamiltonian(5, 6)
    for site in h.sites():
        h.set_node(site, np.zeros(4))
    with pytest.raises(TooLargeError):
        exact_spectrum(h)


def test_spectrum_invariant_under_transforms():
    h = random_potts(2, 3, 2, seed=17)
    reference = exact_spectrum(h).energies
    dims = (h.rows, h.cols)
    for tr in ALL_TRANSFORMS:
        moved = PottsHamiltonian(*tr.transformed_dims(dims))
        for site in h.sites():
            moved.set_node(tr.apply(site, dims), h.node_table(site))
        for (a, b), table in h.edge_tables():
            moved.set_edge(tr.apply(a, dims), tr.apply(b, dims), table)
        energies = exact_spectrum(moved).energies
        assert np.allclose(np.sort(energies), np.sort(reference), atol=1e-12)


class TestExactConditional:
    def test_zero_model_uniform(self):
        h = PottsHamiltonian(1, 2)
        for site in h.sites():
            h.set_node(site, [0.0, 0.0])
        p = exact_conditional(h, 1.0, ())
        assert np.allclose(p, [0.5, 0.5])

    def test_beta_to_zero_uniform(self):
        h = random_potts(2, 2, 3, seed=23)
        p = exact_conditional(h, 1e-12, (2, 1))
        assert np.allclose(p, [1 / 3] * 3, atol=1e-12)

    def test_ferromagnetic_chain_frozen_value(self):
        g = IsingGraph(2, {(1, 2): -1.0})
        h = cluster(g, ClusterTopology(1, 2, 1))
        p = exact_conditional(h, 1.0, (1,), k=2)
        expected = math.e / (math.e + 1 / math.e)
        assert p[0] == pytest.approx(expected, abs=1e-12)
        assert p[0] == pytest.approx(0.8807970779778823, abs=1e-10)

    def test_k_mismatch(self):
        h = random_potts(1, 2, 2, seed=2)
        with pytest.raises(DimensionError):
            exact_conditional(h, 1.0, (1,), k=3)

    def test_sums_to_one(self):
        h = random_potts(2, 3, 2, seed=31)
        for k_minus_1 in range(6):
            partial = tuple(1 + (i % 2) for i in range(k_minus_1))
            p = exact_conditional(h, 0.7, partial)
            assert p.sum() == pytest.approx(1.0, abs=1e-12)


def test_config_energies_matches_scalar():
    h = random_potts(2, 2, 3, seed=4)
    rng = np.random.default_rng(0)
    configs = rng.integers(1, 4, size=(20, 4))
    energies = config_energies(h, configs)
    for row, energy in zip(configs, energies):
        assert potts_energy(h, tuple(int(v) for v in row)) == pytest.approx(
            energy, rel=1e-12)
