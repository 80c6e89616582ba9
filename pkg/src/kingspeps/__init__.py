"""Low-energy configurations of Potts/Ising/QUBO problems on king's graphs.

The workflow: load or build a grid model (clustering an Ising graph if
needed), represent its Boltzmann weights as a 2D tensor network,
contract the network approximately with boundary matrix-product states,
and run a branch-and-bound search over conditional probabilities that
merges equivalent partial configurations and records the localized
excitations the merges absorb.
"""

from . import errors
from .ising import IsingGraph, ising_energy
from .potts import (ClusterTopology, PottsHamiltonian, cluster,
                    cluster_spin_values, decode, encode, king_adjacent,
                    potts_energy)
from .instance_io import (parse_ising, parse_potts, serialize_ising,
                          solution_to_dict, write_solution)
from .tensor_core import (BoundaryMps, ContractionParams, RowMpo, apply_mpo,
                          compress, left_canonicalize, overlap, svd_truncate)
from .peps import (ALL_TRANSFORMS, EnvironmentCache, LatticeTransform,
                   PepsNetwork, apply_transform, bottom_env, build_network,
                   conditional_distribution, contract_network, first_row_mps,
                   row_transfer_mpo)
from .search import (Droplet, DropletParams, PartialConfig, SearchParams,
                     Solution, boundary_sites, branch, low_energy_spectrum,
                     merge_and_collect, merge_solutions, prune,
                     unpack_droplets)
from .oracle import (ExactSpectrum, config_energies, exact_conditional,
                     exact_spectrum)
from .cli import RunConfig, generate_instance

__version__ = "0.1.0"

__all__ = [
    "ALL_TRANSFORMS", "BoundaryMps", "ClusterTopology", "ContractionParams",
    "Droplet", "DropletParams", "EnvironmentCache", "ExactSpectrum",
    "IsingGraph", "LatticeTransform", "PartialConfig", "PepsNetwork",
    "PottsHamiltonian", "RowMpo", "RunConfig", "SearchParams", "Solution",
    "apply_mpo", "apply_transform", "bottom_env", "boundary_sites", "branch",
    "build_network", "cluster", "cluster_spin_values", "compress",
    "conditional_distribution", "config_energies", "contract_network",
    "decode", "encode", "errors", "exact_conditional", "exact_spectrum",
    "first_row_mps", "generate_instance", "ising_energy", "king_adjacent",
    "left_canonicalize", "low_energy_spectrum", "merge_and_collect",
    "merge_solutions", "overlap", "parse_ising", "parse_potts",
    "potts_energy", "prune", "row_transfer_mpo", "serialize_ising",
    "solution_to_dict", "svd_truncate", "unpack_droplets", "write_solution",
]
