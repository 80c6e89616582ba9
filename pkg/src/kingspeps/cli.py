"""Command-line entry point.

Two subcommands: ``solve`` ingests an instance, clusters it if needed,
runs the search per requested transform (fresh environment cache each),
merges the per-transform solutions, and writes the JSON document;
``gen`` produces random king's-graph test instances in the Ising triple
format, deterministic under a seed.

Exit codes: 0 success, 1 parse/validation problems, 2 numerical or
contraction failures. Progress goes to stderr so stdout stays
machine-readable.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import NumericError, SolverError
from .instance_io import parse_ising, parse_potts, write_solution
from .peps import ALL_TRANSFORMS, LatticeTransform
from .potts import ClusterTopology, cluster
from .search import (DropletParams, SearchParams, low_energy_spectrum,
                     merge_solutions)
from .tensor_core import ContractionParams

logger = logging.getLogger("kingspeps")

_TRANSFORM_BY_NAME = {t.name: t for t in ALL_TRANSFORMS}


class UsageError(Exception):
    """Bad command line or inconsistent options."""


@dataclass
class RunConfig:
    """Everything one solve run needs."""

    instance: str
    format: str = "ising"
    topology: tuple[int, int, int] | None = None
    beta: float = 2.0
    bond_dim: int = 16
    num_sweeps: int = 1
    max_states: int = 256
    cut_off_prob: float = 1e-4
    energy_cutoff: float = 10.0
    hamming_cutoff: int = 5
    droplet_mode: str = "auto"
    transforms: tuple[str, ...] = ("all",)
    output: str | None = None
    precision: str = "float64"
    seed: int | None = None
    check_transforms: bool = False
    extra: dict = field(default_factory=dict)


def _resolve_transforms(names) -> list[LatticeTransform]:
    flattened = []
    for name in names:
        flattened.extend(part.strip() for part in name.split(",") if part.strip())
    if not flattened or "all" in flattened:
        return list(ALL_TRANSFORMS)
    out = []
    for name in flattened:
        if name not in _TRANSFORM_BY_NAME:
            raise UsageError(
                f"unknown transform {name!r}; choose from "
                f"{', '.join(_TRANSFORM_BY_NAME)} or 'all'")
        out.append(_TRANSFORM_BY_NAME[name])
    return out


def run(config: RunConfig) -> int:
    """Execute one solve; returns the process exit code."""
    try:
        if config.format not in ("ising", "potts"):
            raise UsageError(f"unknown format {config.format!r}")
        if config.format == "ising" and config.topology is None:
            raise UsageError("--topology M N T is required for Ising instances")
        if config.format == "potts" and config.topology is not None:
            raise UsageError("--topology only applies to Ising instances")
        if config.precision not in ("float32", "float64"):
            raise UsageError(f"unknown precision {config.precision!r}")
        dtype = np.float32 if config.precision == "float32" else np.float64

        text = Path(config.instance).read_text(encoding="utf-8")
        if config.format == "ising":
            graph = parse_ising(text)
            topo = ClusterTopology(*config.topology)
            hamiltonian = cluster(graph, topo)
            default_mode = "spin"
        else:
            hamiltonian = parse_potts(text)
            default_mode = "potts"
        mode = config.droplet_mode if config.droplet_mode != "auto" else default_mode

        params = ContractionParams(bond_dim=config.bond_dim,
                                   num_sweeps=config.num_sweeps,
                                   beta=config.beta)
        search_params = SearchParams(max_states=config.max_states,
                                     cut_off_prob=config.cut_off_prob)
        droplet_params = DropletParams(energy_cutoff=config.energy_cutoff,
                                       hamming_cutoff=config.hamming_cutoff,
                                       mode=mode)

        transforms = _resolve_transforms(config.transforms)
        solutions = []
        best_per_transform = {}
        for transform in transforms:
            sol = low_energy_spectrum(hamiltonian, transform, params,
                                      search_params, droplet_params,
                                      dtype=dtype)
            best_per_transform[transform.name] = sol.best_energy
            logger.info("transform %-6s best energy % .12g",
                        transform.name, sol.best_energy)
            solutions.append(sol)

        if config.check_transforms:
            energies = list(best_per_transform.values())
            spread = max(energies) - min(energies)
            scale = max(1.0, max(abs(e) for e in energies))
            if spread > 1e-6 * scale:
                print(f"transform disagreement: best energies {energies} "
                      f"spread {spread:g}", file=sys.stderr)
                return 2

        merged = merge_solutions(solutions)
        merged.parameters = {
            "format": config.format,
            "topology": list(config.topology) if config.topology else None,
            "beta": config.beta,
            "bond_dim": config.bond_dim,
            "num_sweeps": config.num_sweeps,
            "max_states": config.max_states,
            "cut_off_prob": config.cut_off_prob,
            "energy_cutoff": config.energy_cutoff,
            "hamming_cutoff": config.hamming_cutoff,
            "droplet_mode": mode,
            "transforms": [t.name for t in transforms],
            "transform_best_energies": best_per_transform,
            "precision": config.precision,
        }

        if config.output:
            write_solution(merged, config.output)
            print(f"Best energy found: {merged.best_energy!r}")
        else:
            write_solution(merged, sys.stdout)
            print(f"Best energy found: {merged.best_energy!r}", file=sys.stderr)
        return 0
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (SolverError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def generate_instance(rows: int, cols: int, spins_per_cluster: int,
                      seed: int | None = None, low: float = -1.0,
                      high: float = 1.0, with_fields: bool = False) -> str:
    """Random king's-graph instance in the Ising triple format.

    Couplings are drawn uniformly from [low, high] for every
    intra-cluster spin pair and every spin pair between king-adjacent
    clusters, in a fixed traversal order, so output is byte-identical
    for a given seed.
    """
    rng = np.random.default_rng(seed)
    t = spins_per_cluster

    def spins_of(k):
        return range(k * t + 1, (k + 1) * t + 1)

    rows_out = []
    n_clusters = rows * cols
    for k in range(n_clusters):
        members = list(spins_of(k))
        for a in range(t):
            for b in range(a + 1, t):
                value = rng.uniform(low, high)
                rows_out.append(f"{members[a]} {members[b]} {value!r}")
    for k in range(n_clusters):
        r, c = k // cols, k % cols
        for dr, dc in ((0, 1), (1, -1), (1, 0), (1, 1)):
            rr, cc = r + dr, c + dc
            if not (0 <= rr < rows and 0 <= cc < cols):
                continue
            other = rr * cols + cc
            for i in spins_of(k):
                for j in spins_of(other):
                    value = rng.uniform(low, high)
                    a, b = (i, j) if i < j else (j, i)
                    rows_out.append(f"{a} {b} {value!r}")
    if with_fields:
        for i in range(1, n_clusters * t + 1):
            value = rng.uniform(low, high)
            rows_out.append(f"{i} {i} {value!r}")
    return "\n".join(rows_out) + "\n"


def gen(args) -> int:
    text = generate_instance(args.rows, args.cols, args.spins, seed=args.seed,
                             low=args.low, high=args.high,
                             with_fields=args.fields)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on usage problems; the contract here is 1
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="kingspeps",
                     description="Low-energy configurations of Potts/Ising "
                                 "problems on king's graphs")
    verbosity = argparse.ArgumentParser(add_help=False)
    verbosity.add_argument("-v", "--verbose", action="count", default=0,
                           help="progress on stderr (-vv for debug)")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="progress on stderr (-vv for debug)")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="solve an instance",
                           parents=[verbosity])
    solve.add_argument("instance", help="path to the instance file")
    solve.add_argument("--format", choices=("ising", "potts"), default="ising")
    solve.add_argument("--topology", nargs=3, type=int, metavar=("M", "N", "T"),
                       help="cluster grid for Ising instances")
    solve.add_argument("--beta", type=float, default=2.0,
                       help="inverse temperature (default 2)")
    solve.add_argument("--bond-dim", type=int, default=16)
    solve.add_argument("--num-sweeps", type=int, default=1)
    solve.add_argument("--max-states", type=int, default=256)
    solve.add_argument("--cut-off-prob", type=float, default=1e-4)
    solve.add_argument("--energy-cutoff", type=float, default=10.0)
    solve.add_argument("--hamming-cutoff", type=int, default=5)
    solve.add_argument("--droplet-mode", choices=("auto", "spin", "potts"),
                       default="auto")
    solve.add_argument("--transforms", default="all",
                       help="comma-separated subset of "
                            f"{','.join(_TRANSFORM_BY_NAME)} or 'all'")
    solve.add_argument("--check-transforms", action="store_true",
                       help="fail when per-transform best energies disagree")
    solve.add_argument("--precision", choices=("float32", "float64"),
                       default="float64")
    solve.add_argument("-o", "--output", help="JSON output path (default stdout)")

    genp = sub.add_parser("gen", help="generate a random test instance",
                          parents=[verbosity])
    genp.add_argument("rows", type=int)
    genp.add_argument("cols", type=int)
    genp.add_argument("--spins", type=int, default=1,
                      help="spins per cluster (default 1)")
    genp.add_argument("--seed", type=int, default=None)
    genp.add_argument("--low", type=float, default=-1.0)
    genp.add_argument("--high", type=float, default=1.0)
    genp.add_argument("--fields", action="store_true",
                      help="also draw local fields")
    genp.add_argument("-o", "--output")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(parser.format_usage().rstrip(), file=sys.stderr)
        return 1

    if args.verbose:
        logging.basicConfig(
            stream=sys.stderr,
            level=logging.DEBUG if args.verbose > 1 else logging.INFO,
            format="%(levelname)s %(name)s: %(message)s")

    if args.command == "gen":
        return gen(args)

    config = RunConfig(
        instance=args.instance,
        format=args.format,
        topology=tuple(args.topology) if args.topology else None,
        beta=args.beta,
        bond_dim=args.bond_dim,
        num_sweeps=args.num_sweeps,
        max_states=args.max_states,
        cut_off_prob=args.cut_off_prob,
        energy_cutoff=args.energy_cutoff,
        hamming_cutoff=args.hamming_cutoff,
        droplet_mode=args.droplet_mode,
        transforms=(args.transforms,),
        output=args.output,
        precision=args.precision,
        check_transforms=args.check_transforms,
    )
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
