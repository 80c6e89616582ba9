"""Text-format parsers and JSON solution output.

Two input formats are supported:

* Ising triples: one ``i j v`` row per entry, where ``v`` is the
  coupling between spins ``i`` and ``j``, or the local field when
  ``i == j``. Spins are numbered from 1; the spin count is the largest
  index seen. Blank lines and lines starting with ``#`` or ``c`` are
  ignored. Duplicate entries (in either order) are an error rather than
  being summed, so accidental repetitions in an instance file surface
  immediately.

* Grid Potts: a header ``P m n`` followed by node records
  ``n r c s e`` (energy ``e`` for state ``s`` at site ``(r, c)``) and
  edge records ``e r1 c1 r2 c2 s1 s2 e``. Sites are 1-based, edge
  records must connect king-adjacent sites, and a site's dimension is
  the largest state index referenced there. Unspecified entries are 0.
"""

from __future__ import annotations

import json
from datetime import datetime, timezone
from typing import IO

from .errors import (DuplicateEntryError, GeometryError, InvalidIndexError,
                     ParseError)
from .ising import IsingGraph
from .potts import PottsHamiltonian, king_adjacent

import numpy as np


def _lines(text) -> list[str]:
    if hasattr(text, "read"):
        text = text.read()
    return text.splitlines()


def _is_comment(stripped: str) -> bool:
    return not stripped or stripped.startswith("#") or stripped.startswith("c")


def parse_ising(text) -> IsingGraph:
    """Parse Ising triples from a string or file-like object.

    Returns:
        An :class:`IsingGraph` with J from rows with distinct indices,
        h from rows with equal indices, unmentioned fields zero.

    Raises:
        ParseError: a line is not blank, comment, or an ``i j v`` triple.
        DuplicateEntryError: the same edge or field appears twice.
        InvalidIndexError: a spin index is zero or negative.
    """
    couplings: dict[tuple[int, int], float] = {}
    fields: dict[int, float] = {}
    n_spins = 0
    for lineno, raw in enumerate(_lines(text), start=1):
        stripped = raw.strip()
        if _is_comment(stripped):
            continue
        tokens = stripped.split()
        if len(tokens) != 3:
            raise ParseError(f"expected 'i j v', got {stripped!r}", line=lineno)
        try:
            i, j = int(tokens[0]), int(tokens[1])
            value = float(tokens[2])
        except ValueError:
            raise ParseError(f"non-numeric entry in {stripped!r}", line=lineno)
        if i <= 0 or j <= 0:
            raise InvalidIndexError(
                f"line {lineno}: spin indices are 1-based, got ({i}, {j})")
        if i == j:
            if i in fields:
                raise DuplicateEntryError(f"field for spin {i} given twice",
                                          line=lineno)
            fields[i] = value
        else:
            key = (i, j) if i < j else (j, i)
            if key in couplings:
                raise DuplicateEntryError(
                    f"coupling ({key[0]}, {key[1]}) given twice", line=lineno)
            couplings[key] = value
        n_spins = max(n_spins, i, j)
    return IsingGraph(n_spins, couplings, fields)


def serialize_ising(graph: IsingGraph) -> str:
    """Inverse of :func:`parse_ising`; parsing the output reproduces the graph.

    Couplings come first in sorted order, then nonzero fields. When the
    largest spin index would otherwise go unmentioned, its (possibly
    zero) field row is emitted to anchor the spin count.
    """
    rows = []
    mentioned = 0
    for (i, j), value in graph.edges():
        rows.append(f"{i} {j} {float(value)!r}")
        mentioned = max(mentioned, j)
    for i in range(1, graph.n_spins + 1):
        h = float(graph.fields[i - 1])
        if h != 0.0:
            rows.append(f"{i} {i} {h!r}")
            mentioned = max(mentioned, i)
    if graph.n_spins > 0 and mentioned < graph.n_spins:
        n = graph.n_spins
        rows.append(f"{n} {n} {float(graph.fields[n - 1])!r}")
    return "\n".join(rows) + ("\n" if rows else "")


def parse_potts(text) -> PottsHamiltonian:
    """Parse the grid Potts format described in the module docstring.

    Raises:
        ParseError: missing/odd header or malformed record.
        GeometryError: an edge record connects non-king-adjacent sites.
        InvalidIndexError: coordinates outside the declared grid, or a
            non-positive state index.
        DuplicateEntryError: the same table entry is set twice.
    """
    header = None
    node_entries: dict[tuple[tuple[int, int], int], float] = {}
    edge_entries: dict[tuple, float] = {}
    dims: dict[tuple[int, int], int] = {}

    def bump(site, state, lineno):
        if state <= 0:
            raise InvalidIndexError(
                f"line {lineno}: state indices are 1-based, got {state}")
        dims[site] = max(dims.get(site, 1), state)

    def check_site(site, lineno):
        r, c = site
        if not (1 <= r <= header[0] and 1 <= c <= header[1]):
            raise InvalidIndexError(
                f"line {lineno}: site {site} outside {header[0]}x{header[1]} grid")

    for lineno, raw in enumerate(_lines(text), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tokens = stripped.split()
        if header is None:
            if tokens[0] != "P" or len(tokens) != 3:
                raise ParseError(f"expected header 'P m n', got {stripped!r}",
                                 line=lineno)
            try:
                header = (int(tokens[1]), int(tokens[2]))
            except ValueError:
                raise ParseError(f"non-integer grid size in {stripped!r}",
                                 line=lineno)
            if header[0] < 1 or header[1] < 1:
                raise ParseError(f"grid size must be positive, got {header}",
                                 line=lineno)
            continue
        tag = tokens[0]
        try:
            if tag == "n" and len(tokens) == 5:
                site = (int(tokens[1]), int(tokens[2]))
                state = int(tokens[3])
                value = float(tokens[4])
                check_site(site, lineno)
                bump(site, state, lineno)
                key = (site, state)
                if key in node_entries:
                    raise DuplicateEntryError(
                        f"node entry {site} state {state} given twice", line=lineno)
                node_entries[key] = value
            elif tag == "e" and len(tokens) == 8:
                a = (int(tokens[1]), int(tokens[2]))
                b = (int(tokens[3]), int(tokens[4]))
                sa, sb = int(tokens[5]), int(tokens[6])
                value = float(tokens[7])
                check_site(a, lineno)
                check_site(b, lineno)
                if a == b or not king_adjacent(a, b):
                    raise GeometryError(
                        f"line {lineno}: sites {a} and {b} are not king-adjacent")
                bump(a, sa, lineno)
                bump(b, sb, lineno)
                if b < a:
                    a, b, sa, sb = b, a, sb, sa
                key = (a, b, sa, sb)
                if key in edge_entries:
                    raise DuplicateEntryError(
                        f"edge entry {a}-{b} states ({sa}, {sb}) given twice",
                        line=lineno)
                edge_entries[key] = value
            else:
                raise ParseError(f"unrecognized record {stripped!r}", line=lineno)
        except ValueError:
            raise ParseError(f"non-numeric entry in {stripped!r}", line=lineno)

    if header is None:
        raise ParseError("missing 'P m n' header")

    h = PottsHamiltonian(*header)
    node_tables: dict[tuple[int, int], np.ndarray] = {}
    for (site, state), value in node_entries.items():
        table = node_tables.setdefault(site, np.zeros(dims[site]))
        table[state - 1] = value
    for site, d in dims.items():
        table = node_tables.get(site)
        if table is None:
            table = np.zeros(d)
        h.set_node(site, table)
    edge_tables: dict[tuple, np.ndarray] = {}
    for (a, b, sa, sb), value in edge_entries.items():
        table = edge_tables.setdefault((a, b), np.zeros((dims[a], dims[b])))
        table[sa - 1, sb - 1] = value
    for (a, b), table in edge_tables.items():
        h.set_edge(a, b, table)
    return h


def _droplet_dict(droplet) -> dict:
    return {
        "delta_energy": droplet.delta_energy,
        "flips": {str(pos): int(value) for pos, value in droplet.flips},
        "sub_droplets": [_droplet_dict(s) for s in droplet.sub_droplets],
    }


def solution_to_dict(solution) -> dict:
    """JSON-ready representation of a finalized solution."""
    return {
        "best_energy": solution.energies[0] if solution.energies else None,
        "states": [list(map(int, state)) for state in solution.states],
        "energies": list(map(float, solution.energies)),
        "log_probabilities": list(map(float, solution.log_probabilities)),
        "droplets": [[_droplet_dict(d) for d in per_state]
                     for per_state in solution.droplets],
        "largest_discarded_probability": float(
            solution.largest_discarded_probability),
        "parameters": solution.parameters,
        "generated_at": datetime.now(timezone.utc).isoformat(),
    }


def write_solution(solution, dest: str | IO[str]) -> None:
    """Write a solution as a JSON document to a path or open text sink.

    States are arrays of 1-based values in grid row-major order; droplet
    flips map 1-based row-major positions to alternative values. Sink
    failures propagate to the caller.
    """
    doc = solution_to_dict(solution)
    if hasattr(dest, "write"):
        json.dump(doc, dest, indent=2)
        dest.write("\n")
    else:
        with open(dest, "w", encoding="utf-8") as handle:
            json.dump(doc, handle, indent=2)
            handle.write("\n")
