"""Parsers and JSON output."""

import io
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kingspeps import (IsingGraph, parse_ising, parse_potts, serialize_ising,
                       solution_to_dict, write_solution)
from kingspeps.errors import (DuplicateEntryError, GeometryError,
                              InvalidIndexError, ParseError)
from kingspeps.search import Droplet, Solution


class TestParseIsing:
    def test_couplings_and_fields(self):
        g = parse_ising("1 2 -1.0\n2 2 0.5")
        assert g.couplings == {(1, 2): -1.0}
        assert g.fields[1] == 0.5
        assert g.fields[0] == 0.0
        assert g.n_spins == 2

    def test_comments_and_blanks_only(self):
        g = parse_ising("# comment\n\n")
        assert g.n_spins == 0
        assert g.couplings == {}

    def test_c_prefixed_comment(self):
        g = parse_ising("c Gset style header\n1 2 1.0")
        assert g.couplings == {(1, 2): 1.0}

    def test_duplicate_edge_either_order(self):
        with pytest.raises(DuplicateEntryError):
            parse_ising("1 2 1.0\n2 1 2.0")

    def test_duplicate_field(self):
        with pytest.raises(DuplicateEntryError):
            parse_ising("3 3 1.0\n3 3 1.0")

    def test_malformed_line_reports_line_number(self):
        with pytest.raises(ParseError) as err:
            parse_ising("1 2 1.0\n1 2\n")
        assert err.value.line == 2

    def test_non_numeric(self):
        with pytest.raises(ParseError):
            parse_ising("1 2 spam")

    def test_non_integer_index(self):
        with pytest.raises(ParseError):
            parse_ising("1.5 2 1.0")

    def test_nonpositive_index(self):
        with pytest.raises(InvalidIndexError):
            parse_ising("0 2 1.0")

    def test_accepts_file_like(self):
        g = parse_ising(io.StringIO("1 2 0.25"))
        assert g.couplings == {(1, 2): 0.25}

    def test_whitespace_tolerant(self):
        g = parse_ising("  1\t2   -3.5  ")
        assert g.couplings == {(1, 2): -3.5}

    def test_order_insensitive(self):
        lines = ["1 2 -1.0", "2 3 0.5", "1 1 0.25", "3 3 -2.0"]
        a = parse_ising("\n".join(lines))
        b = parse_ising("\n".join(reversed(lines)))
        assert a == b


coupling_values = st.floats(min_value=-10, max_value=10, allow_nan=False,
                            allow_infinity=False)


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=1, max_value=8), st.data())
def test_round_trip_exact(n_spins, data):
    pairs = [(i, j) for i in range(1, n_spins + 1)
             for j in range(i + 1, n_spins + 1)]
    chosen = data.draw(st.lists(st.sampled_from(pairs), unique=True,
                                max_size=len(pairs))) if pairs else []
    couplings = {pair: data.draw(coupling_values) for pair in chosen}
    fields = [data.draw(coupling_values) for _ in range(n_spins)]
    g = IsingGraph(n_spins, couplings, fields)
    assert parse_ising(serialize_ising(g)) == g


def test_round_trip_bit_identical_couplings():
    g = IsingGraph(3, {(1, 3): 0.1 + 0.2, (2, 3): -1e-17}, {2: 1 / 3})
    g2 = parse_ising(serialize_ising(g))
    assert g2.couplings[(1, 3)] == g.couplings[(1, 3)]
    assert g2.couplings[(2, 3)] == g.couplings[(2, 3)]
    assert g2.fields[1] == g.fields[1]


def test_round_trip_trailing_isolated_spin():
    g = IsingGraph(5, {(1, 2): 1.0})
    assert parse_ising(serialize_ising(g)).n_spins == 5


class TestParsePotts:
    def test_single_variable(self):
        h = parse_potts("P 1 1\nn 1 1 1 0.0\nn 1 1 2 3.0")
        assert h.dim((1, 1)) == 2
        assert np.array_equal(h.node_table((1, 1)), [0.0, 3.0])

    def test_diagonal_edge_accepted(self):
        h = parse_potts("P 2 2\ne 1 1 2 2 1 1 -1.0")
        table = h.edge_table((1, 1), (2, 2))
        assert table[0, 0] == -1.0

    def test_non_adjacent_edge_rejected(self):
        with pytest.raises(GeometryError):
            parse_potts("P 2 3\ne 1 1 1 3 1 1 -1.0")

    def test_self_edge_rejected(self):
        with pytest.raises(GeometryError):
            parse_potts("P 2 2\ne 1 1 1 1 1 1 -1.0")

    def test_out_of_grid(self):
        with pytest.raises(InvalidIndexError):
            parse_potts("P 2 2\nn 3 1 1 0.0")

    def test_missing_header(self):
        with pytest.raises(ParseError):
            parse_potts("n 1 1 1 0.0")

    def test_duplicate_entry(self):
        with pytest.raises(DuplicateEntryError):
            parse_potts("P 1 1\nn 1 1 1 0.0\nn 1 1 1 1.0")

    def test_duplicate_edge_entry_either_orientation(self):
        with pytest.raises(DuplicateEntryError):
            parse_potts("P 1 2\ne 1 1 1 2 1 2 0.5\ne 1 2 1 1 2 1 0.25")

    def test_dims_grow_with_edge_records(self):
        h = parse_potts("P 1 2\ne 1 1 1 2 3 2 0.5")
        assert h.dim((1, 1)) == 3
        assert h.dim((1, 2)) == 2

    def test_all_edges_king_adjacent(self):
        h = parse_potts("P 2 2\ne 1 1 2 2 1 1 1.0\ne 1 2 2 1 1 1 1.0\n"
                        "e 1 1 1 2 1 1 1.0\ne 2 1 2 2 1 1 1.0")
        from kingspeps import king_adjacent
        for (a, b), _ in h.edge_tables():
            assert king_adjacent(a, b)


def _tiny_solution(droplets):
    return Solution(states=[(1, 1), (2, 1)], energies=[-1.0, 0.5],
                    log_probabilities=[-0.1, -2.0], droplets=droplets,
                    largest_discarded_probability=0.0, beta=1.0,
                    parameters={"beta": 1.0})


class TestWriteSolution:
    def test_empty_droplets(self):
        doc = solution_to_dict(_tiny_solution([(), ()]))
        assert doc["droplets"] == [[], []]
        assert doc["best_energy"] == -1.0
        assert doc["energies"] == [-1.0, 0.5]

    def test_energies_ascending(self):
        doc = solution_to_dict(_tiny_solution([(), ()]))
        assert doc["energies"] == sorted(doc["energies"])

    def test_droplet_structure(self):
        d = Droplet(flips=((3, 2),), delta_energy=0.5,
                    sub_droplets=(Droplet(flips=((1, 2),), delta_energy=0.25),))
        doc = solution_to_dict(_tiny_solution([(d,), ()]))
        entry = doc["droplets"][0][0]
        assert entry["delta_energy"] == 0.5
        assert entry["flips"] == {"3": 2}
        assert entry["sub_droplets"][0]["flips"] == {"1": 2}

    def test_write_to_stream_and_path(self, tmp_path):
        sol = _tiny_solution([(), ()])
        buf = io.StringIO()
        write_solution(sol, buf)
        parsed = json.loads(buf.getvalue())
        assert parsed["states"] == [[1, 1], [2, 1]]
        path = tmp_path / "out.json"
        write_solution(sol, str(path))
        assert json.loads(path.read_text())["best_energy"] == -1.0
        assert "generated_at" in parsed
