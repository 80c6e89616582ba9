"""Command-line workflow: generation, solving, exit codes, determinism."""

import json
import re

import pytest

from kingspeps import (ClusterTopology, RunConfig, cluster, exact_spectrum,
                       generate_instance, parse_ising)
from kingspeps.cli import main, run


class TestGenerate:
    def test_deterministic_under_seed(self):
        a = generate_instance(3, 3, 2, seed=42)
        b = generate_instance(3, 3, 2, seed=42)
        assert a == b

    def test_different_seeds_differ(self):
        assert generate_instance(3, 3, 1, seed=1) != \
            generate_instance(3, 3, 1, seed=2)

    def test_spin_count_and_header(self):
        text = generate_instance(3, 3, 2, seed=0)
        graph = parse_ising(text)
        assert graph.n_spins == 18

    def test_clusters_cleanly(self):
        graph = parse_ising(generate_instance(4, 3, 2, seed=5))
        h = cluster(graph, ClusterTopology(4, 3, 2))
        assert (h.rows, h.cols) == (4, 3)

    def test_coupling_range(self):
        graph = parse_ising(generate_instance(3, 3, 1, seed=9, low=-0.5,
                                              high=0.5))
        assert all(-0.5 <= v <= 0.5 for v in graph.couplings.values())

    def test_fields_flag(self):
        graph = parse_ising(generate_instance(2, 2, 1, seed=3,
                                              with_fields=True))
        assert any(graph.fields != 0.0)

    def test_gen_subcommand_writes_file(self, tmp_path):
        out = tmp_path / "inst.txt"
        code = main(["gen", "3", "3", "--spins", "1", "--seed", "7",
                     "-o", str(out)])
        assert code == 0
        assert parse_ising(out.read_text()).n_spins == 9


def _write_instance(tmp_path, rows=3, cols=3, t=1, seed=11):
    path = tmp_path / "instance.txt"
    path.write_text(generate_instance(rows, cols, t, seed=seed))
    return path


class TestSolve:
    def test_end_to_end_matches_oracle(self, tmp_path):
        path = _write_instance(tmp_path, seed=11)
        out = tmp_path / "sol.json"
        code = main(["solve", str(path), "--topology", "3", "3", "1",
                     "--transforms", "r0", "-o", str(out)])
        assert code == 0
        doc = json.loads(out.read_text())
        h = cluster(parse_ising(path.read_text()), ClusterTopology(3, 3, 1))
        assert doc["best_energy"] == pytest.approx(
            exact_spectrum(h).min_energy, rel=1e-9)
        assert doc["energies"] == sorted(doc["energies"])
        assert doc["parameters"]["beta"] == 2.0
        assert doc["parameters"]["bond_dim"] == 16
        assert doc["parameters"]["max_states"] == 256
        assert doc["parameters"]["cut_off_prob"] == 1e-4

    def test_reference_parameter_set_accepted_and_echoed(self, tmp_path):
        path = _write_instance(tmp_path, rows=3, cols=3, t=2, seed=12)
        out = tmp_path / "sol.json"
        code = main(["solve", str(path), "--topology", "3", "3", "2",
                     "--beta", "2", "--bond-dim", "16", "--num-sweeps", "1",
                     "--max-states", "256", "--cut-off-prob", "1e-4",
                     "--energy-cutoff", "10", "--hamming-cutoff", "5",
                     "--transforms", "all", "--check-transforms",
                     "-o", str(out)])
        assert code == 0
        doc = json.loads(out.read_text())
        params = doc["parameters"]
        assert params["energy_cutoff"] == 10.0
        assert params["hamming_cutoff"] == 5
        assert params["droplet_mode"] == "spin"
        assert len(params["transforms"]) == 8
        assert len(params["transform_best_energies"]) == 8

    def test_missing_topology_exits_one(self, tmp_path, capsys):
        path = _write_instance(tmp_path)
        assert main(["solve", str(path)]) == 1
        assert "topology" in capsys.readouterr().err

    def test_topology_with_potts_exits_one(self, tmp_path):
        path = tmp_path / "grid.txt"
        path.write_text("P 1 1\nn 1 1 1 0.0\n")
        assert main(["solve", str(path), "--format", "potts",
                     "--topology", "1", "1", "1"]) == 1

    def test_missing_file_exits_one(self, tmp_path):
        assert main(["solve", str(tmp_path / "nope.txt"),
                     "--topology", "3", "3", "1"]) == 1

    def test_malformed_instance_exits_one(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("1 2\n")
        assert main(["solve", str(path), "--topology", "1", "2", "1"]) == 1

    def test_wrong_topology_exits_one(self, tmp_path):
        path = _write_instance(tmp_path, rows=3, cols=3, t=1)
        assert main(["solve", str(path), "--topology", "2", "2", "1"]) == 1

    def test_unknown_transform_exits_one(self, tmp_path):
        path = _write_instance(tmp_path)
        assert main(["solve", str(path), "--topology", "3", "3", "1",
                     "--transforms", "r45"]) == 1

    def test_usage_error_exits_one(self):
        assert main(["solve"]) == 1

    def test_overflowing_beta_exits_two(self, tmp_path):
        path = tmp_path / "big.txt"
        path.write_text("1 1 -1000.0\n2 2 0.0\n")
        assert main(["solve", str(path), "--topology", "1", "2", "1",
                     "--beta", "5"]) == 2

    def test_deterministic_output_modulo_timestamp(self, tmp_path):
        path = _write_instance(tmp_path, seed=13)
        outs = []
        for name in ("a.json", "b.json"):
            out = tmp_path / name
            assert main(["solve", str(path), "--topology", "3", "3", "1",
                         "--transforms", "r0,r90", "-o", str(out)]) == 0
            outs.append(re.sub(r'"generated_at": "[^"]*"', '', out.read_text()))
        assert outs[0] == outs[1]

    def test_stdout_output(self, tmp_path, capsys):
        path = _write_instance(tmp_path, rows=2, cols=2)
        code = main(["solve", str(path), "--topology", "2", "2", "1",
                     "--transforms", "r0"])
        assert code == 0
        captured = capsys.readouterr()
        doc = json.loads(captured.out)
        assert "best_energy" in doc
        assert "Best energy found" in captured.err

    def test_float32_precision_smoke(self, tmp_path):
        path = _write_instance(tmp_path, seed=14)
        out64 = tmp_path / "s64.json"
        out32 = tmp_path / "s32.json"
        main(["solve", str(path), "--topology", "3", "3", "1",
              "--transforms", "r0", "-o", str(out64)])
        main(["solve", str(path), "--topology", "3", "3", "1",
              "--transforms", "r0", "--precision", "float32",
              "-o", str(out32)])
        e64 = json.loads(out64.read_text())["best_energy"]
        e32 = json.loads(out32.read_text())["best_energy"]
        assert e32 == pytest.approx(e64, rel=1e-5)

    def test_run_config_direct(self, tmp_path):
        path = _write_instance(tmp_path, rows=2, cols=3)
        out = tmp_path / "direct.json"
        config = RunConfig(instance=str(path), topology=(2, 3, 1),
                           transforms=("r0", "r180f"), output=str(out),
                           max_states=64)
        assert run(config) == 0
        doc = json.loads(out.read_text())
        assert doc["parameters"]["transforms"] == ["r0", "r180f"]


class TestPottsFormat:
    def test_native_potts_solve(self, tmp_path):
        lines = ["P 2 2"]
        # a frustrated 3-state plaquette with explicit tables
        for r in range(1, 3):
            for c in range(1, 3):
                for s in range(1, 4):
                    lines.append(f"n {r} {c} {s} {0.25 * s}")
        lines.append("e 1 1 1 2 1 1 -1.0")
        lines.append("e 1 1 2 2 2 3 -2.0")
        lines.append("e 2 1 2 2 3 3 0.5")
        path = tmp_path / "grid.txt"
        path.write_text("\n".join(lines) + "\n")
        out = tmp_path / "sol.json"
        code = main(["solve", str(path), "--format", "potts",
                     "--beta", "1.0", "--transforms", "r0", "-o", str(out)])
        assert code == 0
        doc = json.loads(out.read_text())
        from kingspeps import parse_potts
        spec = exact_spectrum(parse_potts(path.read_text()))
        assert doc["best_energy"] == pytest.approx(spec.min_energy, rel=1e-9)
