import json
import os

import numpy as np
import pytest

from repkit.cli import main, write_csv
from repkit.measure import DiscreteMeasure, moments_of, trigonometric_system


def run_cli(*argv):
    return main(list(argv))


def write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh)
    return str(path)


@pytest.fixture
def lp_problem(tmp_path):
    g = np.random.default_rng(0)
    A = g.standard_normal((3, 9))
    x0 = np.abs(g.standard_normal(9))
    x0[3:] = 0.0
    return write_json(tmp_path / "lp.json", {
        "kind": "lp_epigraph",
        "phi": A.tolist(),
        "y": (A @ x0).tolist(),
        "cost": g.uniform(0.1, 1, 9).tolist(),
    })


class TestSolve:
    def test_lp_end_to_end(self, tmp_path, lp_problem):
        out = tmp_path / "run"
        assert run_cli("solve", lp_problem, "--out", str(out)) == 0
        assert (out / "solution.csv").exists()
        cert = json.loads((out / "certificate.json").read_text())
        assert cert["pass"] is True
        assert cert["atom_count"] <= 3
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["toolkit_version"]
        assert "certificate.json" in " ".join(manifest["outputs"])

    def test_malformed_json_exits_1(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert run_cli("solve", str(bad)) == 1
        err = json.loads(capsys.readouterr().err)
        assert "error" in err

    def test_unknown_keys_rejected(self, tmp_path):
        path = write_json(tmp_path / "p.json", {
            "kind": "nonneg_cone", "phi": [[1.0]], "y": [1.0],
            "mystery": 1})
        assert run_cli("solve", path) == 1

    def test_nonneg_solve(self, tmp_path):
        g = np.random.default_rng(1)
        Phi = g.standard_normal((4, 20))
        path = write_json(tmp_path / "nn.json", {
            "kind": "nonneg_cone", "phi": Phi.tolist(),
            "y": g.standard_normal(4).tolist()})
        out = tmp_path / "out"
        assert run_cli("solve", path, "--out", str(out)) == 0
        x = [float(line) for line in
             (out / "solution.csv").read_text().splitlines()]
        assert len(x) == 20
        assert min(x) >= 0.0

    def test_measure_solve(self, tmp_path):
        sys_ = trigonometric_system(3)
        truth = DiscreteMeasure(atoms=[(0.25, 1.0)])
        path = write_json(tmp_path / "m.json", {
            "kind": "measure_tv",
            "y": moments_of(truth, sys_).tolist(),
            "grid_n": 64})
        out = tmp_path / "mo"
        assert run_cli("solve", path, "--out", str(out)) == 0
        rows = (out / "solution.csv").read_text().splitlines()
        assert rows[0] == "location,amplitude"

    def test_byte_identical_reruns(self, tmp_path, lp_problem):
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert run_cli("solve", lp_problem, "--out", str(out1)) == 0
        assert run_cli("solve", lp_problem, "--out", str(out2)) == 0
        for name in ("solution.csv", "certificate.json"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


class TestDecompose:
    def test_birkhoff_two_by_two(self, tmp_path):
        sol = tmp_path / "ds.csv"
        write_csv(sol, [[0.3, 0.7], [0.7, 0.3]])
        out = tmp_path / "d"
        assert run_cli("decompose", str(sol), "--kind", "birkhoff",
                       "--out", str(out)) == 0
        rows = (out / "permutations.csv").read_text().splitlines()
        assert len(rows) == 2

    def test_nuclear_solution(self, tmp_path):
        sol = tmp_path / "m.csv"
        write_csv(sol, np.diag([3.0, 1.0]))
        prob = write_json(tmp_path / "p.json", {
            "kind": "nuclear",
            "measurement_maps": [np.eye(2).tolist()],
            "y": [4.0], "shape": [2, 2]})
        out = tmp_path / "d"
        assert run_cli("decompose", str(sol), "--problem", prob,
                       "--out", str(out)) == 0
        rows = (out / "atoms.csv").read_text().splitlines()
        assert len(rows) == 2

    def test_measure_passthrough(self, tmp_path):
        sol = tmp_path / "mu.csv"
        write_csv(sol, [(0.25, 1.0), (0.5, -2.0)],
                  header=["location", "amplitude"])
        prob = write_json(tmp_path / "p.json", {
            "kind": "measure_tv", "y": [1.0, 2.0], "grid_n": 64})
        out = tmp_path / "d"
        assert run_cli("decompose", str(sol), "--problem", prob,
                       "--out", str(out)) == 0
        assert (out / "atoms.csv").exists()


class TestAudit:
    def test_audit_existing_solution(self, tmp_path):
        g = np.random.default_rng(3)
        Phi = g.standard_normal((3, 12))
        from repkit.finite import nnls_solve
        u = nnls_solve(Phi, g.standard_normal(3))
        sol = tmp_path / "u.csv"
        write_csv(sol, [[v] for v in u])
        prob = write_json(tmp_path / "p.json", {
            "kind": "nonneg_cone", "phi": Phi.tolist(),
            "y": [0.0, 0.0, 0.0]})
        out = tmp_path / "a"
        assert run_cli("audit", str(sol), "--problem", prob,
                       "--out", str(out)) == 0
        cert = json.loads((out / "certificate.json").read_text())
        assert cert["pass"] is True

    def test_audit_failure_exits_2(self, tmp_path):
        # dense positive vector: too many atoms for one measurement
        sol = tmp_path / "u.csv"
        write_csv(sol, [[1.0]] * 6)
        prob = write_json(tmp_path / "p.json", {
            "kind": "nonneg_cone", "phi": [[1.0] * 6], "y": [6.0]})
        assert run_cli("audit", str(sol), "--problem", prob,
                       "--out", str(tmp_path / "a")) == 2


class TestFig2:
    def test_smoke_size_48(self, tmp_path):
        out = tmp_path / "fig2"
        code = run_cli("fig2", "--size", "48", "--iters", "60000",
                       "--out", str(out))
        assert code in (0, 3)
        assert (out / "disks.pgm").exists()
        assert (out / "result.pgm").exists()
        assert (out / "trace.csv").exists()
        report = json.loads((out / "level_report.json").read_text())
        assert report["constraint_residual"] <= 1e-4 * 0.8
        assert len(report["levels"]) <= 4

    def test_single_disk_layout(self, tmp_path):
        layout = write_json(tmp_path / "one.json", {
            "disks": [[24.0, 24.0, 10.0]], "y": [0.6]})
        out = tmp_path / "one_out"
        code = run_cli("fig2", "--size", "48", "--disks", layout,
                       "--iters", "40000", "--out", str(out))
        assert code in (0, 3)
        report = json.loads((out / "level_report.json").read_text())
        assert len(report["levels"]) <= 2


class TestEnumerateSlice:
    def test_identity(self, tmp_path, capsys):
        op = tmp_path / "L.csv"
        write_csv(op, np.eye(3))
        out = tmp_path / "es"
        assert run_cli("enumerate-slice", str(op), "--out", str(out)) == 0
        assert "extreme_points 6" in capsys.readouterr().out
        rows = (out / "extreme_points.csv").read_text().splitlines()
        assert len(rows) == 6
