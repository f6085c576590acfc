import os

import numpy as np
import pytest
from numpy.testing import assert_allclose

from netstab.analysis import analyze, simulate_fading_covariance
from netstab.cli import main
from netstab.codesign import codesign
from netstab.cyclic import cyclic_decompose
from netstab.majorize import STRICT_WEAK_ABOVE, check_order, pad_to_match
from netstab.plantmodel import capacities, validate_plant
from netstab.reports import emit, emit_machine, parse_machine

PROBLEMS = os.path.join(os.path.dirname(__file__), os.pardir, "problems")
AWGN_FILE = os.path.join(PROBLEMS, "demo_awgn.yaml")
FADING_FILE = os.path.join(PROBLEMS, "demo_fading.yaml")


@pytest.fixture
def all_reports(bench_plant, bench_awgn, bench_fading):
    res = codesign(bench_plant, bench_awgn)
    d = cyclic_decompose(bench_plant)
    c_pad, h_pad = pad_to_match(capacities(bench_awgn), d.h)
    traj = simulate_fading_covariance(
        bench_plant, codesign(bench_plant, bench_fading).design, bench_fading,
        t_end=0.1,
    )
    return [
        validate_plant(bench_plant),
        d,
        check_order(c_pad, h_pad, STRICT_WEAK_ABOVE),
        res.design,
        res,
        analyze(bench_plant, res.design, bench_awgn),
        traj,
    ]


class TestMachineRoundTrip:
    def test_every_report_type_round_trips(self, all_reports):
        for obj in all_reports:
            doc = emit_machine(obj)
            rebuilt = parse_machine(doc)
            assert emit_machine(rebuilt) == doc

    def test_emission_is_deterministic(self, all_reports):
        for obj in all_reports:
            assert emit_machine(obj) == emit_machine(obj)

    def test_human_renders_everything(self, all_reports):
        for obj in all_reports:
            text = emit(obj, "human")
            assert text.endswith("\n") and len(text) > 10


class TestTrajectoryTable:
    def test_shape_and_precision(self, bench_plant, bench_fading):
        res = codesign(bench_plant, bench_fading)
        traj = simulate_fading_covariance(
            bench_plant, res.design, bench_fading, t_end=0.03, dt=0.01
        )
        table = emit(traj, "table")
        lines = table.strip().split("\n")
        assert lines[0].startswith("t,x11,x12") and lines[0].endswith("frobenius_norm")
        assert len(lines) == 1 + traj.times.size
        # 17 significant digits round-trip exactly
        for line, X in zip(lines[1:], traj.states):
            cells = line.split(",")
            assert len(cells) == 1 + 16 + 1
            assert_allclose(
                np.array(cells[1:-1], dtype=float).reshape(4, 4), X, rtol=0, atol=0
            )


class TestCli:
    def run(self, *argv):
        return main(list(argv))

    def test_validate_exit_codes(self, tmp_path):
        assert self.run("validate", AWGN_FILE) == 0
        bad = tmp_path / "bad.yaml"
        bad.write_text(
            "plant:\n  A: [[1]]\n  B: [[0]]\n"
            "channels:\n  kind: awgn\n  power: [1]\n  noise_density: [1]\n"
        )
        assert self.run("validate", str(bad)) == 1

    def test_check_exit_codes(self, tmp_path):
        assert self.run("check", AWGN_FILE) == 0
        weak = tmp_path / "weak.yaml"
        weak.write_text(
            open(AWGN_FILE).read().replace("[9.1, 3.1, 4.1]", "[1, 1, 1]")
        )
        assert self.run("check", str(weak)) == 1

    def test_codesign_and_analyze(self, tmp_path):
        out = tmp_path / "design.json"
        assert self.run("codesign", AWGN_FILE, "--format", "machine",
                        "--out", str(out)) == 0
        rebuilt = parse_machine(out.read_text())
        assert rebuilt.feasible
        assert self.run("analyze", FADING_FILE) == 0

    def test_simulate_writes_table(self, tmp_path):
        out = tmp_path / "traj.csv"
        assert self.run("simulate", FADING_FILE, "--format", "table",
                        "--t-end", "0.5", "--out", str(out)) == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0].split(",")[0] == "t"
        assert len(lines) > 2

    def test_simulate_rejects_awgn(self):
        assert self.run("simulate", AWGN_FILE) == 2

    def test_parse_error_is_exit_2(self, tmp_path):
        bad = tmp_path / "broken.yaml"
        bad.write_text("plant: [not, a, mapping]\n")
        assert self.run("validate", str(bad)) == 2

    def test_pinned_epsilon_override(self):
        assert self.run("codesign", AWGN_FILE, "--epsilon", "0.05") == 0
        # a too-coarse pinned scaling is a negative verdict, not an error
        assert self.run("codesign", AWGN_FILE, "--epsilon", "1.0") == 1

    def test_decompose(self, tmp_path):
        out = tmp_path / "dec.json"
        assert self.run("decompose", AWGN_FILE, "--format", "machine",
                        "--out", str(out)) == 0
        d = parse_machine(out.read_text())
        assert d.k == 2

    def test_byte_identical_reruns(self, tmp_path):
        for command, path in (
            ("validate", AWGN_FILE),
            ("check", AWGN_FILE),
            ("codesign", FADING_FILE),
        ):
            docs = []
            for i in range(2):
                out = tmp_path / f"{command}{i}.json"
                self.run(command, path, "--format", "machine",
                         "--seed", "0", "--out", str(out))
                docs.append(out.read_bytes())
            assert docs[0] == docs[1]
