import json

import numpy as np
import pytest

from conftest import basic_spec
from vaisflow.cli import main
from vaisflow.grid import ScalarField
from vaisflow.snapshots import field_to_dict, save_snapshot
from vaisflow.transverse import HermitianField, metric_from_potential


def write_config(path, body):
    path.write_text(body)
    return str(path)


FLAT_FLOW = """
[chart]
n = 1
transverse_resolution = 32 32
transverse_periods = 6.283185307179586 6.283185307179586
potential = flat

[flow]
class_k = 0
ricci_tolerance = 1e-6

[output]
directory = {out}
"""

BUMP_FLOW = """
# perturbed-torus run
[chart]
n = 1
transverse_resolution = 32 32
transverse_periods = 6.283185307179586 6.283185307179586
potential = cos_bump
amplitude = -0.4

[flow]
class_k = 0
ricci_tolerance = 1e-5

[output]
directory = {out}
checkpoint_every = 0
"""

CHECKS = """
[checks]
resolutions = 32 64
leaf_resolution = 8 8
potential = cos_bump
amplitude = -0.4
inject_defect = {defect}

[output]
directory = {out}
"""


class TestCmdFlow:
    def test_flat_chart_single_row(self, tmp_path):
        cfg = write_config(tmp_path / "flat.cfg", FLAT_FLOW.format(out=tmp_path / "out"))
        assert main(["flow", cfg]) == 0
        lines = (tmp_path / "out" / "history.csv").read_text().strip().splitlines()
        assert lines[0] == "step,t,dt,ricci_sup,dphidt_sup,min_eig,max_eig,leafwise_defect"
        assert len(lines) == 2  # header + the single converged row
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["converged"] and report["reason"] == "converged"

    def test_bump_chart_converges(self, tmp_path):
        cfg = write_config(tmp_path / "bump.cfg", BUMP_FLOW.format(out=tmp_path / "out"))
        assert main(["flow", cfg]) == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["final_ricci_sup"] < 1e-5
        assert (tmp_path / "out" / "metric_final.json").exists()

    def test_invalid_dt_names_key(self, tmp_path, capsys):
        body = FLAT_FLOW.format(out=tmp_path / "out").replace(
            "class_k = 0", "class_k = 0\ndt_initial = -1"
        )
        cfg = write_config(tmp_path / "bad.cfg", body)
        assert main(["flow", cfg]) == 1
        assert "dt_initial" in capsys.readouterr().err

    def test_unknown_key_rejected(self, tmp_path, capsys):
        body = FLAT_FLOW.format(out=tmp_path / "out").replace(
            "class_k = 0", "class_k = 0\nwibble = 3"
        )
        cfg = write_config(tmp_path / "bad2.cfg", body)
        assert main(["flow", cfg]) == 1
        assert "wibble" in capsys.readouterr().err

    def test_not_converged_exit_code(self, tmp_path):
        body = BUMP_FLOW.format(out=tmp_path / "out").replace(
            "ricci_tolerance = 1e-5", "ricci_tolerance = 1e-5\nmax_steps = 3"
        )
        cfg = write_config(tmp_path / "short.cfg", body)
        assert main(["flow", cfg]) == 2

    def test_breakdown_exit_code(self, tmp_path):
        body = BUMP_FLOW.format(out=tmp_path / "out").replace(
            "ricci_tolerance = 1e-5", "ricci_tolerance = 1e-12\npositivity_floor = 0.95"
        )
        cfg = write_config(tmp_path / "broken.cfg", body)
        assert main(["flow", cfg]) == 3

    def test_reproducible_history(self, tmp_path):
        cfg_a = write_config(tmp_path / "a.cfg", BUMP_FLOW.format(out=tmp_path / "out_a"))
        cfg_b = write_config(tmp_path / "b.cfg", BUMP_FLOW.format(out=tmp_path / "out_b"))
        assert main(["flow", cfg_a]) == 0
        assert main(["flow", cfg_b]) == 0
        a = (tmp_path / "out_a" / "history.csv").read_bytes()
        b = (tmp_path / "out_b" / "history.csv").read_bytes()
        assert a == b

    def test_checkpoints_written(self, tmp_path):
        body = BUMP_FLOW.format(out=tmp_path / "out").replace(
            "checkpoint_every = 0", "checkpoint_every = 50"
        )
        cfg = write_config(tmp_path / "ck.cfg", body)
        assert main(["flow", cfg]) == 0
        snaps = sorted((tmp_path / "out").glob("metric_0*.json"))
        assert snaps, "expected checkpoint snapshots"

    def test_unwritable_output_directory(self, tmp_path, capsys):
        blocker = tmp_path / "blocker"
        blocker.write_text("")
        cfg = write_config(
            tmp_path / "bad_out.cfg", FLAT_FLOW.format(out=blocker / "out")
        )
        assert main(["flow", cfg]) == 1
        assert "output.directory" in capsys.readouterr().err


class TestCmdCheckStructure:
    def test_passes(self, tmp_path):
        cfg = write_config(
            tmp_path / "checks.cfg", CHECKS.format(defect="false", out=tmp_path / "out")
        )
        assert main(["check-structure", cfg]) == 0
        payload = json.loads((tmp_path / "out" / "checks.json").read_text())
        assert payload["fitted_order"] >= 3.5
        assert not payload["failures"]

    def test_flat_chart_exact(self, tmp_path):
        body = CHECKS.format(defect="false", out=tmp_path / "out").replace(
            "potential = cos_bump", "potential = flat"
        )
        cfg = write_config(tmp_path / "flat_checks.cfg", body)
        assert main(["check-structure", cfg]) == 0
        payload = json.loads((tmp_path / "out" / "checks.json").read_text())
        assert all(row["r1"] < 1e-12 for row in payload["results"])

    def test_injected_defect_detected(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path / "checks.cfg", CHECKS.format(defect="true", out=tmp_path / "out")
        )
        assert main(["check-structure", cfg]) == 4
        err = capsys.readouterr().err
        assert "d omega = theta ^ omega" in err


class TestCmdFitEinstein:
    def test_flow_endpoint_is_ricci_flat(self, tmp_path):
        cfg = write_config(tmp_path / "bump.cfg", BUMP_FLOW.format(out=tmp_path / "out"))
        body = (tmp_path / "bump.cfg").read_text().replace("1e-5", "1e-6")
        write_config(tmp_path / "bump.cfg", body)
        assert main(["flow", str(tmp_path / "bump.cfg")]) == 0
        out = tmp_path / "fit.json"
        assert main(["fit-einstein", str(tmp_path / "out" / "metric_final.json"), "-o", str(out)]) == 0
        fit = json.loads(out.read_text())
        assert abs(fit["lambda"] + 0.5) < 1e-5
        assert abs(fit["alpha"] - 1.0) < 1e-5
        assert abs(fit["beta"] - 0.5) < 1e-5
        assert fit["constraints_ok"]

    def test_synthetic_ke_snapshot(self, tmp_path):
        spec = basic_spec(res=16)
        g = HermitianField.identity(spec)
        ric = HermitianField(spec, 1.0 * g.matrices)
        bundle = {"metric": field_to_dict(g), "ricci": field_to_dict(ric)}
        path = tmp_path / "ke.json"
        path.write_text(json.dumps(bundle))
        out = tmp_path / "ke.fit.json"
        assert main(["fit-einstein", str(path), "-o", str(out)]) == 0
        fit = json.loads(out.read_text())
        assert abs(fit["lambda"] - 0.5) < 1e-10
        assert fit["homothety_a"] == 1.0
        assert fit["weyl_residual"] < 1e-10

    def test_malformed_snapshot(self, tmp_path, capsys):
        path = tmp_path / "junk.json"
        path.write_text("{ nope")
        assert main(["fit-einstein", str(path)]) == 1


class TestCmdReport:
    def test_summary(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "bump.cfg", BUMP_FLOW.format(out=tmp_path / "out"))
        assert main(["flow", cfg]) == 0
        capsys.readouterr()
        assert main(["report", str(tmp_path / "out" / "history.csv")]) == 0
        out = capsys.readouterr().out
        assert "final ricci_sup" in out
        assert "monotone" in out

    def test_missing_file(self, tmp_path, capsys):
        assert main(["report", str(tmp_path / "nope.csv")]) == 1
