import csv
import io
import json

import pytest

from psm2d import phase
from psm2d.fields import ProblemParams, read_field
from psm2d.inequalities import nonexistence_qbar
from psm2d.solver import TRIVIAL


def small_spec(tmp_path, **kw):
    base = dict(p_values=(6.0,), alpha_values=(8.0,), q_values=(1e-4,), multistarts=1,
                radial_m=64, max_box_doublings=1, trial_family_size=32, max_iter=50,
                out_dir=str(tmp_path / "scan"))
    base.update(kw)
    return phase.ScanSpec(**base)


def test_spec_validation():
    with pytest.raises(ValueError):
        phase.ScanSpec((2.0,), (1.0,), (1.0,))
    with pytest.raises(ValueError):
        phase.ScanSpec((5.0,), (1.0,), (1.0,), problem="P3")
    with pytest.raises(ValueError):
        phase.ScanSpec((5.0,), (1.0,), ())


def test_spec_hash_ignores_output_dir(tmp_path):
    a = small_spec(tmp_path)
    b = small_spec(tmp_path, out_dir="elsewhere")
    assert a.spec_hash == b.spec_hash
    assert small_spec(tmp_path, seed=1).spec_hash != a.spec_hash


def test_pw_uses_one_q(tmp_path):
    s = small_spec(tmp_path, problem="PW", q_values=(1.0, 2.0, 3.0))
    assert len(s.cells()) == 1


def test_single_cell_scan_matches_direct_solve(tmp_path):
    spec = small_spec(tmp_path)
    man = phase.run_scan(spec, jobs=1)
    rec, best = phase.solve_cell(spec, 6.0, 8.0, 1e-4)
    cell = man.results["cells"][0]
    assert cell["classification"] == rec.classification == TRIVIAL
    assert cell["level"] == rec.level
    assert cell["qbar"] == pytest.approx(nonexistence_qbar(8.0, 6.0))
    assert cell["qtilde_est"] >= cell["qbar"]
    assert man.results["ordering_ok"]

    out = tmp_path / "scan"
    rows = list(csv.reader(io.StringIO((out / "scan.csv").read_text())))
    assert tuple(rows[0]) == phase.CSV_COLUMNS
    assert float(rows[1][2]) == 1e-4 and rows[1][5] == TRIVIAL
    assert (out / "plots" / "phase.dat").read_text().startswith("# p alpha q")
    u = read_field(out / "fields" / f"{phase.cell_id(6.0, 8.0, 1e-4)}.psm2")
    assert u.values.shape == best.solution.values.shape


def test_rerun_is_idempotent(tmp_path):
    spec = small_spec(tmp_path)
    first = phase.run_scan(spec, jobs=1)
    text = (tmp_path / "scan" / "scan.csv").read_bytes()
    manifest = (tmp_path / "scan" / "manifest.json").read_bytes()
    second = phase.run_scan(spec, jobs=1)
    assert second.results == first.results
    assert (tmp_path / "scan" / "scan.csv").read_bytes() == text
    assert (tmp_path / "scan" / "manifest.json").read_bytes() == manifest
    assert phase.load_scan(tmp_path / "scan").inputs["spec_hash"] == spec.spec_hash


def test_failing_cell_is_recorded(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("synthetic failure")

    monkeypatch.setattr(phase, "solve_cell", boom)
    man = phase.run_scan(small_spec(tmp_path), jobs=1)
    cell = man.results["cells"][0]
    assert cell["classification"] == "error"
    assert "synthetic failure" in cell["error"]


def test_inadmissible_cell_has_no_thresholds(tmp_path):
    rec, _ = phase.solve_cell(small_spec(tmp_path), 6.0, 3.0, 1e-4)
    assert rec.qbar is None and rec.qtilde_est is None
    assert rec.row()[3] == "" and rec.row()[4] == ""
