import json
import subprocess
import sys

import pytest

from polyfold.cli import RunConfig, cmd_verify, main
from polyfold.geometry import VPolygon
from polyfold.pipeline import CATALOG, build_v_polygon_map
from polyfold.poly import SparsePoly, x, y
from polyfold.stages import StagedMap


def write_polygon(path, p: VPolygon):
    path.write_text(json.dumps(p.to_json()))
    return str(path)


def error_of(capsys) -> dict:
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


@pytest.fixture
def quadrant_files(tmp_path):
    poly = write_polygon(tmp_path / "quadrant.json", CATALOG["quadrant"])
    out = tmp_path / "quadrant_map.json"
    assert main(["build", "--input", poly, "--output", str(out)]) == 0
    return poly, out


def test_build_and_expand_quadrant(quadrant_files, tmp_path):
    _, out = quadrant_files
    m = StagedMap.from_json(json.loads(out.read_text()))
    assert len(m) == 1
    exp = tmp_path / "expanded.json"
    tex = tmp_path / "expanded.tex"
    assert main(["expand", "--input", str(out), "--output", str(exp), "--latex", str(tex)]) == 0
    data = json.loads(exp.read_text())
    polys = [SparsePoly.from_json(p, 2) for p in data["expanded"]]
    assert polys == [x() ** 2, y() ** 2]
    assert tex.read_text().strip() == r"(x,y) \mapsto \left(x^{2},\ y^{2}\right)"


def test_strip_is_a_usage_error(tmp_path, capsys):
    strip = VPolygon(((0, 0), (1, 0)), (0, 1), (0, 1))
    poly = write_polygon(tmp_path / "strip.json", strip)
    assert main(["build", "--input", poly]) == 2
    assert error_of(capsys)["error"] == "parallel_unbounded_edges"


def test_missing_and_malformed_inputs(tmp_path, capsys):
    assert main(["build"]) == 2
    assert error_of(capsys)["error"] == "missing_input"
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["build", "--input", str(bad)]) == 2
    assert error_of(capsys)["error"] == "malformed_json"


def test_build_n3_has_nine_stages(tmp_path, capsys):
    poly = write_polygon(tmp_path / "tri3.json", CATALOG["tri3"])
    out = tmp_path / "tri3_map.json"
    assert main(["build", "--input", poly, "--output", str(out)]) == 0
    data = json.loads(out.read_text())
    assert len(data["stages"]) == 9
    assert main(["expand", "--input", str(out)]) == 2
    err = error_of(capsys)
    assert err["error"] == "degree_cap_exceeded" and "1134" in err["message"]


def test_round_trip_through_files(tmp_path):
    poly = write_polygon(tmp_path / "quad4.json", CATALOG["quad4"])
    out = tmp_path / "quad4_map.json"
    main(["build", "--input", poly, "--output", str(out)])
    assert StagedMap.from_json(json.loads(out.read_text())) == build_v_polygon_map(CATALOG["quad4"])


def test_verify_halfplane_passes(tmp_path):
    poly = write_polygon(tmp_path / "h.json", CATALOG["halfplane"])
    mp = tmp_path / "h_map.json"
    main(["build", "--input", poly, "--output", str(mp)])
    rep = tmp_path / "report.json"
    code = main([
        "verify", "--input", str(mp), "--polygon", poly, "--output", str(rep),
        "--samples", "500", "--coverage-samples", "50000", "--grid", "50", "--window=-10,10,0,10",
    ])
    report = json.loads(rep.read_text())
    assert code == 0 and report["passed"]
    assert set(report["checks"]) == {"containment", "stagewise", "fold_certificates", "coverage"}


def test_verify_plus_x_sign_fails_on_coverage(tmp_path):
    poly = write_polygon(tmp_path / "q.json", CATALOG["quad4"])
    mp = tmp_path / "q_map.json"
    main(["build", "--input", poly, "--output", str(mp), "--paper-step4-sign"])
    rep = tmp_path / "report.json"
    misses = tmp_path / "misses.csv"
    code = main([
        "verify", "--input", str(mp), "--polygon", poly, "--output", str(rep),
        "--samples", "100", "--coverage-samples", "50000", "--grid", "30", "--fibers", "4",
        "--misses", str(misses),
    ])
    report = json.loads(rep.read_text())
    assert code == 1
    assert not report["checks"]["coverage"]["passed"]
    assert misses.read_text().startswith("x,y,near_boundary\n")


def test_verify_arity_mismatch(tmp_path, capsys):
    poly = write_polygon(tmp_path / "quadrant.json", CATALOG["quadrant"])
    mp = tmp_path / "interior.json"
    assert main(["interior", "--input", poly, "--output", str(mp)]) == 0
    data = json.loads(mp.read_text())
    data["domain_arity"] = 2
    mp.write_text(json.dumps(data))
    assert main(["verify", "--input", str(mp), "--polygon", poly]) == 2
    assert error_of(capsys)["error"] == "arity_mismatch"


def test_verify_target_mismatch(quadrant_files, tmp_path, capsys):
    _, mp = quadrant_files
    other = write_polygon(tmp_path / "angle.json", CATALOG["angle"])
    assert main(["verify", "--input", str(mp), "--polygon", other]) == 2
    assert error_of(capsys)["error"] == "target_mismatch"


def test_plot_outputs(tmp_path):
    poly = write_polygon(tmp_path / "h.json", CATALOG["halfplane"])
    mp = tmp_path / "h_map.json"
    main(["build", "--input", poly, "--output", str(mp)])
    args = ["plot", "--input", str(mp), "--samples", "3000", "--window=-10,10,-1,10"]
    assert main(args + ["--output", str(tmp_path / "a")]) == 0
    assert main(args + ["--output", str(tmp_path / "b")]) == 0
    rows = (tmp_path / "a.csv").read_text().splitlines()
    assert rows[0] == "x,y" and len(rows) > 100
    assert all(float(r.split(",")[1]) >= 0 for r in rows[1:])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    svg = (tmp_path / "a.svg").read_text()
    assert svg.startswith("<svg") and "<circle" in svg


def test_plot_marks_deleted_faces(tmp_path):
    poly = write_polygon(tmp_path / "tri3.json", CATALOG["tri3"])
    mp = tmp_path / "interior.json"
    main(["interior", "--input", poly, "--output", str(mp)])
    main(["plot", "--input", str(mp), "--samples", "500", "--output", str(tmp_path / "p")])
    svg = (tmp_path / "p.svg").read_text()
    assert "stroke-dasharray" in svg and 'fill="white"' in svg


def test_config_file_and_overrides(tmp_path, quadrant_files):
    poly, mp = quadrant_files
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"command": "verify", "input": str(mp), "polygon": poly, "samples": 50,
                               "coverage_samples": 5000, "grid": 10, "seed": 3}))
    out = tmp_path / "r.json"
    assert main(["verify", "--config", str(cfg), "--seed", "4", "--output", str(out)]) == 0
    assert json.loads(out.read_text())["config"]["seed"] == 4
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["verify", "--config", str(cfg)]) == 2


def test_cmd_verify_deterministic(tmp_path, quadrant_files):
    poly, mp = quadrant_files
    out = tmp_path / "r.json"
    cfg = RunConfig("verify", str(mp), str(out), poly, samples=200, coverage_samples=20_000, grid=40)
    cmd_verify(cfg)
    first = out.read_bytes()
    cmd_verify(cfg)
    assert out.read_bytes() == first


def test_console_module_entry(tmp_path):
    poly = write_polygon(tmp_path / "quadrant.json", CATALOG["quadrant"])
    res = subprocess.run(
        [sys.executable, "-m", "polyfold.cli", "build", "--input", poly],
        capture_output=True, text=True, check=False,
    )
    assert res.returncode == 0
    assert json.loads(res.stdout)["domain_arity"] == 2
