import json
import shutil
import subprocess
from pathlib import Path

import pytest

from weilpoisson.cli import Manifest, UsageError, main

MANIFESTS = Path(__file__).resolve().parent.parent / "demos" / "manifests"
CANONICAL = str(MANIFESTS / "canonical_r2_dual.json")


def write(tmp_path, **data):
    path = tmp_path / "m.json"
    path.write_text(json.dumps(data))
    return str(path)


def numbers(out):
    return [float(v) for v in out.strip().split()]


def test_algebra_info_without_manifest(capsys):
    assert main(["algebra-info", "R[T1]/(T1^3)"]) == 0
    out = capsys.readouterr().out
    assert "dim     3" in out and "height  2" in out and "(dim 1)" in out
    assert main(["algebra-info", "R"]) == 0
    out = capsys.readouterr().out
    assert "dim     1" in out and "height  0" in out


@pytest.mark.parametrize(
    "spec, dim, height, ann",
    [("R[T1]/(T1^2)", 2, 1, 1), ("R[T1,T2]/(T1,T2)^2", 3, 1, 2), ("R[T1,T2]/(T1^2,T2^2)", 4, 2, 1)],
)
def test_algebra_info_json(tmp_path, spec, dim, height, ann):
    out = tmp_path / "info.json"
    assert main(["algebra-info", spec, "--json", str(out)]) == 0
    info = json.loads(out.read_text())
    assert (info["dim"], info["height"], info["ann_dim"]) == (dim, height, ann)
    assert info["basis"][0] == "1"


def test_malformed_spec_exits_2(capsys):
    assert main(["algebra-info", "R[T1]/(T1^"]) == 2
    err = capsys.readouterr().err
    assert "error" in err and "position" in err


def test_lift_examples(tmp_path, capsys):
    m = write(tmp_path, algebra="R[T1]/(T1^3)", dimension=1)
    assert main(["lift", "exp(x1)", "[[0, 1, 0]]", "--manifest", m]) == 0
    assert numbers(capsys.readouterr().out) == pytest.approx([1.0, 1.0, 0.5], abs=1e-15)
    assert main(["lift", "4.5", "[[0, 1, 0]]", "--manifest", m]) == 0
    assert numbers(capsys.readouterr().out) == [4.5, 0.0, 0.0]
    m2 = write(tmp_path, algebra="R[T1]/(T1^2)", dimension=1, functions={"sq": "x1^2"})
    assert main(["lift", "sq", "[[3, 1]]", "--manifest", m2]) == 0
    assert numbers(capsys.readouterr().out) == [9.0, 6.0]


def test_lift_bad_point_exits_2(tmp_path):
    m = write(tmp_path, algebra="R[T1]/(T1^2)", dimension=2)
    assert main(["lift", "x1", "[[0, 1]]", "--manifest", m]) == 2
    assert main(["lift", "x1", "not json", "--manifest", m]) == 2
    assert main(["lift", "x3", "[[0, 1], [1, 0]]", "--manifest", m]) == 2


def test_bracket_both_structures(capsys):
    point = "[[0.3, 1], [0.2, -1]]"
    assert main(["bracket", "q", "p", point, "--manifest", CANONICAL, "--structure", "poisson"]) == 0
    assert numbers(capsys.readouterr().out) == [-1.0, 0.0]
    assert main(["bracket", "q", "p", point, "--manifest", CANONICAL, "--structure", "symplectic"]) == 0
    assert numbers(capsys.readouterr().out) == pytest.approx([-1.0, 0.0], abs=1e-14)
    assert main(["bracket", "H", "f", point, "--manifest", CANONICAL, "--structure", "poisson"]) == 0
    poisson = numbers(capsys.readouterr().out)
    assert main(["bracket", "H", "f", point, "--manifest", CANONICAL, "--structure", "symplectic"]) == 0
    assert numbers(capsys.readouterr().out) == pytest.approx(poisson, abs=1e-12)


def test_bracket_without_structure_exits_2(tmp_path):
    m = write(tmp_path, algebra="R[T1]/(T1^2)", dimension=2)
    assert main(["bracket", "x1", "x2", "[[0, 1], [0, 0]]", "--manifest", m]) == 2


def test_check_all_canonical(tmp_path, capsys):
    out = tmp_path / "report.json"
    assert main(["check", "all", "--manifest", CANONICAL, "--samples", "8", "--json", str(out)]) == 0
    text = capsys.readouterr().out
    assert text.strip().endswith("ALL PASS")
    report = json.loads(out.read_text())
    names = [r["name"] for r in report["reports"]]
    assert names[:6] == ["skew", "bilinear", "leibniz", "jacobi", "commutator", "compat"]
    assert {"coincide", "hamlift"} <= set(names)
    assert all(r.get("passed", r.get("agree")) for r in report["reports"])


def test_check_is_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert main(["check", "all", "--manifest", CANONICAL, "--samples", "4", "--json", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "c.json"
    main(["check", "all", "--manifest", CANONICAL, "--samples", "4", "--seed", "8", "--json", str(c)])
    assert c.read_bytes() != a.read_bytes()


def test_nondegen_on_degenerate_algebra(tmp_path, capsys):
    out = tmp_path / "nd.json"
    assert main(["check", "nondegen", "--manifest", str(MANIFESTS / "degenerate_square.json"), "--json", str(out)]) == 0
    reports = json.loads(out.read_text())["reports"]
    assert len(reports) == 3
    assert all(r["verdict"] == "degenerate" and r["agree"] for r in reports)


def test_missing_structure_exits_2(tmp_path, capsys):
    m = write(tmp_path, algebra="R[T1]/(T1^2)", dimension=2, symplectic=[[0, 1], [None, 0]])
    assert main(["check", "jacobi", "--manifest", m]) == 2
    assert "poisson" in capsys.readouterr().err
    m2 = write(tmp_path, algebra="R[T1]/(T1^2)", dimension=2, poisson=[[0, 1], [None, 0]])
    assert main(["check", "coincide", "--manifest", m2]) == 2
    m3 = write(tmp_path, algebra="R[T1]/(T1^2)", dimension=2)
    assert main(["check", "all", "--manifest", m3]) == 2


def test_negative_control_exits_1(capsys):
    with pytest.warns(UserWarning):
        code = main(["check", "jacobi", "--manifest", str(MANIFESTS / "broken_jacobi.json"), "--samples", "10"])
    assert code == 1
    assert "FAIL" in capsys.readouterr().out


def test_degenerate_symplectic_matrix_exits_1(tmp_path):
    m = write(tmp_path, algebra="R[T1]/(T1^2)", dimension=2, symplectic=[[0, 0], [None, 0]])
    assert main(["check", "coincide", "--manifest", m]) == 1


@pytest.mark.parametrize(
    "data",
    [
        {"algebra": "R[T1]/(T1^2)"},
        {"algebra": "R[T1]/(T1^2)", "dimension": 0},
        {"algebra": "R[T1]/(T1^2)", "dimension": 2, "colour": "red"},
        {"algebra": "R[T1]/(T1^2)", "dimension": 2, "poisson": [[0, 1, 0], [None, 0, 0], [None, None, 0]]},
        {"algebra": "R[T1]/(T1^2)", "dimension": 2, "poisson": [[0, "x1 +"], [None, 0]]},
        {"algebra": "R[T1]/(T1^2)", "dimension": 2, "poisson": [[0, 1], [None, 0]], "points": [[1, 2, 3]]},
    ],
)
def test_bad_manifests_exit_2(tmp_path, data):
    assert main(["check", "skew", "--manifest", write(tmp_path, **data), "--samples", "2"]) == 2


def test_unreadable_manifest(tmp_path):
    assert main(["check", "skew", "--manifest", str(tmp_path / "nope.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["check", "skew", "--manifest", str(bad)]) == 2
    assert main(["lift", "x1", "[[0, 1]]"]) == 2


def test_manifest_api():
    m = Manifest.from_dict({"algebra": "R[T1]/(T1^2)", "dimension": 2, "functions": {"q": "x1"}})
    assert m.tol == 1e-8 and m.samples == 50 and m.seed == 0
    assert str(m.function("q")) == "x1" and str(m.function("x2")) == "x2"
    with pytest.raises(UsageError):
        Manifest.from_dict([1, 2])


def test_points_override_bases(tmp_path, capsys):
    m = write(
        tmp_path,
        algebra="R[T1]/(T1^2)",
        dimension=3,
        poisson=[[0, "x3", "-x2"], [None, 0, "x1"], [None, None, 0]],
        points=[[0.1, 0.2, 0.3], [1.0, -1.0, 0.5]],
    )
    assert main(["check", "compat", "--manifest", m, "--samples", "3"]) == 0


@pytest.mark.skipif(shutil.which("weilpoisson") is None, reason="console script not installed")
def test_console_script():
    done = subprocess.run(["weilpoisson", "algebra-info", "R[T1]/(T1^2)"], capture_output=True, text=True)
    assert done.returncode == 0 and "height  1" in done.stdout
    done = subprocess.run(["weilpoisson", "check", "skew"], capture_output=True, text=True)
    assert done.returncode == 2
