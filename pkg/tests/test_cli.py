import json
import time

import numpy as np
import pytest

from supertheta.chernforms import curvature_L
from supertheta.cli import main
from supertheta.geometry import Chart, base_point
from supertheta.properties import CHECKS


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write_lattice(tmp_path, gram, name="lat.ini"):
    p = tmp_path / name
    p.write_text("[lattice]\ngram = " + gram + "\n")
    return str(p)


def test_eval_form_at_zero_is_minus_curvature(capsys, tmp_path):
    lat = write_lattice(tmp_path, "2 0 0; 0 -2 0; 0 0 -2")
    code, out, _ = run(capsys, "eval-form", "--lattice", lat, "--point", "0.1+0.2j")
    assert code == 0
    rec = json.loads(out)["forms"][0]
    deg2 = {r["monomial"]: complex(*r["value"]) for r in rec["phi"] if sum(r["bidegree"]) == 2}
    chart = Chart(base_point(np.diag([2.0, -2.0, -2.0])))
    curv = curvature_L(chart, np.array([0.1 + 0.2j]))
    assert abs(deg2["du0^dubar0"] + curv[(1, 1)]) < 1e-14
    assert "phi2_explicit" not in rec


def test_eval_form_on_the_locus(capsys):
    # v = e1 has h = 0 at the base point: the engine path is used, not the explicit formula
    code, out, _ = run(capsys, "eval-form", "--lattice", "D1", "--vectors", "1 0 0")
    assert code == 0
    rec = json.loads(out)["forms"][0]
    assert rec["h"] == 0 and "phi2_explicit" not in rec
    code, out, _ = run(capsys, "eval-form", "--lattice", "D1", "--vectors", "0 1 0")
    assert "phi2_explicit" in json.loads(out)["forms"][0]


def test_malformed_gram(capsys, tmp_path):
    lat = write_lattice(tmp_path, "2 0 0; 0 -2 x; 0 0 -2")
    code, _, err = run(capsys, "eval-form", "--lattice", lat)
    assert code == 2 and "(2, 3)" in err
    lat = write_lattice(tmp_path, "2 1 0; 0 -2 0; 0 0 -2", "b.ini")
    code, _, err = run(capsys, "eval-form", "--lattice", lat)
    assert code == 2 and "(2, 1)" in err and "(1, 2)" in err
    lat = write_lattice(tmp_path, "1 0 0; 0 -2 0; 0 0 -2", "c.ini")
    assert run(capsys, "theta", "--lattice", lat)[0] == 2
    assert run(capsys, "theta", "--lattice", str(tmp_path / "missing.ini"))[0] == 2


def test_bad_arguments(capsys):
    assert run(capsys, "theta", "--lattice", "UU", "--tau=-1j")[0] == 2
    assert run(capsys, "modularity", "--lattice", "UU", "--words", "SX")[0] == 2
    assert run(capsys, "eval-form", "--lattice", "UU", "--point", "0.1")[0] == 2
    assert run(capsys, "enumerate", "--lattice", "UU", "--coset", "5")[0] == 2
    with pytest.raises(SystemExit) as info:
        main(["no-such-command"])
    assert info.value.code == 2


def test_theta_bit_identical(capsys, tmp_path):
    outs = []
    for k, workers in enumerate(("1", "1", "4")):
        path = tmp_path / f"t{k}.json"
        t0 = time.perf_counter()
        code, _, _ = run(capsys, "theta", "--lattice", "UU", "--tau", "1j", "--seed", "4",
                         "--workers", workers, "--out", str(path))
        assert code == 0 and time.perf_counter() - t0 < 60
        outs.append(path.read_bytes())
    assert outs[0] == outs[1] == outs[2]
    rec = json.loads(outs[0])["records"][0]
    assert rec["tail"] < 1e-8


def test_truncation_exit_code(capsys):
    code, _, err = run(capsys, "theta", "--lattice", "UU", "--tol", "1e-300", "--max-points", "20000")
    assert code == 3
    assert "R=" in err and "tail=" in err


def test_csv_and_other_commands(capsys, tmp_path):
    code, out, _ = run(capsys, "weilrep-matrices", "--lattice", "A1", "--format", "csv")
    assert code == 0 and out.splitlines()[0] == "row,col,S_re,S_im" and len(out.splitlines()) == 5
    code, out, _ = run(capsys, "enumerate", "--lattice", "UU", "--radius", "5")
    assert code == 0 and json.loads(out)["count"] == 569
    code, out, _ = run(capsys, "fourier", "--lattice", "UU", "--seed", "1", "--n", "0,1,2")
    assert code == 0
    for rec in json.loads(out)["coefficients"]:
        q, d = complex(*rec["quadrature"]), complex(*rec["direct"])
        assert abs(q - d) < 1e-8 * abs(d)
    code, out, _ = run(capsys, "modularity", "--lattice", "D1", "--seed", "2", "--words", "S,T")
    report = json.loads(out)
    assert code == 0 and all(r["residual"] < 1e-6 for r in report["residuals"])
    assert report["weight_exponent"]["fitted"] == pytest.approx(1.5, abs=1e-8)
    code, out, _ = run(capsys, "localization", "--lattice", "UU", "--point", "0.2,0.1j",
                       "--vectors", "1 1 0.5 0", "--ts", "1,20,20", "--steps", "3")
    assert code == 0
    fits = json.loads(out)["fits"]
    assert fits[-1]["rate"] == pytest.approx(fits[-1]["predicted"], rel=0.1)


def test_property_suite_report(capsys):
    code, out, _ = run(capsys, "property-suite")
    report = json.loads(out)
    names = [r["name"] for r in report["results"]]
    assert code == 0 and report["passed"] and report["seed"] == 0
    assert sorted(names) == sorted(c.name for c in CHECKS) and len(set(names)) == len(names)


def test_property_suite_mutation(capsys):
    code, out, _ = run(capsys, "property-suite", "--mutate-koszul", "--names", "supertrace_cyclicity")
    assert code == 1
    assert not json.loads(out)["results"][0]["passed"]
