from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from glvortex import io as gio
from glvortex.boundary import minimize_circle
from glvortex.cli import main
from glvortex.grid import PolarField, SectorField
from glvortex.radial import solve_radial_profile
from glvortex.symmetry import SymmetryClass, symmetrize


def _sector(seed, d=-1, sign="plus", Nr=6, Nt=4):
    sym = SymmetryClass(d, sign)
    M = 2 * sym.n * Nt
    raw = np.random.default_rng(seed).normal(size=(Nr + 1, M, 2))
    raw[0] = raw[0, 0]
    return SectorField.from_disk(symmetrize(sym, PolarField(np.linspace(0, 5.0, Nr + 1), raw)), sym)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), d=st.sampled_from([-1, -2]), sign=st.sampled_from(["plus", "minus"]),
       delta=st.floats(-0.99, 0.99))
def test_field_round_trip_is_lossless(tmp_path_factory, seed, d, sign, delta):
    f = _sector(seed, d, sign)
    path = tmp_path_factory.mktemp("f") / "field.csv"
    gio.write_field(path, f, delta)
    g, delta2 = gio.read_field(path)
    assert delta2 == delta and g.symmetry == f.symmetry
    assert np.array_equal(g.values, f.values)


def test_full_disk_round_trip(tmp_path):
    f = PolarField.on_disk(2.0, 5, 12, lambda x, y: (np.sin(x), y * y))
    gio.write_field(tmp_path / "disk.csv", f, 0.25)
    g, delta = gio.read_field(tmp_path / "disk.csv")
    assert delta == 0.25 and np.array_equal(g.values, f.values) and g.symmetry is None


def test_reader_rejects_broken_files(tmp_path):
    f = _sector(1)
    text = gio.field_csv(f, 0.1)
    lines = text.splitlines()
    # corrupt the closing column of ring 2 (j = Ntheta)
    idx = next(k for k, ln in enumerate(lines) if ln.startswith("2,4,"))
    parts = lines[idx].split(",")
    parts[4] = repr(float(parts[4]) + 0.5)
    lines[idx] = ",".join(parts)
    (tmp_path / "bad.csv").write_text("\n".join(lines) + "\n")
    with pytest.raises(gio.FormatError, match="gluing"):
        gio.read_field(tmp_path / "bad.csv")
    (tmp_path / "short.csv").write_text("\n".join(lines[:10]) + "\n")
    with pytest.raises(gio.FormatError):
        gio.read_field(tmp_path / "short.csv")
    (tmp_path / "other.csv").write_text("a,b\n1,2\nx,y\n")
    with pytest.raises(gio.FormatError):
        gio.read_field(tmp_path / "other.csv")


def test_phase_profile_rows_round_trip(tmp_path):
    sol = minimize_circle(-1, "minus", 0.1, M=64)
    gio.write_phase(tmp_path / "p.csv", sol.phase, 0.1, sol.C)
    ph = gio.read_phase(tmp_path / "p.csv")
    assert np.array_equal(ph.psi, sol.phase.psi) and ph.sign == "minus" and ph.meta["C"] == sol.C
    prof = solve_radial_profile(-1, R_max=40.0, N=512)
    gio.write_profile(tmp_path / "eta.csv", prof)
    back = gio.read_profile(tmp_path / "eta.csv")
    assert np.array_equal(back.eta, prof.eta) and np.array_equal(back.r_nodes, prof.r_nodes)
    rows = [(-1, "plus", 0.1, 20.0, 1.0 / 3, True)]
    gio.write_rows(tmp_path / "agg.csv", ("d", "sign", "delta", "R", "E", "flag"), rows)
    got = gio.read_rows(tmp_path / "agg.csv")[0]
    assert float(got["E"]) == 1.0 / 3 and got["flag"] == "true" and int(got["d"]) == -1


def test_read_config(tmp_path):
    (tmp_path / "c.cfg").write_text("# comment\nd = -2\nsign = minus   # trailing\nNr = 64\n")
    assert gio.read_config(tmp_path / "c.cfg") == {"d": "-2", "sign": "minus", "Nr": "64"}
    assert gio.parse_list("0.0, 0.05,0.1") == [0.0, 0.05, 0.1]


# --- command line -------------------------------------------------------------------------


def write_cfg(path, **kv):
    path.write_text("".join(f"{k} = {v}\n" for k, v in kv.items()))
    return path


def test_cli_solve_and_rerun(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "s.cfg", d=-1, sign="plus", delta=0.1, R=10, Nr=32, Ntheta=32,
                    output_field=tmp_path / "out" / "field.csv", output_summary=tmp_path / "out" / "summary.json")
    assert main(["solve", str(cfg)]) == 0
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["converged"] and summary["windings"] == {"5": -1, "7.5": -1, "9.5": -1}
    assert summary["in_threshold_region"] and summary["config"]["Nr"] == 32
    again = write_cfg(tmp_path / "r.cfg", d=-1, delta=0.1, R=10, Nr=32, Ntheta=32, init="file",
                      init_file=tmp_path / "out" / "field.csv", output_summary=tmp_path / "again.json")
    assert main(["solve", str(again)]) == 0
    assert json.loads((tmp_path / "again.json").read_text())["iterations"] <= 5
    wrong = write_cfg(tmp_path / "w.cfg", d=-1, sign="minus", delta=0.1, R=10, Nr=32, Ntheta=32, init="file",
                      init_file=tmp_path / "out" / "field.csv")
    assert main(["solve", str(wrong)]) == 1
    assert "class mismatch" in capsys.readouterr().err
    # diagnostics and pohozaev on the written field
    assert main(["diagnostics", str(tmp_path / "out" / "field.csv"), "--out", str(tmp_path / "diag.csv")]) == 0
    assert len(gio.read_rows(tmp_path / "diag.csv")) == 4
    assert main(["pohozaev", str(tmp_path / "out" / "field.csv"), "--radius", "3"]) == 0


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["boundary", "-d", "0"]) == 1
    assert main(["delta0", "--d-min", "1", "--d-max", "3"]) == 1
    with pytest.raises(SystemExit) as exc:
        main(["solve"])
    assert exc.value.code == 1
    bad = write_cfg(tmp_path / "bad.cfg", d=-1, delta=0.1, R=2)
    assert main(["solve", str(bad)]) == 1
    unknown = write_cfg(tmp_path / "u.cfg", d=-1, delta=0.1, colour="red")
    assert main(["solve", str(unknown)]) == 1
    slow = write_cfg(tmp_path / "slow.cfg", d=-1, delta=0.1, R=10, Nr=24, Ntheta=24, max_iters=2)
    assert main(["solve", str(slow)]) == 2
    capsys.readouterr()


def test_cli_env_override(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "s.cfg", d=-1, delta=0.1, R=10, Nr=24, Ntheta=24)
    env = {"GLVORTEX_OUT_SUMMARY": str(tmp_path / "env.json"), "GLVORTEX_TOL": "1e-6"}
    assert main(["solve", str(cfg)], environ=env) == 0
    assert json.loads((tmp_path / "env.json").read_text())["config"]["tol"] == 1e-6
    # the command line wins over the environment
    assert main(["solve", str(cfg), "--tol", "1e-7"], environ=env) == 0
    assert json.loads((tmp_path / "env.json").read_text())["config"]["tol"] == 1e-7
    capsys.readouterr()


def test_cli_delta0_table(capsys):
    assert main(["delta0", "--d-min", "-3", "--d-max", "-1"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].startswith("d,delta_star,delta0")
    assert lines[1].split(",")[2] == "0.1547005" and lines[2].split(",")[2] == "0.1304348"


def test_cli_boundary_radial_construct(tmp_path, capsys):
    assert main(["boundary", "-d", "-1", "--delta", "0.1", "--out", str(tmp_path / "b")]) == 0
    assert gio.read_phase(tmp_path / "b" / "phase.csv").M == 512
    assert main(["radial", "-d", "-1", "--N", "1024", "--out", str(tmp_path / "eta.csv")]) == 0
    assert main(["construct", "-d", "-1", "--N", "1", "--Nr", "32", "--Ntheta", "16",
                 "--curve", "1e-2", "1e-3", "--out", str(tmp_path / "c")]) == 0
    assert len(gio.read_rows(tmp_path / "c" / "energy_curve.csv")) == 2
    capsys.readouterr()


def test_cli_sweep(tmp_path, capsys):
    spec = write_cfg(tmp_path / "sw.cfg", d_list="-1", sign_list="plus, minus", delta_list="0.0, 0.05",
                     R_list="8", Nr=24, Ntheta=24, output_dir=tmp_path / "sw")
    assert main(["sweep", str(spec)]) == 0
    rows = gio.read_rows(tmp_path / "sw" / "aggregate.csv")
    assert len(rows) == 4 and all(r["winding"] == "-1" and r["status"] == "ok" for r in rows)
    assert [r["sign"] for r in rows] == ["plus", "plus", "minus", "minus"]
    assert (tmp_path / "sw" / "runs" / "d-1_minus_R8_delta0.05" / "field.csv").exists()
    failing = write_cfg(tmp_path / "f.cfg", d_list="-1", delta_list="0.0, 0.05", R_list="8", Nr=24,
                        Ntheta=24, max_iters=1, output_dir=tmp_path / "f")
    assert main(["sweep", str(failing)]) == 3
    rows = gio.read_rows(tmp_path / "f" / "aggregate.csv")
    assert rows[0]["status"] == "nonconverged" and len(rows) == 2
    empty = write_cfg(tmp_path / "e.cfg", d_list="", delta_list="0.0", R_list="8", output_dir=tmp_path / "e")
    assert main(["sweep", str(empty)]) == 1
    capsys.readouterr()
