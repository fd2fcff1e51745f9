import json
import math

import numpy as np
import pytest

from fraclap.cli import main, read_grid_csv
from fraclap.config import ConfigError, RunDescription, format_config, parse_config, parse_config_text
from fraclap.grid import GridFunction
from fraclap.harness import (
    PRESETS,
    ErrorReport,
    emit_csv,
    observed_orders,
    preset_parameters,
    read_report_csv,
    relative_linf_error,
    restrict_to,
    run_experiment,
    write_solution_csv,
)


def gf(values, a=-1.0, h=0.5):
    values = np.asarray(values, dtype=float)
    return GridFunction(((a, a + h * (values.size - 1)),), h, values)


# -- relative errors ------------------------------------------------------------------------

def test_relative_error_examples():
    ref = gf([0.0, 1.0, 2.0, 1.0, 0.0])
    assert relative_linf_error(ref, ref) == 0.0
    assert relative_linf_error(gf([0.0, 1.0, 2.02, 1.0, 0.0]), ref) == pytest.approx(0.01, rel=1e-12)


def test_relative_error_window_excludes_boundary():
    ref = gf([0.0, 1.0, 2.0, 1.0, 0.0])
    U = gf([5.0, 1.0, 2.0, 1.0, 5.0])
    assert relative_linf_error(U, ref, ((-0.5, 0.5),)) == 0.0
    assert relative_linf_error(U, ref) == pytest.approx(2.5)


def test_relative_error_nested_grid():
    x_fine = np.linspace(-1, 1, 9)
    fine = GridFunction(((-1, 1),), 0.25, x_fine**2)
    coarse = GridFunction(((-1, 1),), 0.5, np.linspace(-1, 1, 5) ** 2 + 0.1)
    assert relative_linf_error(coarse, fine) == pytest.approx(0.1)
    assert np.allclose(restrict_to(fine, coarse), np.linspace(-1, 1, 5) ** 2)
    off = GridFunction(((-0.9, 1.1),), 0.5, np.zeros(5))
    with pytest.raises(ValueError):
        restrict_to(fine, off)


def test_relative_error_callable_reference_2d():
    U = GridFunction(((-1, 1), (0, 1)), 0.5, np.zeros((5, 3)))
    err = relative_linf_error(U, lambda x, y: 1.0 + x + 0 * y)
    assert err == 1.0
    with pytest.raises(ValueError):
        relative_linf_error(U, lambda x, y: 0 * x)
    with pytest.raises(TypeError):
        relative_linf_error(U, 3.0)
    with pytest.raises(ValueError):
        relative_linf_error(U, lambda x, y: 1 + x, ((5, 6), (0, 1)))


# -- orders ------------------------------------------------------------------------------

def test_observed_orders_examples():
    assert observed_orders([5.91e-2, 1.39e-2]) == pytest.approx([2.088], abs=1e-3)
    assert observed_orders([1.0, 1.0, 1.0]) == [0.0, 0.0]
    assert observed_orders([1.0, 0.25, 0.0625]) == pytest.approx([2.0, 2.0], rel=1e-14)
    assert observed_orders([1.0, 0.5], params=[0.3, 0.1]) == pytest.approx([math.log(2) / math.log(3)])


@pytest.mark.parametrize("bad", [[1.0], [1.0, 0.0], [1.0, -1.0], [1.0, math.nan]])
def test_observed_orders_rejects(bad):
    with pytest.raises(ValueError):
        observed_orders(bad)


def test_report_rates_and_table():
    r = ErrorReport("h", [0.5, 0.25, 0.125], [4e-2, 1e-2, 2.5e-3])
    assert r.rates[0] is None and r.rates[1:] == pytest.approx([2.0, 2.0])
    text = r.table()
    assert "--" in text and "2.00" in text and len(text.splitlines()) == 4
    assert ErrorReport("h", [1.0], [1.0]).rates == [None]


# -- files ----------------------------------------------------------------------------

def test_emit_csv_format_and_determinism(tmp_path):
    r = ErrorReport("h", [0.5, 0.25], [5.914e-2, 1.395e-2], {"preset": "x", "values": np.array([1.0, 2.0])})
    a, b = emit_csv(r, tmp_path / "a.csv"), emit_csv(r, tmp_path / "b.csv")
    assert a.read_bytes() == b.read_bytes()
    assert a.with_suffix(".json").read_bytes() == b.with_suffix(".json").read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == "param,rel_error,rate"
    assert lines[1].endswith(",") and lines[1].split(",")[1] == "5.9139999999999998e-02"
    mantissa = lines[2].split(",")[2].split("e")[0]
    assert len(mantissa.replace(".", "").lstrip("-")) >= 10
    meta = json.loads(a.with_suffix(".json").read_text())
    assert meta["param_name"] == "h" and meta["values"] == [1.0, 2.0]
    assert read_report_csv(a) == ([0.5, 0.25], [5.914e-2, 1.395e-2])


def test_read_report_csv_errors(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_report_csv(p)
    p.write_text("param,rel_error\n1,zz\n")
    with pytest.raises(ValueError, match=":2:"):
        read_report_csv(p)


def test_solution_csv_roundtrip(tmp_path):
    U = GridFunction(((-1, 1), (0, 1)), 0.5, np.arange(15.0).reshape(5, 3))
    p = write_solution_csv(tmp_path / "s.csv", [(0.0, U), (1.0, U)])
    data = np.loadtxt(p, delimiter=",", skiprows=1)
    assert p.read_text().splitlines()[0] == "t,x,y,u"
    assert data.shape == (30, 4)
    assert np.array_equal(data[:15, 3], U.values.ravel())
    with pytest.raises(ValueError):
        write_solution_csv(tmp_path / "e.csv", [])


def test_read_grid_csv(tmp_path):
    p = tmp_path / "g.csv"
    p.write_text("x,u\n0.5,3\n0,2\n-0.5,1\n")
    U = read_grid_csv(p, 0.5)
    assert U.bounds == ((-0.5, 0.5),) and list(U.values) == [1.0, 2.0, 3.0]
    p.write_text("x,u\n0,1\n1,2\n")
    with pytest.raises(ValueError):
        read_grid_csv(p, 0.5)
    p.write_text("x,v\n0,1\n")
    with pytest.raises(ValueError):
        read_grid_csv(p, 0.5)


# -- configs --------------------------------------------------------------------------

CONFIG = """
# linear run
sigma = 1.0
h = 0.25
scheme = explicit   # trailing comment
t_final = 0.5
domain = -8 8
nonlinearity = F3
snapshot_times = 0.25
"""


def test_parse_config_and_roundtrip():
    desc = parse_config_text(CONFIG)
    assert desc.sigma == (1.0,) and desc.domain == ((-8.0, 8.0),) and desc.snapshot_times == (0.25,)
    assert parse_config_text(format_config(desc)) == desc
    multi = RunDescription(sigma=(1.0, 0.5), h=0.25, scheme="multidiffusion", t_final=1.0,
                           domain=((-2.0, 2.0), (-2.0, 2.0)), nonlinearity=("F1", "F2"), axes=((0,), (1,)),
                           initial="g1_radial_2d", cfl_override=True, tau_rule="h^2")
    assert parse_config_text(format_config(multi)) == multi


@pytest.mark.parametrize("text, lineno", [
    ("sigma = 1\nh = 0.1\nspeed = 3\n", 3),
    ("sigma = 1\nsigma = 0.5\n", 2),
    ("sigma = 1\nh = abc\n", 2),
    ("sigma = 1\nnot a pair\n", 2),
    ("scheme = upwind\n", 1),
    ("sigma = 1\nsafety = 1.5\n", 2),
])
def test_config_errors_carry_line_numbers(text, lineno):
    with pytest.raises(ConfigError) as info:
        parse_config_text(text, "run.cfg")
    assert info.value.lineno == lineno
    assert f"run.cfg:{lineno}:" in str(info.value)


def test_config_missing_keys():
    with pytest.raises(ConfigError, match="h, scheme, t_final"):
        parse_config_text("sigma = 1\n")


def test_config_builds_problem(tmp_path):
    cfg = tmp_path / "r.cfg"
    cfg.write_text(CONFIG)
    desc = parse_config(cfg)
    P = desc.problem()
    assert P.h == 0.25 and len(P.diffusion) == 1
    assert desc.scheme_config().snapshot_times == (0.25,)
    with pytest.raises(ConfigError):
        parse_config_text("sigma = 1, 0.5\nnonlinearity = F1, F2, F3\nh = 0.5\nscheme = explicit\nt_final = 1\n").problem()


# -- presets -------------------------------------------------------------------------

def test_preset_parameters_and_overrides():
    p = preset_parameters("exp4b", overrides={"hs": [0.5, 0.25]})
    assert p["hs"] == (0.5, 0.25) and p["h_ref"] == 2.0**-5
    assert preset_parameters("exp4b", paper_scale=True)["h_ref"] == 2.0**-7
    with pytest.raises(ValueError):
        preset_parameters("exp9")
    with pytest.raises(ValueError):
        preset_parameters("exp2", overrides={"bogus": 1})
    assert set(PRESETS) == {"exp1a", "exp1b", "exp2", "exp3_sigma0", "exp3_sigma2",
                            "exp4a_tau_h", "exp4a_tau_h2", "exp4b"}


def test_table1_shape_and_outputs(tmp_path):
    res = run_experiment("exp3_sigma2", {"h": 0.25, "domain": (-8.0, 8.0), "window": (-4.0, 4.0)}, out=tmp_path)
    assert len(res.report.rows()) == 5
    assert res.report.params == [0.1, 0.05, 0.025, 0.0125, 0.00625]
    assert all(e > 0 for e in res.report.errors)
    assert (tmp_path / "exp3_sigma2.csv").exists() and (tmp_path / "exp3_sigma2.json").exists()
    assert (tmp_path / "exp3_sigma2_reference.csv").exists()
    meta = json.loads((tmp_path / "exp3_sigma2.json").read_text())
    assert meta["preset"] == "exp3_sigma2" and "elapsed" not in meta


def test_budget_flag():
    res = run_experiment("exp4a_tau_h2", {"hs": (0.5,), "domain": (-20.0, 20.0), "window": (-5.0, 5.0),
                                          "budget": 0.0})
    assert res.budget_exceeded


# -- CLI ---------------------------------------------------------------------------------

def test_cli_weights(capsys):
    assert main(["weights", "--sigma", "1", "--h", "1", "--radius", "3", "--tail", "exact"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "j,kappa" and len(lines) == 8
    j, k = lines[4].split(",")
    assert j == "1" and float(k) == pytest.approx(1 / (math.pi * 0.75), rel=1e-14)
    assert lines[-1].startswith("DIAGONAL_MASS,")
    assert float(lines[-1].split(",")[1]) == pytest.approx(4 / math.pi, rel=1e-14)


def test_cli_weights_2d(capsys):
    assert main(["weights", "--sigma", "1", "--h", "1", "--radius", "2", "--dim", "2"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "j1,j2,kappa" and len(lines) == 26


def test_cli_apply(tmp_path):
    src = tmp_path / "u.csv"
    x = np.arange(-4, 4.25, 0.25)
    np.savetxt(src, np.column_stack([x, 1 / (1 + x * x)]), delimiter=",", header="x,u", comments="")
    out = tmp_path / "v.csv"
    assert main(["apply", "--sigma", "1", "--h", "0.25", "--in", str(src), "--out", str(out)]) == 0
    data = np.loadtxt(out, delimiter=",", skiprows=1)
    assert data.shape == (x.size, 2) and data[x.size // 2, 1] < 0


def test_cli_solve_and_rates(tmp_path, capsys):
    cfg = tmp_path / "r.cfg"
    cfg.write_text(CONFIG)
    out = tmp_path / "sol.csv"
    assert main(["solve", "--config", str(cfg), "--out", str(out)]) == 0
    data = np.loadtxt(out, delimiter=",", skiprows=1)
    assert sorted(set(data[:, 0])) == pytest.approx([0.25, 0.5], abs=1 / 12 + 1e-12)  # nearest step, tau = 1/6
    rep = tmp_path / "rep.csv"
    emit_csv(ErrorReport("h", [0.5, 0.25], [4e-2, 1e-2]), rep)
    assert main(["rates", "--in", str(rep)]) == 0
    assert capsys.readouterr().out.splitlines()[2].endswith("2.0000000000000000e+00")


def test_cli_experiment(tmp_path, capsys):
    code = main(["experiment", "exp4a_tau_h2", "--out", str(tmp_path), "--set", "hs=0.5,0.25",
                 "--set", "domain=-40,40", "--set", "window=-10,10"])
    assert code == 0
    assert "rate" in capsys.readouterr().out
    assert len((tmp_path / "exp4a_tau_h2.csv").read_text().splitlines()) == 3


def test_cli_exit_codes(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(CONFIG + "speed = 2\n")
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o.csv")]) == 2
    assert main(["solve", "--config", str(tmp_path / "missing.cfg"), "--out", "x"]) == 2
    assert main(["weights", "--sigma", "1"]) == 2
    assert main(["weights", "--sigma", "2.5", "--h", "1", "--radius", "3"]) == 2
    assert main(["experiment", "exp2", "--set", "bogus=1"]) == 2
    cfl = tmp_path / "cfl.cfg"
    cfl.write_text(CONFIG + "tau_rule = 0.5\n")
    assert main(["solve", "--config", str(cfl), "--out", str(tmp_path / "o.csv")]) == 2
    nan = tmp_path / "nan.cfg"
    nan.write_text(CONFIG + "theta = 1\nfp_max_iters = 1\ntau_rule = 0.5\n")
    nan.write_text(nan.read_text().replace("explicit", "theta"))
    assert main(["solve", "--config", str(nan), "--out", str(tmp_path / "o.csv")]) == 3
    assert main(["--help"]) == 0
