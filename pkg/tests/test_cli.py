import csv
import io
import math

import numpy as np
import pytest

from digitalqmc.cli import (
    EXPERIMENT_HEADER,
    ExperimentConfig,
    draw_dimension,
    experiment_csv,
    main,
    run_experiment,
    transform_bench,
)
from digitalqmc.integrands import WalshPolynomial, keister_reference


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def parse_kv(text):
    return dict(line.split("=", 1) for line in text.strip().splitlines())


def test_integrate_constant(capsys):
    code, out, _ = run(capsys, "integrate", "--integrand", "const", "--dim", "3", "--tol", "1e-3")
    kv = parse_kv(out)
    assert code == 0
    assert float(kv["estimate"]) == 1.0 and kv["n"] == "1024" and kv["met"] == "true"


def test_integrate_keister(capsys):
    code, out, _ = run(capsys, "integrate", "--integrand", "keister", "--dim", "1", "--tol", "1e-3")
    assert code == 0
    assert abs(float(parse_kv(out)["estimate"]) - keister_reference(1)) <= 1e-3


def test_integrate_budget_exit_code(capsys, tmp_path):
    hist = tmp_path / "h.csv"
    code, out, _ = run(capsys, "integrate", "--dim", "6", "--tol", "1e-9", "--mmax", "11", "--history", str(hist))
    assert code == 2
    assert parse_kv(out)["met"] == "false"
    assert hist.read_text().startswith("m,n,S_tilde,bound,elapsed_seconds\n")


@pytest.mark.parametrize(
    "argv",
    [
        ["integrate", "--tol", "0"],
        ["integrate", "--tol", "-1"],
        ["integrate", "--dim", "0"],
        ["integrate", "--integrand", "nope"],
        ["integrate", "--mmax", "5"],
        ["integrate", "--bogus"],
        ["dump-net", "--m", "-1"],
        ["no-such-command"],
        [],
    ],
)
def test_bad_flags_exit_1(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        code = main(argv)
        raise SystemExit(code)
    assert exc.value.code == 1


def test_integrate_walsh_polynomial_file(capsys, tmp_path):
    path = tmp_path / "p.csv"
    path.write_text(WalshPolynomial([[0, 0], [3, 1], [1, 2]], [0.75, 0.5, -0.25]).to_csv())
    code, out, _ = run(capsys, "integrate", "--integrand", f"walshpoly:{path}", "--tol", "1e-6")
    kv = parse_kv(out)
    assert code == 0
    assert abs(float(kv["estimate"]) - 0.75) <= 1e-12
    code, _, _ = run(capsys, "integrate", "--integrand", f"walshpoly:{path}", "--dim", "3")
    assert code == 1


def test_dump_net_raw(capsys):
    code, out, _ = run(capsys, "dump-net", "--dim", "2", "--m", "8", "--raw")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == ["i", "x1", "x2"] and len(rows) == 257
    pts = {int(r[0]): (float(r[1]), float(r[2])) for r in rows[1:]}
    assert pts[1] == (0.5, 0.5) and pts[2] == (0.25, 0.75) and pts[4] == (0.125, 0.625)


def test_dump_net_scrambled_origin(capsys):
    _, out, _ = run(capsys, "dump-net", "--dim", "3", "--m", "0", "--seed", "5")
    rows = out.strip().splitlines()
    assert len(rows) == 2
    x = [float(v) for v in rows[1].split(",")[1:]]
    assert all(0 <= v < 1 for v in x) and any(v > 0 for v in x)
    _, again, _ = run(capsys, "dump-net", "--dim", "3", "--m", "0", "--seed", "5", "--scrambled")
    assert again == out


def test_dimension_law():
    rng = np.random.default_rng(0)
    d = np.array([draw_dimension(rng) for _ in range(20000)])
    assert d.min() == 1 and d.max() == 19  # d = 20 only at the measure-zero endpoint
    # P(d >= k) = 1 - log(k) / log(20)
    for k in (2, 5, 10):
        assert np.mean(d >= k) == pytest.approx(1 - math.log(k) / math.log(20), abs=0.015)


def test_experiment_single_run(tmp_path, capsys):
    out = tmp_path / "exp.csv"
    code, summary, _ = run(capsys, "keister-experiment", "--replications", "1", "--dim", "1",
                           "--tol", "1e-3", "--output", str(out))
    rows = list(csv.DictReader(out.open()))
    assert code == 0 and len(rows) == 1
    assert list(rows[0]) == EXPERIMENT_HEADER
    assert rows[0]["met"] == "true" and float(rows[0]["abs_error"]) <= 1e-3
    assert "success_rate=1.0000" in summary


def test_experiment_runs_are_independent_of_count():
    small = run_experiment(ExperimentConfig(replications=3, dim=2, seed=9, timing=False))
    large = run_experiment(ExperimentConfig(replications=5, dim=2, seed=9, timing=False))
    assert experiment_csv(small, False).splitlines() == experiment_csv(large, False).splitlines()[:4]
    assert len({r["estimate"] for r in large}) == 5


def test_experiment_parallel_matches_serial():
    cfg = ExperimentConfig(replications=4, seed=3, timing=False, m_max=14)
    serial = experiment_csv(run_experiment(cfg), False)
    parallel = experiment_csv(run_experiment(ExperimentConfig(replications=4, seed=3, timing=False, m_max=14,
                                                              jobs=2)), False)
    assert serial == parallel


def test_experiment_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(replications=0)
    with pytest.raises(ValueError):
        ExperimentConfig(tol=0)


def test_experiment_unwritable_output(capsys, tmp_path):
    code, _, err = run(capsys, "keister-experiment", "--replications", "1", "--dim", "1",
                       "--output", str(tmp_path / "missing" / "x.csv"))
    assert code == 1 and "cannot write" in err


def test_transform_bench_rows(capsys):
    rows = transform_bench(10, 13, repeats=1, direct_max=11)
    assert [r["m"] for r in rows] == [10, 11, 12, 13]
    assert rows[0]["ratio"] is None and rows[1]["ratio"] > 0
    assert rows[1]["direct_seconds"] is not None and rows[2]["direct_seconds"] is None
    code, out, _ = run(capsys, "transform-bench", "--mmax", "12", "--repeats", "1", "--direct-max", "10")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "m,n,seconds,ratio,direct_seconds" and len(lines) == 4
    code, _, _ = run(capsys, "transform-bench", "--mmax", "25")
    assert code == 1


def test_keister_ref_command(tmp_path, capsys):
    out = tmp_path / "keister_ref.csv"
    code, _, _ = run(capsys, "keister-ref", "--max-dim", "3", "--output", str(out))
    lines = out.read_text().splitlines()
    assert code == 0 and lines[0] == "d,value,abs_error_bound" and len(lines) == 4
