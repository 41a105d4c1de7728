import csv
import json

import numpy as np
import pytest

from crossperm import engines
from crossperm.cli import main
from crossperm.sampling import RngState, fork
from crossperm.statistics import james_stat, summarize, welch_t


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def save(path, arr):
    arr = np.asarray(arr, dtype=float)
    np.savetxt(path, arr.reshape(len(arr), -1), delimiter=",", fmt="%.17g")
    return path


@pytest.fixture
def pair(tmp_path, gen):
    return save(tmp_path / "xy.csv", gen.standard_normal((25, 2)))


def test_corr_asymptotic_uncorrelated(tmp_path, capsys):
    # x and y = x^2 - mean on a symmetric grid have r exactly 0
    x = np.arange(-5.0, 6.0)
    y = x**2
    path = save(tmp_path / "xy.csv", np.column_stack([x, y]))
    code, out, _ = run(capsys, "corr", path, "--method", "asymptotic", "--json")
    doc = json.loads(out)
    assert code == 0 and doc["schema"] == "1"
    assert abs(doc["correlation"]) < 1e-15
    assert doc["pvalue"] == pytest.approx(1.0, abs=1e-12)


def test_corr_two_files_match_one(tmp_path, capsys, gen):
    xy = gen.standard_normal((12, 2))
    both = save(tmp_path / "xy.csv", xy)
    xs, ys = save(tmp_path / "x.csv", xy[:, 0]), save(tmp_path / "y.csv", xy[:, 1])
    _, a, _ = run(capsys, "corr", both, "--seed", 3)
    _, b, _ = run(capsys, "corr", xs, ys, "--seed", 3)
    assert a == b and a.startswith("test=corr method=efficient")


def test_exit_codes(tmp_path, capsys, pair):
    const = save(tmp_path / "c.csv", np.column_stack([np.ones(8), np.arange(8.0)]))
    assert run(capsys, "corr", const)[0] == 3
    assert run(capsys, "corr", pair, "--method", "neto")[0] == 1
    assert run(capsys, "corr", pair, "--B", 0)[0] == 1
    with pytest.raises(SystemExit) as exc:
        main(["corr", str(pair), "--seed", "-4"])
    assert exc.value.code == 1
    assert run(capsys, "corr", tmp_path / "missing.csv")[0] == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3,x\n4,5\n6,7\n8,9\n")
    code, _, err = run(capsys, "corr", bad)
    assert code == 2 and "row 2" in err
    with pytest.raises(SystemExit) as exc:
        main(["nope"])
    assert exc.value.code == 1


def test_usage_error_before_reading_files(tmp_path, capsys):
    # The file does not exist: a usage problem must still win.
    code, _, err = run(capsys, "ttest2", tmp_path / "absent.csv")
    assert code == 1 and "--labels" in err


def test_james_singular_exit(tmp_path, capsys, gen):
    y = gen.standard_normal((10, 2))
    y1 = np.column_stack([y[:, 0], 2 * y[:, 0]])
    a, b = save(tmp_path / "a.csv", y1), save(tmp_path / "b.csv", y)
    code, _, err = run(capsys, "james", a, b)
    assert code == 3 and "SingularCovariance" in err


@pytest.mark.parametrize("cmd", ["corr", "ttest2", "james", "batch", "validate", "bench"])
def test_help_shows_defaults(cmd, capsys):
    with pytest.raises(SystemExit) as exc:
        main([cmd, "--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    assert "default" in text
    if cmd != "bench":
        assert "999" in text and "42" in text


def test_ttest2_asymptotic_vs_bootstrap(tmp_path, capsys, gen):
    a = save(tmp_path / "a.csv", gen.standard_normal(100))
    b = save(tmp_path / "b.csv", 0.2 + 1.5 * gen.standard_normal(100))
    docs = {}
    for method in ("asymptotic", "efficient"):
        code, out, _ = run(capsys, "ttest2", a, b, "--method", method, "--json")
        assert code == 0
        docs[method] = json.loads(out)
    assert docs["asymptotic"]["statistic"] == docs["efficient"]["statistic"]
    assert abs(docs["asymptotic"]["pvalue"] - docs["efficient"]["pvalue"]) < 0.1


def test_ttest2_labels(tmp_path, capsys, gen):
    v = gen.standard_normal(10)
    vals = save(tmp_path / "v.csv", v)
    labels = ",".join(["a"] * 4 + ["b"] * 6)
    code, out, _ = run(capsys, "ttest2", vals, "--labels", labels, "--method", "asymptotic",
                       "--json")
    assert code == 0
    assert json.loads(out)["statistic"] == welch_t(summarize(v[:4]), summarize(v[4:]))
    code, _, _ = run(capsys, "ttest2", vals, "--labels", "a,b,a")
    assert code == 2


def test_james_d1_is_welch_squared(tmp_path, capsys, gen):
    v1, v2 = gen.standard_normal(15), 2 * gen.standard_normal(20)
    a, b = save(tmp_path / "a.csv", v1), save(tmp_path / "b.csv", v2)
    _, out, _ = run(capsys, "james", a, b, "--json", "--B", 99)
    doc = json.loads(out)
    t = welch_t(summarize(v1), summarize(v2))
    assert doc["statistic"] == pytest.approx(t * t, rel=1e-10)
    assert doc["counters"] == {"covariances": 20, "solves": 100}


def test_batch_file(tmp_path, capsys, gen):
    m = gen.standard_normal((40, 100))
    path = tmp_path / "m.csv"
    np.savetxt(path, m, delimiter=",", header=",".join(f"g{j}" for j in range(100)),
               comments="")
    labels = tmp_path / "labels.txt"
    labels.write_text("\n".join(["case"] * 20 + ["ctrl"] * 20) + "\n")
    code, out, _ = run(capsys, "batch", path, "--labels", labels, "--B", 199,
                       "--output", tmp_path / "out")
    assert code == 0 and "columns=100" in out
    with open(tmp_path / "out" / "batch_results.tsv") as fh:
        rows = list(csv.DictReader(fh, delimiter="\t"))
    assert len(rows) == 100 and rows[0]["name"] == "g0"
    first = engines.boot_ttest2_efficient(m[:20, 0], m[20:, 0], 199, fork(RngState(42), 1)[0])
    assert float(rows[0]["pvalue"]) == first.pvalue


def test_batch_usage(capsys, tmp_path):
    assert run(capsys, "batch")[0] == 1
    assert run(capsys, "batch", "--synthetic", "3x3")[0] == 1
    assert run(capsys, "batch", "--synthetic", "10by3")[0] == 1


def test_validate_writes_files(tmp_path, capsys):
    code, out, _ = run(capsys, "validate", "welch", "--reps", 20, "--B", 99, "--n", 10,
                       "--output", tmp_path)
    assert code == 0 and "rejection_rate=" in out
    doc = json.loads((tmp_path / "validate_welch_efficient.json").read_text())
    assert doc["schema"] == "1" and doc["reps"] == 20
    assert (tmp_path / "validate_welch_efficient_quantiles.tsv").exists()
    assert run(capsys, "validate", "corr", "--d", 2)[0] == 1
    assert run(capsys, "validate", "james", "--method", "naive")[0] == 1


def test_bench_desk_smoke(tmp_path, capsys):
    code, out, _ = run(capsys, "bench", "--desk", "--tests", "corr", "--reps", 1,
                       "--output", tmp_path)
    assert code == 0
    assert out.splitlines()[0] == "records=18 preset=desk"
    assert (tmp_path / "bench.csv").exists()
    assert (tmp_path / "speedup_corr_naive_vs_efficient.svg").exists()
    assert run(capsys, "bench", "--tests", "corr,foo")[0] == 1


def test_james_direct_statistic_matches(tmp_path, capsys, gen):
    y1, y2 = gen.standard_normal((12, 3)), gen.standard_normal((14, 3))
    a, b = save(tmp_path / "a.csv", y1), save(tmp_path / "b.csv", y2)
    _, out, _ = run(capsys, "james", a, b, "--json", "--method", "ordinary", "--B", 50)
    V = np.cov(y1, rowvar=False) / 12 + np.cov(y2, rowvar=False) / 14
    expected = james_stat(y1.mean(axis=0), y2.mean(axis=0), V)
    assert json.loads(out)["statistic"] == pytest.approx(expected, rel=1e-12)
