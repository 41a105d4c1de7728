import numpy as np
import pytest

from crossperm import engines, io
from crossperm.errors import LabelMismatch, NonNumericCell, RaggedRows
from crossperm.sampling import RngState, fork
from crossperm.statistics import TestResult


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_load_plain_csv(tmp_path):
    m = io.load_matrix(write(tmp_path, "a.csv", "1,2\n3,4\n"))
    np.testing.assert_array_equal(m.values, [[1, 2], [3, 4]])
    assert m.column_names is None


def test_load_header_and_tabs(tmp_path):
    m = io.load_matrix(write(tmp_path, "a.tsv", "g1\tg2\tg3\n1.5\t2\t-3e2\n0\t1\t2\n"))
    assert m.column_names == ["g1", "g2", "g3"]
    assert m.values.shape == (2, 3)
    assert m.values[0, 2] == -300.0


def test_load_rownames(tmp_path):
    m = io.load_matrix(write(tmp_path, "a.csv", "id,a,b\nr1,1,2\nr2,3,4\n"), rownames=True)
    assert m.row_names == ["r1", "r2"] and m.column_names == ["a", "b"]


def test_non_numeric_cell_location(tmp_path):
    with pytest.raises(NonNumericCell) as exc:
        io.load_matrix(write(tmp_path, "a.csv", "1,2\n3,abc\n"), header=False)
    assert (exc.value.row, exc.value.col) == (2, 2)


def test_ragged_rows(tmp_path):
    with pytest.raises(RaggedRows) as exc:
        io.load_matrix(write(tmp_path, "a.csv", "1,2\n3\n"))
    assert exc.value.row == 2


def test_missing_cells_flagged(tmp_path):
    m = io.load_matrix(write(tmp_path, "a.csv", "1,NA\n,4\n5,6\n"))
    assert m.missing.tolist() == [[False, True], [True, False], [False, False]]


def test_group_labels(tmp_path):
    g = io.GroupLabels.parse("case,case,ctrl,ctrl,case")
    assert g.labels.tolist() == [0, 0, 1, 1, 0] and g.levels == ("case", "ctrl")
    p = write(tmp_path, "labels.txt", "a\nb\n\na\nb\n")
    assert io.GroupLabels.read(p).labels.tolist() == [0, 1, 0, 1]
    with pytest.raises(LabelMismatch):
        io.GroupLabels.parse("a,b,c")
    with pytest.raises(LabelMismatch):
        io.GroupLabels.parse("a,a,a,b")


def test_batch_degenerate_and_missing_columns():
    clean = np.random.default_rng(3).standard_normal(16)
    values = np.column_stack([np.full(16, 3.0), np.r_[np.arange(15.0), np.nan], clean])
    m = io.DataMatrix(values)
    g = io.GroupLabels(np.repeat([0, 1], 8))
    res = io.batch_welch(m, g, "efficient", 99, RngState(1))
    assert res[0].flags == ("degenerate",) and res[0].pvalue == 1.0
    assert res[1].flags == ("skipped:missing",) and np.isnan(res[1].pvalue)
    assert res[2].flags == ()


def test_batch_single_column_matches_direct_call(gen):
    col = gen.standard_normal(10)
    g = io.GroupLabels(np.array([0] * 5 + [1] * 5))
    res = io.batch_welch(io.DataMatrix(col[:, None]), g, "efficient", 499, RngState(8))
    direct = engines.boot_ttest2_efficient(col[:5], col[5:], 499, fork(RngState(8), 1)[0])
    assert res[0] == direct


def test_batch_label_mismatch(gen):
    with pytest.raises(LabelMismatch):
        io.batch_welch(io.DataMatrix(gen.standard_normal((6, 2))),
                       io.GroupLabels(np.array([0, 0, 1, 1])), "efficient", 9, RngState(0))


def test_batch_parallel_equals_serial_and_is_positional():
    m, g = io.synthetic_matrix(12, 30, RngState(4))
    serial = io.batch_welch(m, g, "efficient", 199, RngState(5), threads=1)
    parallel = io.batch_welch(m, g, "efficient", 199, RngState(5), threads=4)
    assert serial == parallel
    order = np.random.default_rng(0).permutation(30)
    permuted = io.batch_welch(io.DataMatrix(m.values[:, order]), g, "efficient", 199,
                              RngState(5))
    # Streams follow position: observed statistics move with their columns.
    assert [r.statistic for r in permuted] == [serial[j].statistic for j in order]


@pytest.mark.parametrize("method", io.BATCH_METHODS)
def test_batch_methods_run(method):
    m, g = io.synthetic_matrix(10, 4, RngState(2))
    res = io.batch_welch(m, g, method, 99, RngState(3))
    assert len(res) == 4 and all(r.method == method for r in res)


def test_write_results_roundtrip(tmp_path):
    results = [
        TestResult(1.2345678901234567, 0.012345678901234567, "efficient", 1024),
        TestResult(0.0, 1.0, "efficient", 1024, ("degenerate",)),
        TestResult(float("nan"), float("nan"), "efficient", 0, ("skipped:missing",)),
    ]
    path = tmp_path / "r.tsv"
    io.write_results(results, path, ["a", "b", "c"])
    lines = path.read_text().splitlines()
    assert lines[0] == "name\tstatistic\tpvalue\tmethod\tresamples_effective\tflags"
    assert lines[1].endswith("\t")
    assert "0.012345678901234567" in lines[1]
    names, back = io.read_results(path)
    assert names == ["a", "b", "c"]
    assert back[:2] == results[:2]
    assert np.isnan(back[2].pvalue) and back[2].flags == ("skipped:missing",)


def test_synthetic_matrix_shape():
    m, g = io.synthetic_matrix(40, 7, RngState(0))
    assert m.values.shape == (40, 7)
    assert g.labels.sum() == 20
    assert m.column_names[0] == "col1"
