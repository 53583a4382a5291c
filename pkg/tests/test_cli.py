import hashlib
import io

import pytest

from smsvm.cli import EXIT_FORMAT, EXIT_IO, EXIT_OK, EXIT_RANGE, EXIT_USAGE, run
from smsvm.dataset import load_libsvm


def call(*argv):
    buf = io.StringIO()
    code = run([str(a) for a in argv], out=buf)
    return code, buf.getvalue()


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture
def small_svm(tmp_path):
    path = tmp_path / "small.svm"
    code, _ = call("synth", "--shape", "tall", "--n", 120, "--m", 6, "--seed", 3, "-o", path)
    assert code == EXIT_OK
    return path


def test_synth_writes_libsvm(tmp_path):
    path = tmp_path / "w.svm"
    code, out = call("synth", "--shape", "wide", "--n", 10, "--m", 30, "--seed", 1, "-o", path)
    assert code == EXIT_OK and "10 x 30" in out
    d = load_libsvm(path)
    assert d.X.shape == (10, 30) and int((d.y > 0).sum()) == 5


def test_train_then_predict(tmp_path, small_svm, capsys):
    model = tmp_path / "model.json"
    code, out = call("train", "--data", small_svm, "--lambda", 0.01, "--mu", 0.01, "-o", model)
    assert code == EXIT_OK
    assert "final f:" in out and "nonzeros:" in out and "alpha schedule:" in out
    assert "training accuracy:" in out
    code, out = call("predict", "--model", model, "--data", small_svm)
    assert code == EXIT_OK
    lines = out.splitlines()
    assert len(lines) == 120 and set(lines) <= {"+1", "-1"}
    assert "accuracy:" in capsys.readouterr().err


def test_train_verbose_trace(tmp_path, small_svm, capsys):
    code, _ = call("train", "--data", small_svm, "-v", "-o", tmp_path / "m.json")
    assert code == EXIT_OK
    err = capsys.readouterr().err.splitlines()
    assert err[0] == "alpha,step,f_alpha,n_active,s"
    assert len(err) > 3


def test_train_with_sgd(tmp_path, small_svm):
    code, out = call("train", "--data", small_svm, "--solver", "adam", "--epochs", 5,
                     "-o", tmp_path / "m.json")
    assert code == EXIT_OK and "alpha schedule" not in out


def test_cv_writes_report(tmp_path, small_svm):
    report = tmp_path / "r.csv"
    code, out = call("cv", "--data", small_svm, "--k", 3, "--l", 2, "--lambda-grid", "0.1,1",
                     "--mu-grid", "0,0.01", "-o", report)
    assert code == EXIT_OK
    assert "smsvm: mean test accuracy" in out
    assert report.read_text().startswith("fold,lambda_star,mu_star,val_acc,test_acc,seconds\n")


def test_bench_table(tmp_path, small_svm):
    table = tmp_path / "b.csv"
    code, out = call("bench", "--data", small_svm, "--k", 2, "--epochs", 3, "--csv", table)
    assert code == EXIT_OK
    for m in ("smsvm", "nesterov", "adadelta", "adam"):
        assert m in out
    assert table.read_text().splitlines()[0] == "method,accuracy,seconds,nnz"


def test_csv_input_and_header(tmp_path):
    path = tmp_path / "d.csv"
    rows = ["a,b,label"] + [f"{i},{(i * 7) % 5},{1 if i % 2 else 0}" for i in range(20)]
    path.write_text("\n".join(rows) + "\n")
    code, _ = call("train", "--data", path, "--format", "csv", "--header", "--label-column",
                   "label", "-o", tmp_path / "m.json")
    assert code == EXIT_OK


def test_exit_codes(tmp_path, small_svm, capsys):
    code, _ = call("train", "--data", small_svm, "--beta", 1.5, "-o", tmp_path / "m.json")
    assert code == EXIT_RANGE
    err = capsys.readouterr().err
    assert "beta must be in (0,1)" in err and len(err.strip().splitlines()) == 1
    assert call("train", "--data", tmp_path / "missing.svm", "-o", tmp_path / "m.json")[0] == EXIT_IO
    assert call("train", "--bogus")[0] == EXIT_USAGE
    assert call("frobnicate")[0] == EXIT_USAGE
    bad = tmp_path / "bad.svm"
    bad.write_text("1 3:1 2:1\n")
    assert call("train", "--data", bad, "-o", tmp_path / "m.json")[0] == EXIT_FORMAT
    assert call("cv", "--data", small_svm, "--k", 1)[0] == EXIT_RANGE
    assert call("predict", "--model", tmp_path / "nope.json", "--data", small_svm)[0] == EXIT_IO
    distinct = {EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_RANGE, EXIT_FORMAT}
    assert len(distinct) == 5


def test_identical_invocations_are_bitwise_identical(tmp_path, small_svm):
    before = digest(small_svm)
    outs = []
    for run_id in range(2):
        model, report = tmp_path / f"m{run_id}.json", tmp_path / f"r{run_id}.csv"
        synth = tmp_path / f"s{run_id}.svm"
        assert call("synth", "--n", 40, "--m", 3, "--seed", 11, "-o", synth)[0] == EXIT_OK
        assert call("train", "--data", small_svm, "--mu", 0.01, "-o", model)[0] == EXIT_OK
        assert call("cv", "--data", small_svm, "--k", 2, "--l", 2, "--lambda-grid", "0.1",
                    "--mu-grid", "0,0.01", "--no-timings", "-o", report)[0] == EXIT_OK
        outs.append((digest(synth), digest(model), digest(report)))
    assert outs[0] == outs[1]
    assert digest(small_svm) == before
