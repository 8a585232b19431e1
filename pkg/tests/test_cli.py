import subprocess
import sys

import numpy as np
import pytest

from helpers import random_ratings

from prefwalk import load_ratings, write_ratings
from prefwalk.cli import load_config, main
from prefwalk.errors import NumericalError
from prefwalk.reference import dense_reference_ranking
from prefwalk import derive_preferences


@pytest.fixture
def ratings_file(tmp_path):
    rng = np.random.default_rng(42)
    ds = random_ratings(rng, n_users=6, n_items=12, min_per_user=6,
                        max_per_user=7, raw_offset=1)
    path = tmp_path / "ratings.tsv"
    write_ratings(ds, path)
    return path


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_split_writes_files(ratings_file, tmp_path, capsys):
    out = tmp_path / "splits"
    code, stdout, _ = run_cli(capsys, "split", ratings_file, "--upl", "3",
                              "--min-test", "2", "--repetitions", "2",
                              "--seed", "5", "--out", out)
    assert code == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["test_upl3_rep0.tsv", "test_upl3_rep1.tsv",
                     "train_upl3_rep0.tsv", "train_upl3_rep1.tsv"]
    train = load_ratings(out / "train_upl3_rep0.tsv")
    assert all(n == 3 for n in train.profile_sizes())
    assert "kept 6 users" in stdout


def test_split_reruns_byte_identical(ratings_file, tmp_path, capsys):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        code, _, _ = run_cli(capsys, "split", ratings_file, "--upl", "3",
                             "--min-test", "2", "--seed", "5", "--out", out)
        assert code == 0
    for p in out1.iterdir():
        assert p.read_bytes() == (out2 / p.name).read_bytes()


def test_split_impossible_upl_is_data_error(ratings_file, tmp_path, capsys):
    code, _, err = run_cli(capsys, "split", ratings_file, "--upl", "500",
                           "--out", tmp_path / "x")
    assert code == 2
    assert "error" in err


def test_recommend_output_shape(ratings_file, capsys):
    code, stdout, _ = run_cli(capsys, "recommend", ratings_file,
                              "--user", "1", "--top-k", "2")
    assert code == 0
    lines = stdout.strip().splitlines()
    assert len(lines) == 2
    for rank, line in enumerate(lines, start=1):
        user, got_rank, item, score = line.split("\t")
        assert user == "1" and int(got_rank) == rank
        assert 0.0 <= float(score) <= 1.0


def test_recommend_deterministic(ratings_file, capsys):
    args = ["recommend", ratings_file, "--user", "2,3", "--top-k", "3"]
    code1, out1, _ = run_cli(capsys, *args)
    code2, out2, _ = run_cli(capsys, *args)
    assert code1 == code2 == 0
    assert out1 == out2


def test_recommend_agrees_with_dense_reference(tmp_path, capsys):
    lines = ["1\t10\t5", "1\t11\t3", "1\t12\t1",
             "2\t10\t2", "2\t11\t5", "2\t12\t4",
             "3\t10\t4", "3\t12\t5"]
    path = tmp_path / "tiny.tsv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    ds = load_ratings(path)
    code, stdout, _ = run_cli(capsys, "recommend", path, "--user", "3", "--top-k", "1")
    assert code == 0
    got_items = [int(line.split("\t")[2]) for line in stdout.strip().splitlines()]
    store = derive_preferences(ds)
    ref = dense_reference_ranking(store, target=2, k=1,
                                  exclude=set(int(i) for i in ds.user_rows(2)[0]))
    assert got_items == [int(ds.raw_item_ids[i]) for i in ref.items]


def test_recommend_cold_user_warns(tmp_path, capsys):
    path = tmp_path / "mixed.tsv"
    path.write_text("1\t10\t5\n1\t11\t2\n2\t10\t3\n2\t11\t3\n2\t12\t3\n",
                    encoding="utf-8")
    code, stdout, err = run_cli(capsys, "recommend", path, "--user", "2,1", "--top-k", "1")
    assert code == 0
    assert "warning" in err and "user 2" in err
    assert stdout.strip().splitlines()[0].startswith("1\t")
    # all requested users cold -> usage error
    code, _, err = run_cli(capsys, "recommend", path, "--user", "2")
    assert code == 1


def test_recommend_unknown_user(ratings_file, capsys):
    code, _, err = run_cli(capsys, "recommend", ratings_file, "--user", "99")
    assert code == 1
    assert "does not appear" in err


def test_evaluate_writes_report(ratings_file, tmp_path, capsys):
    out = tmp_path / "report"
    code, stdout, _ = run_cli(capsys, "evaluate", ratings_file, "--upl", "3",
                              "--min-test", "2", "--repetitions", "1",
                              "--cutoffs", "1,2", "--jobs", "1", "--out", out)
    assert code == 0
    assert "upl" in stdout and "cutoff" in stdout
    report = (out / "ndcg_report.tsv").read_text(encoding="utf-8")
    assert "# repetitions=1" in report
    data_rows = [l for l in report.splitlines()
                 if l and not l.startswith(("#", "upl\t"))]
    assert len(data_rows) == 2  # one per cutoff
    std_col = [float(r.split("\t")[3]) for r in data_rows]
    assert std_col == [0.0, 0.0]


def test_diagnose_runs(ratings_file, tmp_path, capsys):
    out = tmp_path / "diag"
    code, stdout, _ = run_cli(capsys, "diagnose", ratings_file, "--sample", "3",
                              "--seed", "1", "--out", out)
    assert code == 0
    assert "second-walk coverage" in stdout
    assert (out / "diagnostics.tsv").exists()


def test_diagnose_after_split(ratings_file, capsys):
    code, stdout, _ = run_cli(capsys, "diagnose", ratings_file, "--upl", "4",
                              "--min-test", "2", "--sample", "2")
    assert code == 0
    assert "sampled users: 2" in stdout


def test_config_file_and_precedence(ratings_file, tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("top_k=2\nseed=5\n# a comment\nalpha=0.2\n", encoding="utf-8")
    code, stdout, _ = run_cli(capsys, "recommend", ratings_file, "--user", "1",
                              "--config", cfg)
    assert code == 0
    assert len(stdout.strip().splitlines()) == 2  # top_k from config
    code, stdout, _ = run_cli(capsys, "recommend", ratings_file, "--user", "1",
                              "--config", cfg, "--top-k", "4")
    assert code == 0
    assert len(stdout.strip().splitlines()) == 4  # flag beats config


def test_config_rejects_unknown_keys(ratings_file, tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("no_such_key=3\n", encoding="utf-8")
    code, _, err = run_cli(capsys, "recommend", ratings_file, "--user", "1",
                           "--config", cfg)
    assert code == 1 and "unknown key" in err
    cfg.write_text("alpha 0.2\n", encoding="utf-8")
    code, _, err = run_cli(capsys, "recommend", ratings_file, "--user", "1",
                           "--config", cfg)
    assert code == 1 and "key=value" in err
    cfg.write_text("alpha=fast\n", encoding="utf-8")
    code, _, _ = run_cli(capsys, "recommend", ratings_file, "--user", "1",
                         "--config", cfg)
    assert code == 1


def test_config_parses_types(tmp_path):
    cfg = tmp_path / "ok.cfg"
    cfg.write_text("upl=10,20\ntol=1e-8\njobs=3\nformat=csv_umr\n", encoding="utf-8")
    values = load_config(cfg)
    assert values == {"upl": [10, 20], "tol": 1e-8, "jobs": 3, "format": "csv_umr"}


def test_missing_file_is_data_error(tmp_path, capsys):
    code, _, err = run_cli(capsys, "recommend", tmp_path / "absent.tsv", "--user", "1")
    assert code == 2


def test_malformed_file_is_data_error(tmp_path, capsys):
    path = tmp_path / "broken.tsv"
    path.write_text("1\t2\n", encoding="utf-8")
    code, _, err = run_cli(capsys, "recommend", path, "--user", "1")
    assert code == 2 and "line 1" in err


def test_invalid_alpha_is_usage_error(ratings_file, capsys):
    code, _, err = run_cli(capsys, "recommend", ratings_file, "--user", "1",
                           "--alpha", "2.0")
    assert code == 1 and "alpha" in err


def test_bad_flags_exit_one(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["recommend", "--no-such-flag"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == 1


def test_missing_upl_is_usage_error(ratings_file, tmp_path, capsys):
    code, _, err = run_cli(capsys, "split", ratings_file, "--out", tmp_path / "s")
    assert code == 1 and "--upl" in err


def test_numerical_error_exit_code(ratings_file, capsys, monkeypatch):
    import prefwalk.cli as cli_mod

    def boom(*args, **kwargs):
        raise NumericalError("synthetic failure")

    monkeypatch.setattr(cli_mod, "rank_items_for_user", boom)
    code, _, err = run_cli(capsys, "recommend", ratings_file, "--user", "1")
    assert code == 3 and "synthetic failure" in err


def test_help_exits_zero():
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0


def test_console_script_installed():
    proc = subprocess.run([sys.executable, "-m", "prefwalk.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "split" in proc.stdout and "diagnose" in proc.stdout
