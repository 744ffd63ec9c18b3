import json

import numpy as np
import pytest

from mlpsvm import bench, cli
from mlpsvm.bench import CampaignSummary, RunConfig, grid_search, run_benchmark, select_params
from mlpsvm.dataset import Dataset, k_fold_split, load_arff, write_arff
from mlpsvm.model import Hyperparams
from mlpsvm.synth import generate_annuli, generate_crossing, generate_slabs


def strip_volatile(d):
    d = dict(d)
    d.pop("created")
    d.pop("timing")
    return d


def test_separated_slabs_are_perfect():
    res = run_benchmark(generate_slabs(), RunConfig(algorithms=("mlpsvm", "br"), folds=4))
    for rep in res.reports.values():
        assert rep.mean["hamming_loss"] == 0.0 and rep.std["hamming_loss"] == 0.0
    assert res.max_gap <= 1e-6


def test_report_is_deterministic_and_order_independent():
    data = generate_crossing(20, 0.05, seed=2)
    cfg = RunConfig(algorithms=("mlpsvm", "br"), params=Hyperparams(C1=4.0, C2=0.25), folds=3)
    a = run_benchmark(data, cfg).to_dict()
    b = run_benchmark(data, cfg).to_dict()
    c = run_benchmark(data, RunConfig(**{**cfg.__dict__, "jobs": 3})).to_dict()
    assert a["schema"] == "mlpsvm-report/1"
    assert json.dumps(strip_volatile(a)) == json.dumps(strip_volatile(b))
    a.pop("config"), c.pop("config")
    assert json.dumps(strip_volatile(a)) == json.dumps(strip_volatile(c))


def test_singleton_grid_equals_plain_run():
    data = generate_crossing(20, 0.05, seed=4)
    plain = RunConfig(params=Hyperparams(C1=2.0, C2=0.5), folds=3)
    grid = RunConfig(params=Hyperparams(C1=2.0, C2=0.5), folds=3, c1_grid=(2.0,), c2_grid=(0.5,))
    ra = run_benchmark(data, plain)
    rb = run_benchmark(data, grid)
    assert ra.reports["mlpsvm"].per_fold == rb.reports["mlpsvm"].per_fold


def test_grid_validation():
    with pytest.raises(ValueError):
        RunConfig(c1_grid=(0.0, 1.0))
    with pytest.raises(ValueError):
        RunConfig(c2_grid=())
    with pytest.raises(ValueError):
        RunConfig(folds=1)
    with pytest.raises(ValueError):
        RunConfig(algorithms=("svm",))


def test_tie_break_prefers_small_c():
    # every point scores 0 on the separated slabs, so the first grid point wins
    data = generate_slabs(15)
    cfg = RunConfig(c1_grid=(4.0, 1.0, 2.0), c2_grid=(0.5, 0.25))
    best, table = select_params(data, cfg, "mlpsvm")
    assert (best.C1, best.C2) == (1.0, 0.25)
    assert [(p.C1, p.C2) for p, _ in table][:2] == [(1.0, 0.25), (1.0, 0.5)]


def test_selected_point_is_best_on_grid():
    data = generate_crossing(30, 0.05, seed=5)
    grid = (0.1, 1.0, 10.0)
    cfg = RunConfig(c1_grid=grid, c2_grid=grid, folds=3)
    best, _ = grid_search(data, cfg)
    chosen = best["mlpsvm"]
    results = {}
    for c1 in grid:
        for c2 in grid:
            r = run_benchmark(data, RunConfig(params=Hyperparams(C1=c1, C2=c2), folds=3,
                                              seed=cfg.seed + 1, inner_folds=3))
            results[(c1, c2)] = r.reports["mlpsvm"]
    mine = results[(chosen.C1, chosen.C2)]
    for rep in results.values():
        assert mine.mean["hamming_loss"] <= rep.mean["hamming_loss"] + mine.std["hamming_loss"]


def test_no_leak_into_selection():
    data = generate_crossing(20, 0.05, seed=6)
    cfg = RunConfig(c1_grid=(0.5, 8.0), c2_grid=(0.0625, 1.0), folds=3)
    plan = k_fold_split(data.m, 3, cfg.seed)
    X = np.array(data.features)
    X[plan.test_indices(0)] = 1e6
    poisoned = Dataset(X, data.labels)
    a = run_benchmark(data, cfg).folds[0]["params"]
    b = run_benchmark(poisoned, cfg).folds[0]["params"]
    assert a == b


def test_verify_campaign_examples():
    empty = bench.verify_campaign(0)
    assert empty.ok and empty.count == 0
    summary = bench.verify_campaign(100, seed=3)
    assert summary.ok, summary.failures
    assert summary.worst_relative_gap <= 1e-5


def test_crossing_shape():
    ds = generate_crossing(50, 0.05, seed=0)
    assert (ds.m, ds.n, ds.d) == (150, 2, 2)
    assert int(np.sum(np.all(ds.labels == 1, axis=1))) == 50
    clean = generate_crossing(50, 0.0, seed=0)
    x0 = clean.features[:, 0]
    spans = []
    for code in ((1, -1), (1, 1), (-1, 1)):
        rows = np.all(clean.labels == code, axis=1)
        spans.append((x0[rows].min(), x0[rows].max()))
    # A sits on both flanks; every other pair of strips is disjoint along x0
    ab, b = spans[1], spans[2]
    assert ab[1] < b[0]
    a_rows = np.all(clean.labels == (1, -1), axis=1)
    assert np.all((x0[a_rows] < ab[0]) | (x0[a_rows] > b[1]))
    again = generate_crossing(50, 0.05, seed=0)
    assert np.array_equal(again.features, ds.features)


def test_annuli_shape():
    ds = generate_annuli(300, seed=0)
    r = np.hypot(*ds.features.T)
    assert np.all((ds.labels[:, 0] > 0) == ((r >= 1.0) & (r <= 2.0)))


# -- command line ------------------------------------------------------------

@pytest.fixture
def crossing_file(tmp_path):
    path = tmp_path / "cross.arff"
    assert cli.main(["synth", "--n-per-strip", "30", "--seed", "1", "--out", str(path)]) == 0
    return path


def test_cli_train_predict(tmp_path, crossing_file, capsys):
    model = tmp_path / "m.json"
    csv = tmp_path / "dump.csv"
    code = cli.main(["train", "--data", str(crossing_file), "--labels", "2", "--c1", "8",
                     "--c2", "0.0625", "--out", str(model), "--verify", "--dump-csv", str(csv)])
    assert code == 0
    out = capsys.readouterr().out.splitlines()
    lines = [json.loads(line) for line in out[1:]]
    assert [ln["label"] for ln in lines] == ["label1", "label2"]
    assert all("concave" in ln["form"] for ln in lines)
    assert all(ln["objective_difference"] <= 1e-4 for ln in lines)
    assert csv.exists()

    preds = tmp_path / "p.csv"
    assert cli.main(["predict", "--model", str(model), "--data", str(crossing_file),
                     "--out", str(preds)]) == 0
    rows = preds.read_text().splitlines()
    assert rows[0] == "label1,label2" and len(rows) == 91
    assert json.loads(capsys.readouterr().err)["hamming_loss"] < 0.2


def test_cli_bench_and_grid(tmp_path, crossing_file, capsys):
    report = tmp_path / "r.json"
    assert cli.main(["cv-bench", "--data", str(crossing_file), "--labels", "label1,label2",
                     "--algo", "both", "--folds", "3", "--out", str(report)]) == 0
    d = json.loads(report.read_text())
    assert d["schema"] == "mlpsvm-report/1" and set(d["aggregate"]) == {"mlpsvm", "br"}
    assert "±" in capsys.readouterr().out
    assert cli.main(["grid-search", "--data", str(crossing_file), "--labels", "2", "--folds", "2",
                     "--c1-grid", "1,8", "--c2-grid", "0.0625", "--out", str(report)]) == 0
    assert json.loads(report.read_text())["config"]["grids"]["C1"] == [1.0, 8.0]


def test_cli_verify(tmp_path):
    out = tmp_path / "v.json"
    assert cli.main(["verify", "--count", "5", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["ok"] is True
    assert cli.main(["verify", "--count", "0"]) == 0


def test_cli_exit_codes(tmp_path, crossing_file, monkeypatch):
    data = str(crossing_file)
    assert cli.main(["train", "--data", data, "--labels", "2", "--c1", "0"]) == 2
    assert cli.main(["train", "--data", str(tmp_path / "missing.arff"), "--labels", "2"]) == 2
    assert cli.main(["train", "--data", data]) == 2
    assert cli.main(["grid-search", "--data", data, "--labels", "2", "--c1-grid", "0,1"]) == 2
    with pytest.raises(SystemExit) as err:
        cli.main(["train", "--data", data, "--kernel", "sigmoid"])
    assert err.value.code == 2
    assert cli.main(["train", "--data", data, "--labels", "2", "--c1", "16", "--c2", "0.0625",
                     "--tol", "1e-12", "--max-iter", "1"]) == 3
    failing = CampaignSummary(1, failures=[{"seed": [0, 0], "problems": ["forced"]}])
    monkeypatch.setattr(bench, "verify_campaign", lambda *a, **k: failing)
    assert cli.main(["verify", "--count", "1"]) == 4


def test_cli_round_trip_file(tmp_path, crossing_file):
    ds = load_arff(crossing_file, 2)
    again = tmp_path / "again.arff"
    write_arff(ds, again)
    assert np.array_equal(load_arff(again, 2).features, ds.features)
