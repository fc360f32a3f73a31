import json

import numpy as np
import pytest

from aksvd.ksvd import fit_matrix
from aksvd.cli import main
from aksvd.io import load_dense_csv, load_report, save_matrix_csv
from aksvd.kernels import KernelSpec


def run_cli(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    cfg_line = [l for l in out.strip().splitlines() if l.startswith("{")]
    return code, (json.loads(cfg_line[0]) if cfg_line else None)


def write_toy_graph(tmp_path):
    # 6 nodes, two directed triangles, one cross edge
    edges = [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (0, 3)]
    p = tmp_path / "graph.tsv"
    p.write_text("# n=6\n" + "".join(f"{s}\t{d}\n" for s, d in edges))
    labels = tmp_path / "labels.txt"
    labels.write_text("0\n0\n0\n1\n1\n1\n")
    return p, labels


def test_embed_identity(tmp_path, capsys):
    inp = tmp_path / "a.csv"
    save_matrix_csv(inp, np.eye(3))
    out = tmp_path / "run"
    code, cfg = run_cli(capsys, ["embed", "--input", str(inp), "--rank", "2",
                                 "--out", str(out)])
    assert code == 0
    assert cfg["kernel"] == "linear" and cfg["rank"] == 2
    left = load_dense_csv(str(out) + ".left.csv")
    assert left.shape == (3, 2)
    with open(str(out) + ".fit.json") as f:
        rep = json.load(f)
    assert rep["achieved_rank"] == 2
    assert rep["residual_r1"] <= 1e-10


def test_embed_matches_api(tmp_path, capsys):
    rng = np.random.default_rng(0)
    A = rng.standard_normal((8, 8))
    inp = tmp_path / "a.csv"
    save_matrix_csv(inp, A)
    out = tmp_path / "run"
    code, cfg = run_cli(capsys, ["embed", "--input", str(inp), "--kernel", "rbf",
                                 "--gamma", "2.0", "--rank", "3", "--out", str(out)])
    assert code == 0
    model = fit_matrix(load_dense_csv(inp), KernelSpec.rbf(2.0), 3)
    left = load_dense_csv(str(out) + ".left.csv")
    assert np.array_equal(left, model.b_phi)


def test_embed_deterministic_same_seed(tmp_path, capsys):
    rng = np.random.default_rng(1)
    A = rng.standard_normal((10, 10))
    inp = tmp_path / "a.csv"
    save_matrix_csv(inp, A)
    out = tmp_path / "run"
    argv = ["embed", "--input", str(inp), "--kernel", "sne", "--rank", "2",
            "--solver", "asymnys", "--nsub", "6", "--msub", "6",
            "--seed", "7", "--out", str(out)]
    files = (str(out) + ".left.csv", str(out) + ".fit.json")
    assert run_cli(capsys, argv)[0] == 0
    first = [open(f, "rb").read() for f in files]
    assert run_cli(capsys, argv)[0] == 0
    second = [open(f, "rb").read() for f in files]
    assert first == second


def test_config_echo_reproduces_bit_identical(tmp_path, capsys):
    rng = np.random.default_rng(2)
    A = rng.standard_normal((9, 9))
    inp = tmp_path / "a.csv"
    save_matrix_csv(inp, A)
    out = tmp_path / "run"
    code, cfg = run_cli(capsys, ["embed", "--input", str(inp), "--kernel", "rbf",
                                 "--gamma", "auto", "--rank", "2", "--center",
                                 "--seed", "3", "--out", str(out)])
    assert code == 0
    assert isinstance(cfg["gamma"], float)  # echoed config carries resolved gamma
    files = [str(out) + s for s in (".left.csv", ".right.csv", ".concat.csv", ".fit.json")]
    first = [open(f, "rb").read() for f in files]
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    code2, cfg2 = run_cli(capsys, ["--config", str(cfg_path)])
    assert code2 == 0
    assert cfg2 == cfg
    second = [open(f, "rb").read() for f in files]
    assert first == second


def test_graph_command(tmp_path, capsys):
    gpath, lpath = write_toy_graph(tmp_path)
    out = tmp_path / "g"
    code, cfg = run_cli(capsys, ["graph", "--input", str(gpath), "--format", "edges",
                                 "--labels", str(lpath), "--kernel", "sne",
                                 "--gamma", "auto", "--rank", "2", "--out", str(out)])
    assert code == 0
    rows = load_report(str(out) + ".metrics.json")
    names = {(r["task"], r["metric_name"]) for r in rows}
    assert ("node_classification", "micro_f1") in names
    assert ("node_classification", "macro_f1") in names
    assert ("graph_reconstruction", "l1") in names
    assert ("graph_reconstruction", "l2") in names
    for r in rows:
        assert set(r) == {"task", "metric_name", "value", "seed", "config_hash"}


@pytest.mark.filterwarnings("ignore::RuntimeWarning")  # constant gram loses rank
def test_graph_zero_edge_reconstruction(tmp_path, capsys):
    # zero out-degrees reconstruct the empty graph exactly
    inp = tmp_path / "a.csv"
    save_matrix_csv(inp, np.zeros((4, 4)))
    labels = tmp_path / "y.txt"
    labels.write_text("0\n0\n1\n1\n")
    out = tmp_path / "g"
    code, _ = run_cli(capsys, ["graph", "--input", str(inp), "--labels", str(labels),
                               "--kernel", "rbf", "--gamma", "1.0", "--rank", "2",
                               "--out", str(out)])
    assert code == 0
    rows = load_report(str(out) + ".metrics.json")
    l1 = [r["value"] for r in rows if r["metric_name"] == "l1"][0]
    assert l1 == 0.0


def test_bicluster_command(tmp_path, capsys):
    rng = np.random.default_rng(3)
    blocks = []
    for shift, scale in ((0, 2.0), (1, 2.5), (2, 3.0)):
        B = np.zeros((8, 6))
        B[:, :] = 0.02 * rng.standard_normal((8, 6))
        B[:, shift * 2: shift * 2 + 2] += scale
        blocks.append(B)
    A = np.vstack(blocks)
    inp = tmp_path / "dt.csv"
    save_matrix_csv(inp, A)
    labels = tmp_path / "y.txt"
    labels.write_text("".join(f"{i // 8}\n" for i in range(24)))
    out = tmp_path / "b"
    code, _ = run_cli(capsys, ["bicluster", "--input", str(inp), "--labels", str(labels),
                               "--kernel", "sne", "--gamma", "auto", "--rank", "3",
                               "--compat", "a1", "--k-rows", "3", "--k-cols", "3",
                               "--out", str(out)])
    assert code == 0
    rows = load_report(str(out) + ".metrics.json")
    by_name = {r["metric_name"]: r["value"] for r in rows}
    assert by_name["row_nmi"] == pytest.approx(1.0)
    assert "coherence" in by_name


def test_bench_command(tmp_path, capsys):
    rng = np.random.default_rng(4)
    u, _ = np.linalg.qr(rng.standard_normal((30, 30)))
    v, _ = np.linalg.qr(rng.standard_normal((30, 30)))
    G = (u * 0.5 ** np.arange(30)) @ v.T
    inp = tmp_path / "g.csv"
    save_matrix_csv(inp, G)
    out = tmp_path / "bench"
    code, _ = run_cli(capsys, ["bench", "--input", str(inp), "--rank", "3",
                               "--eps", "inf", "--solvers", "tsvd,rsvd,asymnys",
                               "--m-schedule", "5,10,30", "--out", str(out)])
    assert code == 0
    trials = load_report(str(out) + ".bench.ldjson")
    assert all(t["success"] for t in trials)
    assert len(trials) == 3  # eps=inf: one trial per solver
    with open(str(out) + ".bench_summary.json") as f:
        summary = json.load(f)["summary"]
    assert set(summary) == {"tsvd", "rsvd", "asymnys"}


def test_bench_rerun_reproduces_nontiming_fields(tmp_path, capsys):
    rng = np.random.default_rng(5)
    G = rng.standard_normal((20, 20))
    inp = tmp_path / "g.csv"
    save_matrix_csv(inp, G)
    results = []
    for name in ("b1", "b2"):
        out = tmp_path / name
        code, _ = run_cli(capsys, ["bench", "--input", str(inp), "--rank", "2",
                                   "--eps", "0.5", "--solvers", "rsvd,asymnys",
                                   "--m-schedule", "5,10,20", "--seed", "9",
                                   "--out", str(out)])
        assert code == 0
        trials = load_report(str(out) + ".bench.ldjson")
        results.append([{k: v for k, v in t.items() if k != "seconds"} for t in trials])
    assert results[0] == results[1]


def test_usage_error_exit_code(capsys):
    assert main([]) == 1
    assert main(["embed"]) == 1  # missing required flags
    capsys.readouterr()


def test_data_error_exit_code(tmp_path, capsys):
    out = tmp_path / "x"
    code = main(["embed", "--input", str(tmp_path / "missing.csv"),
                 "--rank", "2", "--out", str(out)])
    assert code == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3,nope\n")
    assert main(["embed", "--input", str(bad), "--rank", "1", "--out", str(out)]) == 2
    capsys.readouterr()


def test_numerical_error_exit_code(tmp_path, capsys):
    inp = tmp_path / "a.csv"
    save_matrix_csv(inp, np.vstack([np.zeros((1, 2)), np.full((1, 2), 1000.0)]))
    out = tmp_path / "x"
    code = main(["embed", "--input", str(inp), "--kernel", "sne",
                 "--gamma", "0.001", "--rank", "1", "--out", str(out)])
    assert code == 3
    capsys.readouterr()
