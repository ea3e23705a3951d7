import json
import os

import pytest

from hostlab import cli
from hostlab.reports import CSV_MAGIC, parallel_map, thread_count


def run(argv, monkeypatch=None, threads=None):
    if threads is not None and monkeypatch is not None:
        monkeypatch.setenv("HOSTLAB_THREADS", str(threads))
    return cli.main(argv)


def read_bytes(path):
    with open(path, "rb") as fh:
        return fh.read()


def test_seed_is_mandatory(tmp_path):
    code = cli.main(["equivariance", "--out", str(tmp_path), "--pairs", "3"])
    assert code == 2


def test_unknown_generator_is_config_error(tmp_path):
    code = cli.main(["weyl", "--gen", "nonsense", "--b", "2", "--seed", "1",
                     "--out", str(tmp_path), "--samples", "1",
                     "--checkpoints", "100"])
    assert code == 2


def test_equivariance_battery(tmp_path):
    code = cli.main(["equivariance", "--seed", "5", "--pairs", "10",
                     "--out", str(tmp_path)])
    assert code == 0
    lines = (tmp_path / "equivariance.csv").read_text().splitlines()
    assert lines[0] == CSV_MAGIC
    assert lines[1].startswith("gen,")
    assert len(lines) == 2 + 3 * 10
    summary = json.loads((tmp_path / "equivariance_summary.json").read_text())
    assert summary["all_ok"] is True
    assert "generated_by" in summary


def test_weyl_small_run_and_dat(tmp_path):
    code = cli.main(["weyl", "--gen", "cantor3", "--b", "2", "--m", "1",
                     "--checkpoints", "200,1000", "--samples", "3",
                     "--seed", "7", "--out", str(tmp_path), "--dat"])
    assert code == 0
    csv_lines = (tmp_path / "weyl.csv").read_text().splitlines()
    assert csv_lines[0] == CSV_MAGIC
    assert len(csv_lines) == 2 + 3 * 2
    assert (tmp_path / "weyl.dat").exists()
    summary = json.loads((tmp_path / "weyl_summary.json").read_text())
    assert summary["negative_control"] is False
    assert summary["per_sample_seed_keys"] == [[7, 0], [7, 1], [7, 2]]


def test_config_file_with_flag_override(tmp_path):
    cfg = {"gen": "cantor3", "b": 2, "m": "1", "samples": 2,
           "checkpoints": "150", "seed": 11}
    cfg_path = tmp_path / "run.json"
    cfg_path.write_text(json.dumps(cfg))
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    assert cli.main(["weyl", "--config", str(cfg_path), "--out", str(out1)]) == 0
    # flag overrides the file's sample count
    assert cli.main(["weyl", "--config", str(cfg_path), "--out", str(out2),
                     "--samples", "1"]) == 0
    rows1 = (out1 / "weyl.csv").read_text().splitlines()
    rows2 = (out2 / "weyl.csv").read_text().splitlines()
    assert len(rows1) == 2 + 2 and len(rows2) == 2 + 1


def test_fourier_cert_quick(tmp_path):
    code = cli.main(["fourier-cert", "--battery", "quick", "--seed", "3",
                     "--out", str(tmp_path)])
    assert code == 0
    for name in ("c1_cert.csv", "fourier_cert.csv"):
        lines = (tmp_path / name).read_text().splitlines()
        assert lines[0] == CSV_MAGIC
        assert all(line.endswith("true") for line in lines[2:])


def test_proof_chain_quick(tmp_path):
    code = cli.main(["proof-chain", "--gen", "cantor3", "--b", "2", "--m", "1",
                     "--ks", "0,2", "--samples", "2", "--level", "8",
                     "--seed", "9", "--out", str(tmp_path)])
    assert code == 0
    summary = json.loads((tmp_path / "proof_chain_summary.json").read_text())
    assert summary["all_bounded"] is True
    assert summary["values"][1] < summary["values"][0]


def test_martingale_run(tmp_path):
    code = cli.main(["martingale", "--gen", "uniform:2", "--N", "2000",
                     "--trials", "20", "--window", "1", "--window-func",
                     "sign0", "--seed", "13", "--out", str(tmp_path)])
    assert code == 0
    lines = (tmp_path / "martingale.csv").read_text().splitlines()
    assert len(lines) == 2 + 20
    summary = json.loads((tmp_path / "martingale_summary.json").read_text())
    assert summary["rms"] <= summary["rms_bound"]


def test_time_change_run(tmp_path):
    code = cli.main(["time-change", "--gen", "markov:0.9,0.1;0.5,0.5",
                     "--theta", "log:2,3", "--js", "0,1", "--gfuncs", "ind0",
                     "--N", "1000", "--M", "10", "--seed", "17",
                     "--out", str(tmp_path)])
    assert code == 0
    lines = (tmp_path / "time_change.csv").read_text().splitlines()
    assert lines[1] == "j,g,re,im,z_score"
    assert len(lines) == 2 + 2


def test_controls_rational_only(tmp_path):
    code = cli.main(["controls", "--mode", "rational", "--N-rational", "3000",
                     "--seed", "23", "--out", str(tmp_path)])
    assert code == 0
    summary = json.loads((tmp_path / "controls_summary.json").read_text())
    assert summary["all_ok"] is True
    assert summary["label"] == "negative-control"


def test_thread_env_validation(monkeypatch):
    monkeypatch.setenv("HOSTLAB_THREADS", "2")
    assert thread_count() == 2
    monkeypatch.setenv("HOSTLAB_THREADS", "zebra")
    with pytest.raises(Exception):
        thread_count()
    monkeypatch.delenv("HOSTLAB_THREADS")
    assert thread_count() >= 1


def test_byte_identical_across_thread_counts(tmp_path, monkeypatch):
    outs = {}
    for threads in (1, 3):
        out = tmp_path / f"t{threads}"
        monkeypatch.setenv("HOSTLAB_THREADS", str(threads))
        code = cli.main(["weyl", "--gen", "cantor3", "--b", "2", "--m", "1,2",
                         "--checkpoints", "100,400", "--samples", "4",
                         "--seed", "31", "--out", str(out)])
        assert code == 0
        code = cli.main(["fourier-cert", "--battery", "quick", "--seed", "31",
                         "--out", str(out)])
        assert code == 0
        outs[threads] = out
    for name in ("weyl.csv", "weyl_summary.json", "fourier_cert.csv",
                 "c1_cert.csv"):
        assert read_bytes(outs[1] / name) == read_bytes(outs[3] / name), name


def test_parallel_map_preserves_order(monkeypatch):
    monkeypatch.setenv("HOSTLAB_THREADS", "4")
    assert parallel_map(lambda v: v * v, range(17)) == [v * v for v in range(17)]
