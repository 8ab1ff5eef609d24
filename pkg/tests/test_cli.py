import json
import subprocess
import sys

import pytest

from treeloops.cli import RunConfig, main, parse_law, parse_tree_spec, run
from treeloops.errors import InvalidParameterError
from treeloops.estimators import RegularTree
from treeloops.trees import OffspringLaw


def _cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "treeloops.cli", *args], capture_output=True, text=True
    )


def test_parse_specs():
    assert isinstance(parse_tree_spec("regular(4)", 3), RegularTree)
    assert isinstance(parse_law("poisson(3)"), OffspringLaw)
    assert parse_law("binomial(5,0.4)").describe() == "binomial(5,0.4)"
    with pytest.raises(InvalidParameterError):
        parse_law("weird(1)")
    with pytest.raises(InvalidParameterError):
        parse_tree_spec("regular", 3)


def test_gen_tree_roundtrip(tmp_path):
    out = tmp_path / "tree.csv"
    rc = run(RunConfig(command="gen-tree", tree="regular(3)", depth=2, out=str(out)))
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "id,parent_id,depth"
    assert lines[1] == "0,,0"
    meta = json.loads((tmp_path / "tree.csv.meta.json").read_text())
    assert meta["command"] == "gen-tree"
    assert meta["config"]["tree"] == "regular(3)"


def test_survival_byte_determinism_across_threads(tmp_path):
    args = [
        "survival", "--model", "loop", "--tree", "regular(3)", "--grid", "0.3:0.9:3",
        "--depth", "5", "--replicas", "2000", "--seed", "12",
    ]
    r1 = _cli(*args, "--threads", "1", "--out", str(tmp_path / "a.csv"))
    r2 = _cli(*args, "--threads", "2", "--out", str(tmp_path / "b.csv"))
    assert r1.returncode == 0 and r2.returncode == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_validation_exit_code():
    r = _cli("survival", "--model", "loop", "--tree", "regular(3)", "--grid", "0.5",
             "--depth", "5", "--replicas", "0")
    assert r.returncode == 2
    assert "replicas" in r.stderr


def test_diagnostic_exit_code():
    r = _cli("threshold", "--model", "link", "--tree", "poisson(0.9)", "--depth", "20",
             "--replicas", "1500", "--seed", "5", "--bracket", "0.01,20")
    assert r.returncode == 3
    assert "diagnostic" in r.stderr


def test_no_partial_output_on_failure(tmp_path):
    out = tmp_path / "never.csv"
    r = _cli("threshold", "--model", "link", "--tree", "poisson(0.9)", "--depth", "20",
             "--replicas", "1500", "--seed", "5", "--bracket", "0.01,20", "--out", str(out))
    assert r.returncode == 3
    assert not out.exists()


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"tree": "regular(3)", "depth": 2}))
    out = tmp_path / "t.csv"
    r = _cli("gen-tree", "--config", str(cfg), "--depth", "1", "--out", str(out))
    assert r.returncode == 0
    # flag wins: depth 1 tree has 4 vertices
    assert len(out.read_text().splitlines()) == 5


def test_config_unknown_key_rejected(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"trees": "regular(3)"}))
    r = _cli("gen-tree", "--config", str(cfg))
    assert r.returncode == 2
    assert "trees" in r.stderr


def test_prune_prob_csv_schema(tmp_path):
    out = tmp_path / "p.csv"
    rc = run(
        RunConfig(
            command="prune-prob", d_values="3,4", dstar_values="3", lam_values="0.7",
            u_values="1", mc_replicas=2000, seed=1, out=str(out),
        )
    )
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "d,d_star,lambda,u,r_quadrature,r_mc,mc_stderr"
    assert len(lines) == 3
    r3 = float(lines[1].split(",")[4])
    r4 = float(lines[2].split(",")[4])
    assert r4 < r3  # monotone column


def test_gwt_check_reports_threshold(tmp_path):
    out = tmp_path / "g.csv"
    rc = run(RunConfig(command="gwt-check", law="poisson(3)", grid="0.3,0.6", eps="1e-2", out=str(out)))
    assert rc == 0
    text = out.read_text()
    assert "link_threshold=0.4054651081" in text
    assert text.splitlines()[0] == "law,beta,h,expected_Y,thmB_eps,thmB_holds"


def test_unilink_csv(tmp_path):
    out = tmp_path / "u.csv"
    rc = run(
        RunConfig(command="unilink", law="poisson(4)", beta=0.5, depth=6, replicas=2000, seed=3, out=str(out))
    )
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "law,beta,u,D,N,mean_C1,stderr,truncation_hits"


def test_conductance_csv(tmp_path):
    out = tmp_path / "c.csv"
    rc = run(
        RunConfig(command="conductance", tree="regular(3)", depth=6, q_values="0.4,0.6",
                  depths="2,4,6", out=str(out))
    )
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "q,D,conductance"
    assert len(lines) == 7


def test_probe53_csv(tmp_path):
    out = tmp_path / "p53.csv"
    rc = run(
        RunConfig(command="probe-53", tree="regular(4)", depth=6, lam=3.0, components=4,
                  seed=2, out=str(out))
    )
    assert rc == 0
    header, row = out.read_text().splitlines()
    assert header == "lambda,u,D,br_before,br_after_mean,stderr"
    vals = row.split(",")
    assert float(vals[4]) < float(vals[3])


def test_dominate_csv_and_threshold_record(tmp_path):
    out = tmp_path / "d.csv"
    rc = run(
        RunConfig(command="dominate", tree="regular(4)", grid="0.3,0.6", depth=5,
                  replicas=2000, seed=4, out=str(out))
    )
    assert rc == 0
    assert out.read_text().splitlines()[0].startswith("beta,p_loop,se_loop")
    rec = tmp_path / "t.json"
    rc = run(
        RunConfig(command="threshold", model="link", tree="regular(3)", depth=6,
                  replicas=3000, seed=4, bracket="0.1,3", out=str(rec))
    )
    assert rc == 0
    data = json.loads(rec.read_text())
    assert set(data) == {"model", "u", "D", "target", "beta_hat", "ci_lo", "ci_hi", "seed"}


def test_main_maps_errors_to_exit_codes():
    assert main(["survival", "--model", "bad-model", "--tree", "regular(3)",
                 "--grid", "0.5", "--depth", "4"]) == 2
