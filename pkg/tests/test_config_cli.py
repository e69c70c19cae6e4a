import json
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcclt.cli import main
from mcclt.config import ChainSpec, ConfigError, ExperimentConfig, load_config, parse_config, serialize_config
from mcclt.experiments import EXIT_CONFIG, EXIT_FAILED, EXIT_OK, MANIFEST, fmt, run
from mcclt.registry import CHAINS, catalog

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


SIMULATE = {"kind": "simulate", "chain": {"name": "hardcore", "params": {"n1": 2, "n2": 2, "p": 0.5}},
            "seed": 3, "simulate": {"n": 20_000, "functional": "white-count", "batches": 20}}

conditions = st.fixed_dictionaries({
    "ergodicity": st.sampled_from(["harris", "polynomial", "geometric", "uniform"]),
    "detailed_balance": st.booleans(),
    "f_moments": st.sampled_from(["none", "2", "2log", "bounded"]),
    "order_m": st.none() | st.floats(0.5, 5),
})
simulations = st.fixed_dictionaries({
    "n": st.integers(1, 10**7),
    "functional": st.sampled_from(["white-count", "identity"]),
    "window": st.integers(0, 100),
    "batches": st.none() | st.integers(10, 1000),
})


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 8), conditions | simulations)
def test_round_trip(seed, threads, section):
    if "ergodicity" in section:
        d = {"kind": "condition-check", "condition": section}
    else:
        d = {"kind": "simulate", "chain": {"name": "signed-geometric", "params": {"theta": 0.25}},
             "simulate": section}
    d.update(seed=seed, threads=threads)
    cfg = parse_config(json.dumps(d))
    assert parse_config(serialize_config(cfg)) == cfg


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_configs_parse(path):
    cfg = load_config(path)
    assert parse_config(serialize_config(cfg)) == cfg


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(colour="blue"),
    lambda d: d["simulate"].update(bogus=1),
    lambda d: d["chain"]["params"].update(q=0.1),
    lambda d: d["chain"].update(name="no-such-chain"),
    lambda d: d["simulate"].update(n=-5),
    lambda d: d.update(exact={}),
    lambda d: d.pop("simulate"),
])
def test_invalid_configs_rejected(tmp_path, mutate):
    d = json.loads(json.dumps(SIMULATE))
    mutate(d)
    with pytest.raises(ConfigError):
        parse_config(json.dumps(d))
    assert main(["simulate", "--config", write(tmp_path, d), "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_negative_n_reports_field(tmp_path, capsys):
    d = json.loads(json.dumps(SIMULATE))
    d["simulate"]["n"] = -5
    assert main(["run", "--config", write(tmp_path, d)]) == EXIT_CONFIG
    assert "simulate.n" in capsys.readouterr().err


def test_malformed_json_and_missing_file(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"kind": "simulate",\n  oops}')
    assert main(["run", "--config", str(p)]) == EXIT_CONFIG
    assert "line 2" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "none.json")]) == EXIT_CONFIG


def test_kind_mismatch(tmp_path):
    assert main(["exact", "--config", write(tmp_path, SIMULATE)]) == EXIT_CONFIG


def test_bad_seed_and_threads(tmp_path):
    path = write(tmp_path, SIMULATE)
    assert main(["run", "--config", path, "--seed", "-1"]) == EXIT_CONFIG
    assert main(["run", "--config", path, "--threads", "0"]) == EXIT_CONFIG


def test_drift_certified_cli(tmp_path):
    out = tmp_path / "d"
    assert main(["drift", "--config", str(CONFIGS / "c03-drift-theta025.json"), "--out", str(out)]) == EXIT_OK
    s = json.loads((out / "summary.json").read_text())
    assert s["verdict"] == "certified-on-grid"
    assert s["d"] == pytest.approx(0.125, abs=1e-12)


def test_drift_violation_cli(tmp_path):
    out = tmp_path / "d"
    assert main(["drift", "--config", str(CONFIGS / "c03-drift-theta05.json"), "--out", str(out)]) == EXIT_FAILED
    s = json.loads((out / "summary.json").read_text())
    assert s["verdict"] == "violated" and sorted(s["witnesses"]) == [-1, 1]


def test_list_chains(capsys):
    assert main(["list-chains", "--json"]) == EXIT_OK
    cat = json.loads(capsys.readouterr().out)
    assert len(cat) == len(CHAINS) == 8
    for e in cat:
        assert e["example"]
        spec = ChainSpec(name=e["name"], params={k: p["default"] for k, p in e["params"].items()})
        CHAINS[spec.name].build(spec.params)
    assert main(["list-chains"]) == EXIT_OK
    assert "hardcore ->" in capsys.readouterr().out
    assert [e["name"] for e in catalog()] == sorted(CHAINS)


def test_schema(tmp_path, capsys):
    assert main(["schema"]) == EXIT_OK
    schema = json.loads(capsys.readouterr().out)
    assert "kind" in schema["properties"]
    assert main(["schema", "--out", str(tmp_path / "s.json")]) == EXIT_OK
    assert json.loads((tmp_path / "s.json").read_text()) == schema


@pytest.fixture
def simulate_run(tmp_path):
    out = tmp_path / "run"
    assert main(["run", "--config", write(tmp_path, SIMULATE), "--out", str(out)]) == EXIT_OK
    return out


def test_manifest_contents(simulate_run):
    m = json.loads((simulate_run / MANIFEST).read_text())
    assert m["seed"] == 3 and m["exit_code"] == 0 and m["primary_outputs"] == ["batches.csv"]
    assert {"numpy", "scipy", "python"} <= set(m["versions"])
    assert parse_config(json.dumps(m["config"])) == parse_config(json.dumps(SIMULATE))


def test_reproduce_identical(simulate_run, tmp_path):
    assert main(["reproduce", str(simulate_run / MANIFEST), "--out", str(tmp_path / "again")]) == EXIT_OK


def test_reproduce_detects_altered_seed(simulate_run, tmp_path):
    mp = simulate_run / MANIFEST
    m = json.loads(mp.read_text())
    m["seed"] = 4
    mp.write_text(json.dumps(m))
    assert main(["reproduce", str(mp), "--out", str(tmp_path / "again")]) == EXIT_FAILED


def test_reproduce_config_errors(simulate_run, tmp_path):
    assert main(["reproduce", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    mp = simulate_run / MANIFEST
    m = json.loads(mp.read_text())
    m["config"]["chain"]["name"] = "no-such-chain"
    mp.write_text(json.dumps(m))
    assert main(["reproduce", str(mp), "--out", str(tmp_path / "again")]) == EXIT_CONFIG


def test_csv_format(simulate_run):
    raw = (simulate_run / "batches.csv").read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")
    assert fmt(0.1) == "0.10000000000000001" and fmt(True) == "1" and fmt(3) == "3"


def test_threads_do_not_change_outputs(tmp_path):
    d = {"kind": "clt", "chain": {"name": "signed-geometric", "params": {"theta": 0.5}}, "seed": 2,
         "clt": {"n": 500, "R": 100, "functional": "indicator-zero", "truncation": 30}}
    cfg = parse_config(json.dumps(d))
    a = run(cfg, tmp_path / "a", threads=1)
    b = run(cfg, tmp_path / "b", threads=4)
    assert (tmp_path / "a" / "zscores.csv").read_bytes() == (tmp_path / "b" / "zscores.csv").read_bytes()
    assert a.summary["ks_pvalue"] == b.summary["ks_pvalue"]


def test_condition_check_cli(tmp_path):
    out = tmp_path / "c"
    assert main(["check-conditions", "--config", str(CONFIGS / "c10-condition-reversible.json"),
                 "--out", str(out)]) == EXIT_OK
    s = json.loads((out / "summary.json").read_text())
    assert s["condition"] == "5"
    assert (out / "verdict.csv").read_text().startswith("condition")


def test_config_without_chain_rejected():
    with pytest.raises(ConfigError):
        parse_config(json.dumps({"kind": "simulate", "simulate": {"n": 10, "functional": "identity"}}))
    assert isinstance(parse_config(json.dumps({"kind": "condition-check",
                                               "condition": {"ergodicity": "uniform"}})), ExperimentConfig)
