import json

import pytest
from pydantic import ValidationError

from corrxray.biset import identity_recursion
from corrxray.cli import main
from corrxray.config import CurvesConfig, LimitsetConfig, XrayConfig, digest, load_config


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out else None)


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


# -- config ----------------------------------------------------------------


def test_unknown_keys_rejected():
    with pytest.raises(ValidationError):
        XrayConfig(correspondence="rabbit", seed_length=2, colour="red")
    with pytest.raises(ValidationError):
        XrayConfig.model_validate({"correspondence": "rabbit", "seed_length": 2, "budgets": {"nodes": 3}})


def test_schema_version_checked():
    with pytest.raises(ValidationError):
        LimitsetConfig(schema_version=2, correspondence="cubic", depth=1, basepoints=[(0.3, 0.4)])


def test_exactly_one_source():
    with pytest.raises(ValidationError):
        XrayConfig(seed_length=2)
    with pytest.raises(ValidationError):
        XrayConfig(correspondence="rabbit")
    with pytest.raises(ValidationError):
        CurvesConfig(map="t**2 - 1", recursion=identity_recursion(2, 3).to_json())


def test_digest_depends_on_content():
    a = XrayConfig(correspondence="rabbit", seed_length=2)
    b = XrayConfig(correspondence="rabbit", seed_length=3)
    assert digest(a) != digest(b)
    assert digest(a) == digest(XrayConfig(seed_length=2, correspondence="rabbit"))


def test_load_yaml(tmp_path):
    p = write(tmp_path, "c.yaml", "correspondence: cubic\ndepth: 2\nbasepoints: [[0.3, 0.4]]\n")
    cfg = load_config(p, "limitset")
    assert cfg.depth == 2 and cfg.basepoints == [(0.3, 0.4)]


# -- commands --------------------------------------------------------------


def test_catalog(capsys):
    code, rep = run(capsys, "catalog")
    assert code == 0
    assert [c["name"] for c in rep["results"]["correspondences"]] == ["rabbit", "dendrite", "lodge", "quintic",
                                                                      "cubic"]


def test_check_cubic_and_quintic(capsys):
    code, rep = run(capsys, "check", "cubic", "quintic")
    assert code == 0 and rep["passed"]
    names = {c["name"] for c in rep["checks"]}
    assert "cubic:two_cycle_pm_sqrt5_over_3_multiplier_9_4" in names
    assert "quintic:branch_local_degrees_at_0_are_2_and_4" in names


def test_check_unknown_name_is_usage_error(capsys):
    assert main(["check", "nosuch"]) == 2
    assert "unknown correspondence" in capsys.readouterr().err


def test_derive_recursion_writes_artifact(capsys, tmp_path):
    code, rep = run(capsys, "derive-recursion", "rabbit", "--out-dir", str(tmp_path))
    assert code == 0
    saved = json.loads((tmp_path / "rabbit.recursion.json").read_text())
    assert saved["recursion"] == rep["results"]["recursion"]
    assert rep["results"]["monodromy"] == {"a": True, "b": True}


def test_xray_rabbit(capsys, tmp_path):
    cfg = write(tmp_path, "x.yaml", "correspondence: rabbit\nseed_length: 6\noutput: r\n")
    code, rep = run(capsys, "xray", cfg, "--out-dir", str(tmp_path / "out"))
    assert code == 0
    assert rep["results"]["attractor"] == ["e", "a", "b", "B"]
    assert sorted(p.name for p in (tmp_path / "out").iterdir()) == ["r.attractor.dot", "r.graph.json", "r.report.json"]
    assert "timings" not in rep


def test_xray_empty_seeds(capsys, tmp_path):
    cfg = write(tmp_path, "x.yaml", "correspondence: rabbit\nseeds: []\n")
    code, rep = run(capsys, "xray", cfg)
    assert code == 0
    assert rep["results"]["n_nodes"] == 0 and rep["results"]["attractor"] == []


def test_xray_budget_exceeded_writes_partial(capsys, tmp_path):
    rec = json.dumps(identity_recursion(2, 2).to_json())
    cfg = write(tmp_path, "x.yaml", f"recursion: {rec}\nseed_length: 3\nbudgets: {{max_nodes: 10}}\noutput: p\n")
    code, rep = run(capsys, "xray", cfg, "--out-dir", str(tmp_path))
    assert code == 1 and not rep["passed"]
    partial = json.loads((tmp_path / "p.graph.json").read_text())
    assert partial["closed"] is False


def test_xray_bad_config_is_usage_error(capsys, tmp_path):
    cfg = write(tmp_path, "x.yaml", "correspondence: rabbit\nseed_length: 2\nunknown: 1\n")
    assert main(["xray", cfg]) == 2


def test_curves_identity_reports_all_fixed(capsys, tmp_path):
    rec = json.dumps(identity_recursion(2, 3).to_json())
    cfg = write(tmp_path, "c.yaml", f"recursion: {rec}\nbound: 3\n")
    code, rep = run(capsys, "curves", cfg)
    assert code == 0
    assert rep["results"]["status"] == "all states fixed"


def test_curves_bound_zero(capsys, tmp_path):
    cfg = write(tmp_path, "c.yaml", "bound: 0\n")
    code, rep = run(capsys, "curves", cfg)
    assert code == 0
    assert rep["results"]["automaton"]["states"] == []


def test_limitset_depth_zero_single_row(capsys, tmp_path):
    cfg = write(tmp_path, "l.yaml", "correspondence: cubic\ndepth: 0\nbasepoints: [[0.3, 0.4]]\noutput: z\n")
    code, rep = run(capsys, "limitset", cfg, "--out-dir", str(tmp_path))
    assert code == 0
    assert (tmp_path / "z.0.csv").read_text().splitlines() == ["re,im,multiplicity", "0.3,0.4,1"]


def test_limitset_two_basepoints(capsys, tmp_path):
    cfg = write(tmp_path, "l.yaml", "correspondence: cubic\ndepth: 3\nbasepoints: [[0.3, 0.4], [-0.7, 1.1]]\n")
    code, rep = run(capsys, "limitset", cfg, "--out-dir", str(tmp_path))
    assert code == 0
    assert [c["points"] for c in rep["results"]["clouds"]] == [64, 64]
    assert 0 < rep["results"]["hausdorff"] < 2


def test_limitset_cusp_basepoint_rejected(tmp_path):
    cfg = write(tmp_path, "l.yaml", "correspondence: cubic\ndepth: 1\nbasepoints: [[1.0, 0.0]]\n")
    assert main(["limitset", cfg]) == 2


def test_timings_only_on_request(capsys, tmp_path):
    cfg = write(tmp_path, "l.yaml", "correspondence: cubic\ndepth: 1\nbasepoints: [[0.3, 0.4]]\n")
    _, rep = run(capsys, "limitset", cfg, "--timings")
    assert "timings" in rep


def test_verify_all_quick(capsys):
    code, rep = run(capsys, "verify-all", "--quick")
    assert code == 0 and rep["passed"]
