import json
import os
import sys

import pytest

from bieberbach_module import BottGroup, GroupElement, multiply
from bott_module import load_label_table
from main import run_cli

DATA_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data")
WITNESS_FILE = os.path.join(DATA_DIR, "witnesses", "n3_b_A1_A2.json")


def test_classify_markdown(capsys):
    assert run_cli(["classify", "-n", "3", "--format", "markdown"]) == 0
    out = capsys.readouterr().out
    rows = [line for line in out.splitlines() if line.startswith("| (")]
    assert len(rows) == 4
    assert rows[3] == "| (iv) | (orientable) | S^1-action | A7 |"


def test_verify_witness_file(capsys):
    assert run_cli(["verify-witness", WITNESS_FILE]) == 0
    assert capsys.readouterr().out.startswith("OK")


def test_failed_witness_exits_with_mismatch(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"n": 3, "source": "A1", "target": "A7", "B": [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
                               "b": ["0", "0", "0"]}))
    assert run_cli(["verify-witness", str(bad)]) == 1
    assert capsys.readouterr().out.startswith("FAILED")


@pytest.mark.parametrize("payload", [
    {"source": "A1", "target": "A2", "B": [[1, 0, 0], [0, 1, 0], [0, 0, 1]], "b": ["0", "0", "0"]},
    ["A1", "A2"],
    {"n": [3], "source": "A1", "target": "A2"},
    {"n": 3, "source": "A1", "target": "A2", "B": 7, "b": ["0", "0", "0"]},
])
def test_malformed_witness_file_is_a_usage_error(tmp_path, payload):
    bad = tmp_path / "malformed.json"
    bad.write_text(json.dumps(payload))
    assert run_cli(["verify-witness", str(bad)]) == 2


def test_usage_errors():
    assert run_cli(["classify", "-n", "0"]) == 2
    assert run_cli(["classify"]) == 2
    assert run_cli(["frobnicate"]) == 2
    assert run_cli(["classify", "-n", "3", "--format", "xml"]) == 2
    assert run_cli(["classify", "-n", "3", "--translations", "0,1/3"]) == 2
    assert run_cli(["fingerprint", "-n", "3", "--matrix", "Z9"]) == 2
    assert run_cli(["verify-witness", "no/such/file.json"]) == 2


def test_undetermined_classification_exits_with_one():
    assert run_cli(["classify", "-n", "3", "--translations", "0,1/2"]) == 1


def test_enumerate_to_file(tmp_path):
    out = tmp_path / "matrices.json"
    assert run_cli(["enumerate", "-n", "4", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert len(data["matrices"]) == 64
    assert data["matrices"][63]["label"] == "Aa32"


def test_invariants_for_one_matrix(capsys):
    assert run_cli(["invariants", "-n", "3", "--matrix", "A5"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert [entry["label"] for entry in data["invariants"]] == ["A5"]
    assert data["invariants"][0]["holonomy_rank"] == 2


def test_invariants_list_center_generators(capsys):
    assert run_cli(["invariants", "-n", "4", "--matrix", "Aa3"]) == 0
    entry = json.loads(capsys.readouterr().out)["invariants"][0]
    assert entry["center_rank"] == 2
    G = BottGroup.from_matrix(load_label_table(4).matrix("Aa3"))
    generators = [GroupElement.from_json(g) for g in entry["center_generators"]]
    assert len(generators) == 2
    for z in generators:
        for g in G.generator_elements():
            assert multiply(G, z, g) == multiply(G, g, z)


def test_fingerprint(capsys):
    assert run_cli(["fingerprint", "-n", "3", "--matrix", "A1", "--modulus", "2"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["fingerprint"]["order"] == 64
    assert data["fingerprint"]["commutator_order"] == 2


def test_matrix_conjugacy_column(capsys):
    assert run_cli(["classify", "-n", "3", "--format", "markdown", "--matrix-conjugacy"]) == 0
    out = capsys.readouterr().out
    assert "GL(n,Z)-conjugate to first member" in out
    assert "absence is not a proof" in out


def test_missing_fixtures_are_a_usage_error(tmp_path):
    assert run_cli(["enumerate", "-n", "2", "--fixtures", str(tmp_path)]) == 2


@pytest.mark.slow
def test_check_theorems(capsys):
    assert run_cli(["check-theorems"]) == 0
    out = capsys.readouterr().out
    assert "n=3: match" in out and "n=4: match" in out


if __name__ == '__main__':
    sys.exit(pytest.main([__file__]))
