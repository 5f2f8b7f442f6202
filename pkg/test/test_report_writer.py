import json
import sys

import pytest

from bieberbach_module import BottGroup, finite_quotient_fingerprint
from bott_module import enumerate_matrices, load_label_table
from classify_module import attach_reference_names, classify, invariant_vector, load_reference
from report_writer import (TOOL_VERSION, read_report_classes, torus_action_text, write_enumeration,
                           write_fingerprint, write_invariants, write_report)


@pytest.fixture(scope="module")
def partition3():
    return attach_reference_names(classify(3, workers=1), load_reference(3))


def table_rows(markdown: str):
    return [line for line in markdown.splitlines() if line.startswith("| (")]


def test_markdown_mirrors_class_annotations(partition3):
    text = write_report(partition3, "markdown").decode('utf-8')
    assert TOOL_VERSION in text and "translations=0 1/4 1/2 3/4" in text
    assert table_rows(text) == [
        "| (i) | (orientable) | T^3-action | I3 |",
        "| (ii) | (nonorientable) | T^2-action | A3, A4, A2, A1 |",
        "| (iii) | (nonorientable) | S^1-action | A5, A6 |",
        "| (iv) | (orientable) | S^1-action | A7 |",
    ]


def test_single_class_table():
    text = write_report(classify(1), "markdown").decode('utf-8')
    assert table_rows(text) == ["| (1) | (orientable) | S^1-action | I1 |"]
    assert "Separating invariants" not in text


def test_json_and_csv_carry_the_same_classes(partition3):
    from_json = read_report_classes(write_report(partition3, "json"), "json")
    from_csv = read_report_classes(write_report(partition3, "csv"), "csv")
    assert from_json == from_csv
    assert from_json[2] == ("iii", ("A5", "A6"), False, 1)


def test_json_report_layout(partition3):
    report = json.loads(write_report(partition3, "json"))
    assert report["n"] == 3
    assert report["search_space"] == {"entry_bound": 1, "translations": ["0", "1/4", "1/2", "3/4"]}
    assert [len(c["witnesses"]) for c in report["classes"]] == [0, 3, 1, 0]
    assert report["classes"][1]["witnesses"][0]["source"] == "A3"
    assert {"pair": ["I3", "A3"], "field": "holonomy_rank"} in report["separations"]
    assert "matrix_conjugacy_caveat" not in report


def test_reports_are_byte_identical_across_runs(partition3):
    again = attach_reference_names(classify(3, workers=3), load_reference(3))
    for fmt in ("json", "markdown", "csv"):
        assert write_report(partition3, fmt) == write_report(again, fmt)


def test_unknown_format_is_rejected(partition3):
    with pytest.raises(ValueError):
        write_report(partition3, "xml")
    with pytest.raises(ValueError):
        read_report_classes(b"", "markdown")


def test_torus_action_text():
    assert torus_action_text(1) == "S^1-action"
    assert torus_action_text(4) == "T^4-action"


def test_enumeration_report():
    labels = load_label_table(3)
    data = json.loads(write_enumeration(enumerate_matrices(3), labels, "json"))
    assert len(data["matrices"]) == 8
    assert data["matrices"][6] == {"id": 6, "label": "A7", "compact": "n=3;bits=110", "orientable": True,
                                   "torus_rank": 1}
    csv_text = write_enumeration(enumerate_matrices(3), labels, "csv").decode('utf-8')
    assert "6,A7,n=3;bits=110,true,1" in csv_text


def test_invariant_and_fingerprint_reports():
    labels = load_label_table(3)
    A1 = labels.matrix("A1")
    data = json.loads(write_invariants([("A1", invariant_vector(A1))], "json"))
    entry = data["invariants"][0]
    assert entry["label"] == "A1" and entry["holonomy_rank"] == 1
    assert entry["abelianization"] == {"free_rank": 2, "torsion": [2]}
    markdown = write_invariants([("A1", invariant_vector(A1))], "markdown").decode('utf-8')
    assert markdown.splitlines()[2].startswith("| label | holonomy_rank |")
    fingerprint = finite_quotient_fingerprint(BottGroup.from_matrix(A1), 2)
    data = json.loads(write_fingerprint("A1", 2, False, fingerprint, "json"))
    assert data["fingerprint"]["order"] == 64 and data["fingerprint"]["center_order"] == 16


if __name__ == '__main__':
    sys.exit(pytest.main([__file__]))
