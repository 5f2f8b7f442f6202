"""
Renders classification results as JSON, Markdown or CSV.

Every writer returns bytes and depends only on its inputs, so two runs with the
same flags produce identical files.
"""
import csv
import io
import json
from typing import List, Sequence, Tuple

from bieberbach_module import AbelianInvariants, CenterDescription, Fingerprint, square_form_strings
from bott_module import BottMatrix, LabelTable, orientable, torus_rank
from classify_module import (INVARIANT_FIELDS, MATRIX_CONJUGACY_CAVEAT, InvariantVector, Partition,
                             ReferenceReport, SearchSpace)

# --- Configuration ---
TOOL_NAME = "bott-towers"
TOOL_VERSION = "1.0.0"
FORMATS = ("json", "markdown", "csv")
CSV_COLUMNS = ["class", "orientable", "torus_rank", "labels"]


def _check_format(fmt: str):
    if fmt not in FORMATS:
        raise ValueError(f"Unknown report format '{fmt}', expected one of {FORMATS}")


def _to_bytes(text: str) -> bytes:
    return text.encode('utf-8')


def _header(space: SearchSpace | None) -> str:
    if space is None:
        return f"{TOOL_NAME} {TOOL_VERSION}"
    return (f"{TOOL_NAME} {TOOL_VERSION}; search space: entry_bound={space.entry_bound}, "
            f"translations={' '.join(str(x) for x in space.translations)}")


def orientability_text(is_orientable: bool) -> str:
    return "(orientable)" if is_orientable else "(nonorientable)"


def torus_action_text(rank: int) -> str:
    return "S^1-action" if rank == 1 else f"T^{rank}-action"


def _class_names(p: Partition) -> List[str]:
    return [record.name if record.name is not None else str(i + 1) for i, record in enumerate(p.classes)]


def partition_to_json(p: Partition) -> dict:
    """JSON-ready report of a partition: classes with witnesses, separations and the search space."""
    names = _class_names(p)
    classes = []
    for name, record, labels in zip(names, p.classes, p.class_labels()):
        entry = {
            "name": name,
            "labels": labels,
            "orientable": record.orientable,
            "torus_rank": record.torus_rank,
            "witnesses": [w.to_json(p.labels) for w in record.witnesses],
        }
        if record.matrix_conjugacy is not None:
            entry["matrix_conjugacy"] = [
                {"label": p.labels.label(A), "P": P.to_json() if P is not None else None}
                for A, P in record.matrix_conjugacy]
        classes.append(entry)
    data = {
        "tool": TOOL_NAME,
        "tool_version": TOOL_VERSION,
        "n": p.n,
        "search_space": p.space.to_json(),
        "classes": classes,
        "separations": [{"pair": [p.labels.label(a), p.labels.label(b)], "field": field}
                        for a, b, field in p.separations],
    }
    if any(record.matrix_conjugacy is not None for record in p.classes):
        data["matrix_conjugacy_caveat"] = MATRIX_CONJUGACY_CAVEAT
    return data


def _partition_markdown(p: Partition) -> str:
    with_conjugacy = any(record.matrix_conjugacy is not None for record in p.classes)
    lines = [f"<!-- {_header(p.space)} -->", "", f"## Diffeomorphism classes for n={p.n}", ""]
    columns = ["class", "orientability", "maximal torus action", "matrices"]
    if with_conjugacy:
        columns.append("GL(n,Z)-conjugate to first member")
    lines.append("| " + " | ".join(columns) + " |")
    lines.append("|" + "---|" * len(columns))
    for name, record, labels in zip(_class_names(p), p.classes, p.class_labels()):
        row = [f"({name})", orientability_text(record.orientable), torus_action_text(record.torus_rank),
               ", ".join(labels)]
        if with_conjugacy:
            conjugate = [p.labels.label(A) for A, P in record.matrix_conjugacy or () if P is not None]
            row.append(", ".join(conjugate))
        lines.append("| " + " | ".join(row) + " |")
    if with_conjugacy:
        lines += ["", f"Matrix conjugacy: {MATRIX_CONJUGACY_CAVEAT}."]
    if p.separations:
        lines += ["", "### Separating invariants", "", "| pair | first differing invariant |", "|---|---|"]
        for a, b, field in p.separations:
            lines.append(f"| {p.labels.label(a)} / {p.labels.label(b)} | {field} |")
    return "\n".join(lines) + "\n"


def _partition_csv(p: Partition) -> str:
    buffer = io.StringIO()
    buffer.write(f"# {_header(p.space)}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for name, record, labels in zip(_class_names(p), p.classes, p.class_labels()):
        writer.writerow([name, str(record.orientable).lower(), record.torus_rank, " ".join(labels)])
    return buffer.getvalue()


def write_report(p: Partition, fmt: str = "json") -> bytes:
    """
    Serializes a partition.

    Args:
        p: The classification result.
        fmt: One of "json", "markdown" or "csv".

    Returns:
        The encoded report, identical across runs for the same partition.
    """
    _check_format(fmt)
    if fmt == "json":
        return _to_bytes(json.dumps(partition_to_json(p), indent=2) + "\n")
    if fmt == "markdown":
        return _to_bytes(_partition_markdown(p))
    return _to_bytes(_partition_csv(p))


def read_report_classes(data: bytes, fmt: str) -> List[Tuple[str, Tuple[str, ...], bool, int]]:
    """Parses (name, labels, orientable, torus_rank) per class back out of a JSON or CSV report."""
    text = data.decode('utf-8')
    if fmt == "json":
        report = json.loads(text)
        return [(c["name"], tuple(c["labels"]), bool(c["orientable"]), int(c["torus_rank"]))
                for c in report["classes"]]
    if fmt == "csv":
        rows = csv.DictReader(line for line in io.StringIO(text) if not line.startswith("#"))
        return [(row["class"], tuple(row["labels"].split()), row["orientable"] == "true", int(row["torus_rank"]))
                for row in rows]
    raise ValueError(f"Reading '{fmt}' reports is not supported")


def _cell(value) -> str:
    """Single-cell text for one invariant value."""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, AbelianInvariants):
        return str(value)
    if isinstance(value, Fingerprint):
        orders = " ".join(f"{order}:{count}" for order, count in value.element_order_multiset)
        return (f"order={value.order} center={value.center_order} commutator={value.commutator_order} "
                f"orders=[{orders}] ab={value.abelianization}")
    if isinstance(value, tuple):
        return " ".join(str(x) for x in value)
    if value is None:
        return "-"
    return str(value)


def _table(columns: Sequence[str], rows: Sequence[Sequence[str]], fmt: str, header: str) -> bytes:
    if fmt == "markdown":
        lines = [f"<!-- {header} -->", "", "| " + " | ".join(columns) + " |", "|" + "---|" * len(columns)]
        lines += ["| " + " | ".join(row) + " |" for row in rows]
        return _to_bytes("\n".join(lines) + "\n")
    buffer = io.StringIO()
    buffer.write(f"# {header}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    return _to_bytes(buffer.getvalue())


def write_enumeration(matrices: Sequence[BottMatrix], labels: LabelTable, fmt: str = "json") -> bytes:
    """
    Lists matrices with id, label, compact form, orientability and torus rank.

    Args:
        matrices: Matrices in output order.
        labels: Label table for their dimension.
        fmt: One of FORMATS.
    """
    _check_format(fmt)
    entries = [{
        "id": A.id,
        "label": labels.label(A),
        "compact": A.compact(),
        "orientable": orientable(A),
        "torus_rank": torus_rank(A),
    } for A in matrices]
    if fmt == "json":
        return _to_bytes(json.dumps({"tool_version": TOOL_VERSION, "matrices": entries}, indent=2) + "\n")
    columns = ["id", "label", "compact", "orientable", "torus_rank"]
    rows = [[_cell(entry[c]) for c in columns] for entry in entries]
    return _table(columns, rows, fmt, _header(None))


def write_invariants(vectors: Sequence[Tuple[str, InvariantVector]], fmt: str = "json",
                     centers: Sequence[CenterDescription] | None = None) -> bytes:
    """
    Invariant vectors, one entry per matrix.

    Args:
        vectors: (label, InvariantVector) pairs in output order.
        fmt: One of FORMATS.
        centers: Optional center bases aligned with vectors; JSON output lists their generators.
    """
    _check_format(fmt)
    if centers is not None and len(centers) != len(vectors):
        raise ValueError(f"Got {len(centers)} center bases for {len(vectors)} invariant vectors")
    if fmt == "json":
        entries = [{"label": label, **vec.to_json()} for label, vec in vectors]
        for entry, center in zip(entries, centers or ()):
            entry["center_generators"] = center.to_json()["generators"]
        data = {"tool_version": TOOL_VERSION, "invariants": entries}
        return _to_bytes(json.dumps(data, indent=2) + "\n")
    columns = ["label"] + list(INVARIANT_FIELDS)
    rows = []
    for label, vec in vectors:
        row = [label]
        for name in INVARIANT_FIELDS:
            value = getattr(vec, name)
            row.append(" ".join(square_form_strings(value, vec.n)) if name == "square_form" and value else _cell(value))
        rows.append(row)
    return _table(columns, rows, fmt, _header(None))


def write_fingerprint(label: str, m: int, mod_center: bool, fingerprint: Fingerprint, fmt: str = "json") -> bytes:
    """Fingerprint of Gamma / mZ^n for one matrix as a one-row table or JSON object."""
    _check_format(fmt)
    if fmt == "json":
        data = {"tool_version": TOOL_VERSION, "label": label, "modulus": m, "mod_center": mod_center,
                "fingerprint": fingerprint.to_json()}
        return _to_bytes(json.dumps(data, indent=2) + "\n")
    columns = ["label", "modulus", "mod_center", "order", "center_order", "commutator_order",
               "element_orders", "class_sizes", "abelianization"]
    row = [label, str(m), _cell(mod_center), str(fingerprint.order), str(fingerprint.center_order),
           str(fingerprint.commutator_order),
           " ".join(f"{order}:{count}" for order, count in fingerprint.element_order_multiset),
           " ".join(f"{size}:{count}" for size, count in fingerprint.class_size_multiset),
           str(fingerprint.abelianization)]
    return _table(columns, [row], fmt, _header(None))


def write_comparisons(reports: Sequence[ReferenceReport]) -> bytes:
    lines: List[str] = [_header(None)]
    for report in reports:
        lines += report.lines()
    return _to_bytes("\n".join(lines) + "\n")


def write_verification(results: Sequence[Tuple[str, str, bool]]) -> bytes:
    """One "OK" or "FAILED" line per (source, target, verified) triple."""
    return _to_bytes("".join(f"{'OK' if ok else 'FAILED'} {source} -> {target}\n" for source, target, ok in results))
