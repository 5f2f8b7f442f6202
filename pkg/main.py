import os
import sys
import argparse
import logging
from typing import List

# Import modules
from bieberbach_module import (FINGERPRINT_MODULI, BottGroup, FingerprintBudgetError, center_basis,
                               finite_quotient_fingerprint)
from bott_module import DATA_DIR, enumerate_matrices, load_label_table, parse_matrix
from classify_module import (SearchSpace, UndeterminedClassificationError, attach_reference_names, classify,
                             compare_with_reference, invariant_vector, load_reference, load_witness_corpus,
                             verify_witness)
from affine_module import parse_dyadic
from report_writer import (FORMATS, write_comparisons, write_enumeration, write_fingerprint, write_invariants,
                           write_report, write_verification)

# --- Configuration ---
LABELS_FILE = "bott_labels.json"
REFERENCE_FILE = "reference_classes.json"
THEOREM_DIMENSIONS = (3, 4)

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_USAGE = 2


def _dimension(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"dimension must be an integer, got '{text}'")
    if n < 1:
        raise argparse.ArgumentTypeError(f"dimension must be at least 1, got {n}")
    return n


def _translations(text: str):
    try:
        return tuple(parse_dyadic(part) for part in text.split(",") if part.strip())
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def build_parser() -> argparse.ArgumentParser:
    """Builds the argument parser with one subcommand per verb."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=FORMATS, default="json", help="Output format.")
    common.add_argument("--out", type=str, help="Write the result to this file instead of stdout.")
    common.add_argument("--fixtures", type=str, default=DATA_DIR,
                        help="Directory holding the label and reference tables.")
    common.add_argument("--verbose", action="store_true", help="Log at DEBUG level.")

    search = argparse.ArgumentParser(add_help=False)
    search.add_argument("--bound", type=int, default=1, help="Entry bound for conjugator linear parts.")
    search.add_argument("--translations", type=_translations, default=None,
                        help="Comma-separated translation grid for conjugators, e.g. 0,1/4,1/2,3/4.")

    parser = argparse.ArgumentParser(description="Diffeomorphism classification of real Bott manifolds.")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("enumerate", parents=[common], help="List all Bott matrices of size n.")
    p.add_argument("-n", type=_dimension, required=True)

    p = commands.add_parser("invariants", parents=[common], help="Invariant vectors of Bott matrices.")
    p.add_argument("-n", type=_dimension, required=True)
    p.add_argument("--matrix", type=str, help="Only this matrix (label, bit string or JSON rows).")

    p = commands.add_parser("classify", parents=[common, search], help="Partition matrices into classes.")
    p.add_argument("-n", type=_dimension, required=True)
    p.add_argument("--matrix-conjugacy", action="store_true",
                   help="Report bounded GL(n,Z)-conjugacy of each member to its class root.")

    p = commands.add_parser("verify-witness", parents=[common], help="Check conjugators stored in a JSON file.")
    p.add_argument("path", type=str)

    p = commands.add_parser("fingerprint", parents=[common], help="Finite-quotient fingerprint of one group.")
    p.add_argument("-n", type=_dimension, required=True)
    p.add_argument("--matrix", type=str, required=True)
    p.add_argument("--modulus", type=int, choices=FINGERPRINT_MODULI, default=2)
    p.add_argument("--mod-center", action="store_true", help="Also factor out the central lattice.")

    commands.add_parser("check-theorems", parents=[common, search],
                        help="Classify n=3 and n=4 and compare with the reference tables.")
    return parser


def _search_space(args) -> SearchSpace:
    if args.translations is None:
        return SearchSpace(entry_bound=args.bound)
    return SearchSpace(entry_bound=args.bound, translations=args.translations)


def _emit(data: bytes, out: str | None):
    if out:
        with open(out, 'wb') as f:
            f.write(data)
        logging.info(f"Wrote {len(data)} bytes to {out}")
    else:
        sys.stdout.write(data.decode('utf-8'))
        sys.stdout.flush()


def _classify_with_names(n: int, args):
    labels = load_label_table(n, os.path.join(args.fixtures, LABELS_FILE))
    partition = classify(n, _search_space(args), labels=labels,
                         with_matrix_conjugacy=getattr(args, "matrix_conjugacy", False))
    try:
        reference = load_reference(n, os.path.join(args.fixtures, REFERENCE_FILE))
    except (FileNotFoundError, ValueError) as e:
        logging.info(f"No reference names attached: {e}")
        return partition, None
    return attach_reference_names(partition, reference), reference


def run_command(args) -> int:
    """
    Runs the parsed subcommand.

    Args:
        args: Namespace from build_parser().

    Returns:
        EXIT_OK, or EXIT_MISMATCH when a comparison or a witness check fails.
    """
    labels_path = os.path.join(args.fixtures, LABELS_FILE)

    if args.command == "enumerate":
        labels = load_label_table(args.n, labels_path)
        matrices = enumerate_matrices(args.n)
        logging.info(f"Enumerated {len(matrices)} Bott matrices for n={args.n}.")
        _emit(write_enumeration(matrices, labels, args.format), args.out)
        return EXIT_OK

    if args.command == "invariants":
        labels = load_label_table(args.n, labels_path)
        matrices = [parse_matrix(args.matrix, args.n, labels)] if args.matrix else enumerate_matrices(args.n)
        vectors = [(labels.label(A), invariant_vector(A)) for A in matrices]
        centers = [center_basis(BottGroup.from_matrix(A)) for A in matrices]
        _emit(write_invariants(vectors, args.format, centers), args.out)
        return EXIT_OK

    if args.command == "classify":
        partition, _ = _classify_with_names(args.n, args)
        _emit(write_report(partition, args.format), args.out)
        return EXIT_OK

    if args.command == "verify-witness":
        witnesses = load_witness_corpus(args.path, labels_path)
        results = []
        for w in witnesses:
            labels = load_label_table(w.n, labels_path)
            ok = verify_witness(w)
            if not ok:
                logging.error(f"Witness {labels.label(w.source)} -> {labels.label(w.target)} does not verify.")
            results.append((labels.label(w.source), labels.label(w.target), ok))
        _emit(write_verification(results), args.out)
        return EXIT_OK if all(ok for _, _, ok in results) else EXIT_MISMATCH

    if args.command == "fingerprint":
        labels = load_label_table(args.n, labels_path)
        A = parse_matrix(args.matrix, args.n, labels)
        fingerprint = finite_quotient_fingerprint(BottGroup.from_matrix(A), args.modulus, mod_center=args.mod_center)
        _emit(write_fingerprint(labels.label(A), args.modulus, args.mod_center, fingerprint, args.format), args.out)
        return EXIT_OK

    if args.command == "check-theorems":
        reports = []
        for n in THEOREM_DIMENSIONS:
            partition, reference = _classify_with_names(n, args)
            if reference is None:
                raise FileNotFoundError(f"No reference classification for n={n} under {args.fixtures}")
            report = compare_with_reference(partition, reference)
            for line in report.lines():
                logging.info(line)
            reports.append(report)
        _emit(write_comparisons(reports), args.out)
        return EXIT_OK if all(r.matched for r in reports) else EXIT_MISMATCH

    raise ValueError(f"Unknown command '{args.command}'")


def run_cli(argv: List[str]) -> int:
    """
    Parses argv and runs one command.

    Returns:
        0 on success, 1 on a reference mismatch, an undetermined classification
        or a failed witness, 2 on a usage error.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE

    logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
    logging.getLogger().setLevel(logging.DEBUG if args.verbose else logging.INFO)

    try:
        return run_command(args)
    except UndeterminedClassificationError as e:
        logging.error(f"Classification undetermined: {e}")
        return EXIT_MISMATCH
    except FingerprintBudgetError as e:
        logging.error(f"Fingerprint budget exceeded: {e}")
        return EXIT_MISMATCH
    except (ValueError, FileNotFoundError) as e:
        logging.error(f"{e}")
        return EXIT_USAGE


def main():
    """Main function to parse arguments and run the requested command."""
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == '__main__':
    main()
