"""Command-line pipeline: parse -> walk -> train -> wct -> classify -> evaluate.

One binary with subcommands; stages communicate through files so each is
independently runnable and testable. Every run writes a JSON manifest next
to its outputs containing the exact tokens needed to reproduce it. Outputs
are written under a ``.partial`` suffix and renamed on success.

Exit codes: 1 input format error, 2 usage or missing file, 3 missing sort
for sort substitution, 4 empty training vocabulary, 5 unknown estimator,
6 bad combination weights.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Callable, Sequence

from . import __version__
from .lexicon import (
    Lexicon,
    LexiconFormatError,
    load_lemma_map,
    load_lexicon,
)
from .segment import (
    AssignmentEntry,
    AssignmentRun,
    ProfileFormatError,
    accuracy,
    agreement_report,
    assign,
    cohens_kappa,
    load_answers,
    load_gold,
    load_profiles,
    majority_vote,
)
from .sgns import (
    EmptyVocabularyError,
    TableFormatError,
    TrainConfig,
    load_table,
    read_corpus,
    save_table,
    train,
)
from .similarity import (
    CombinationWeights,
    SimilarityEstimate,
    sim_combined,
    sim_concatenated,
    sim_concepts,
    sim_jaccard,
    sim_words,
)
from .sn import SnFormatError, load_sort_taxonomy, parse_sn_document
from .walks import (
    InnerNodePolicy,
    MissingSortError,
    WalkConfig,
    generate_corpus,
)
from .wsd import build_word_concept_table, load_word_concept_table, save_word_concept_table

logger = logging.getLogger(__name__)

EXIT_FORMAT = 1
EXIT_USAGE = 2
EXIT_MISSING_SORT = 3
EXIT_EMPTY_VOCAB = 4
EXIT_UNKNOWN_ESTIMATOR = 5
EXIT_BAD_WEIGHTS = 6

ESTIMATORS = ("words", "concepts", "combined", "concat", "jaccard")


class CliError(Exception):
    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


@contextmanager
def atomic_output(path: Path):
    """Write to ``<path>.partial`` and rename on success."""
    partial = path.with_name(path.name + ".partial")
    with open(partial, "w", encoding="utf-8") as out:
        yield out
    os.replace(partial, path)


def write_manifest(anchor: Path, subcommand: str, argv_equivalent: list[str],
                   inputs: dict, outputs: dict, options: dict, deterministic: bool) -> Path:
    manifest_path = anchor.with_name(anchor.name + ".manifest.json")
    payload = {
        "tool": "cewalk",
        "version": __version__,
        "subcommand": subcommand,
        "argv": argv_equivalent,
        "inputs": inputs,
        "outputs": outputs,
        "options": options,
        "deterministic": deterministic,
    }
    with atomic_output(manifest_path) as out:
        json.dump(payload, out, indent=2, sort_keys=True)
        out.write("\n")
    return manifest_path


def _open_lines(path: str) -> list[str]:
    with open(path, "r", encoding="utf-8") as stream:
        return stream.readlines()


def _parse_symmetric(spec: str | None) -> frozenset[str]:
    if not spec:
        return frozenset()
    return frozenset(name.strip() for name in spec.split(",") if name.strip())


# ---------------------------------------------------------------- subcommands


def cmd_walk(args: argparse.Namespace) -> int:
    nets = parse_sn_document(_open_lines(args.sn_file), _parse_symmetric(args.symmetric_relations))
    if args.sorts:
        taxonomy = load_sort_taxonomy(_open_lines(args.sorts))
        for net in nets:
            for node in net.nodes.values():
                if node.sort is not None and node.sort not in taxonomy:
                    raise SnFormatError(
                        f"node {node.node_id!r} in {net.sentence_id!r} has unknown sort {node.sort!r}"
                    )
    cfg = WalkConfig(
        stop_threshold=args.stop_threshold,
        max_steps=args.max_steps,
        walks_per_network=args.walks_per_network,
        inner_node_policy=InnerNodePolicy(args.inner_node_policy),
        rng_seed=args.seed,
    )
    out_path = Path(args.out)
    with atomic_output(out_path) as out:
        for line in generate_corpus(nets, cfg):
            out.write(line + "\n")
    options = {
        "out": args.out,
        "stop-threshold": args.stop_threshold,
        "max-steps": args.max_steps,
        "walks-per-network": args.walks_per_network,
        "inner-node-policy": args.inner_node_policy,
        "seed": args.seed,
    }
    argv_equivalent = ["walk", args.sn_file] + _flatten_options(options)
    if args.symmetric_relations:
        argv_equivalent += ["--symmetric-relations", args.symmetric_relations]
        options["symmetric-relations"] = args.symmetric_relations
    if args.sorts:
        argv_equivalent += ["--sorts", args.sorts]
        options["sorts"] = args.sorts
    write_manifest(
        out_path, "walk", argv_equivalent,
        {"sn_file": args.sn_file}, {"corpus": args.out}, options, deterministic=True,
    )
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    sentences = read_corpus(args.corpus)
    cfg = TrainConfig(
        dimension=args.dimension,
        window=args.window,
        negatives=args.negatives,
        epochs=args.epochs,
        initial_learning_rate=args.learning_rate,
        min_learning_rate=args.min_learning_rate,
        subsample_t=args.subsample,
        unigram_power=args.unigram_power,
        min_count=args.min_count,
        rng_seed=args.seed,
    )
    table = train(sentences, cfg, threads=args.threads)
    out_path = Path(args.out)
    partial = out_path.with_name(out_path.name + ".partial")
    save_table(table, partial)
    os.replace(partial, out_path)
    options = {
        "out": args.out,
        "dimension": args.dimension,
        "window": args.window,
        "negatives": args.negatives,
        "epochs": args.epochs,
        "learning-rate": args.learning_rate,
        "min-learning-rate": args.min_learning_rate,
        "subsample": args.subsample,
        "unigram-power": args.unigram_power,
        "min-count": args.min_count,
        "seed": args.seed,
        "threads": args.threads,
    }
    write_manifest(
        out_path, "train", ["train", args.corpus] + _flatten_options(options),
        {"corpus": args.corpus}, {"table": args.out}, options,
        deterministic=args.threads <= 1,
    )
    return 0


def cmd_wct(args: argparse.Namespace) -> int:
    nets = parse_sn_document(_open_lines(args.sn_file))
    words = load_table(args.words_table)
    wct = build_word_concept_table(nets, words)
    out_path = Path(args.out)
    partial = out_path.with_name(out_path.name + ".partial")
    save_word_concept_table(wct, partial)
    os.replace(partial, out_path)
    options = {"out": args.out, "words-table": args.words_table}
    write_manifest(
        out_path, "wct", ["wct", args.sn_file] + _flatten_options(options),
        {"sn_file": args.sn_file, "words_table": args.words_table},
        {"wct_table": args.out}, options, deterministic=True,
    )
    return 0


def _require(args: argparse.Namespace, flag: str, estimator: str):
    dest = flag.lstrip("-").replace("-", "_")
    if getattr(args, dest, None) is None:
        raise CliError(f"estimator {estimator!r} requires {flag}", EXIT_USAGE)


def build_scorer(args: argparse.Namespace) -> Callable[[Sequence[str], Sequence[str]], SimilarityEstimate]:
    """Validate estimator flags and return (answer, keywords) -> estimate."""
    name = args.estimator
    if name not in ESTIMATORS:
        raise CliError(
            f"unknown estimator {name!r}; valid names: {', '.join(ESTIMATORS)}",
            EXIT_UNKNOWN_ESTIMATOR,
        )
    if name == "jaccard":
        return sim_jaccard
    if name == "words":
        _require(args, "--words-table", name)
        words = load_table(args.words_table)
        return lambda a, b: sim_words(a, b, words)
    if name == "concat":
        _require(args, "--words-table", name)
        _require(args, "--aux-table", name)
        words = load_table(args.words_table)
        aux = load_table(args.aux_table)
        return lambda a, b: sim_concatenated(a, b, words, aux)
    for flag in ("--words-table", "--concepts-table", "--wct-table", "--lexicon"):
        _require(args, flag, name)
    words = load_table(args.words_table)
    concepts = load_table(args.concepts_table)
    wct = load_word_concept_table(args.wct_table)
    lex = load_lexicon(_open_lines(args.lexicon))
    lemma_map = load_lemma_map(_open_lines(args.lemma_map)) if args.lemma_map else None
    if name == "concepts":
        return lambda a, b: sim_concepts(a, b, lex, wct, words, concepts, lemma_map)
    try:
        weights = CombinationWeights(args.ce_weight, args.w2v_weight)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_BAD_WEIGHTS) from exc
    return lambda a, b: sim_combined(a, b, weights, lex, wct, words, concepts, lemma_map)


def _scorer_options(args: argparse.Namespace) -> dict:
    options = {"estimator": args.estimator}
    for key in ("words_table", "concepts_table", "wct_table", "aux_table", "lexicon", "lemma_map"):
        value = getattr(args, key, None)
        if value is not None:
            options[key.replace("_", "-")] = value
    if args.estimator == "combined":
        options["ce-weight"] = args.ce_weight
        options["w2v-weight"] = args.w2v_weight
    return options


def cmd_classify(args: argparse.Namespace) -> int:
    scorer = build_scorer(args)
    answers = load_answers(_open_lines(args.answers))
    profiles = load_profiles(_open_lines(args.profiles))
    run = assign(
        answers,
        profiles,
        lambda tokens, keywords: scorer(tokens, keywords).value,
        quantile_q=args.quantile,
        estimator_name=args.estimator,
    )
    out_path = Path(args.out)
    with atomic_output(out_path) as out:
        out.write(f"// estimator\t{run.estimator}\n")
        out.write(f"// quantile\t{run.quantile:.9g}\n")
        threshold = "-" if run.threshold is None else f"{run.threshold:.9g}"
        out.write(f"// threshold\t{threshold}\n")
        out.write("answer_id\tbest_milieu\tbest_score\tfinal_label\n")
        for entry in run.entries:
            best = entry.best_milieu if entry.best_milieu is not None else "-"
            score = "-" if entry.best_score is None else f"{entry.best_score:.9g}"
            out.write(f"{entry.answer_id}\t{best}\t{score}\t{entry.final_label}\n")
    options = _scorer_options(args)
    options.update({"out": args.out, "quantile": args.quantile})
    write_manifest(
        out_path, "classify",
        ["classify", args.answers, args.profiles] + _flatten_options(options),
        {"answers": args.answers, "profiles": args.profiles},
        {"assignment": args.out}, options, deterministic=True,
    )
    return 0


def read_assignment(path: str) -> AssignmentRun:
    """Read a classify output file back into an AssignmentRun."""
    estimator = "unknown"
    quantile = 0.0
    threshold: float | None = None
    entries: list[AssignmentEntry] = []
    header_seen = False
    for line_no, raw in enumerate(_open_lines(path), start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        if line.startswith("//"):
            fields = line[2:].strip().split("\t")
            if len(fields) == 2:
                key, value = fields
                if key == "estimator":
                    estimator = value
                elif key == "quantile":
                    quantile = float(value)
                elif key == "threshold" and value != "-":
                    threshold = float(value)
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            raise ProfileFormatError("assignment line must have 4 tab-separated fields", line_no)
        if not header_seen:
            header_seen = True
            continue
        answer_id, best, score, final = fields
        entries.append(
            AssignmentEntry(
                answer_id,
                None if best == "-" else best,
                None if score == "-" else float(score),
                final,
            )
        )
    return AssignmentRun(estimator, quantile, threshold, entries)


def _format_report_rows(rows: list[tuple[str, str]]) -> str:
    width = max(len(name) for name, _ in rows)
    return "\n".join(f"{name:<{width}}  {value}" for name, value in rows)


def cmd_evaluate(args: argparse.Namespace) -> int:
    run = read_assignment(args.assignment)
    gold = load_gold(_open_lines(args.gold))
    majorities, unresolved = majority_vote(gold)
    acc = accuracy(run, majorities)

    answer_ids = [entry.answer_id for entry in run.entries]
    annotator_names = sorted({name for votes in gold.values() for name in votes})
    annotators = {
        name: [gold.get(answer_id, {}).get(name) for answer_id in answer_ids]
        for name in annotator_names
    }
    run_labels = [entry.final_label for entry in run.entries]

    rows: list[tuple[str, str]] = [
        ("answers", str(len(run.entries))),
        ("gold-labeled", str(len([i for i in answer_ids if i in majorities]))),
        ("majority-ties-excluded", str(len(unresolved))),
        ("accuracy", f"{acc:.4f}"),
    ]
    tsv_rows: list[tuple[str, ...]] = [(name, value) for name, value in rows]

    report = None
    if len(annotators) >= 2:
        parts = None
        if args.split_at and 0 < args.split_at < len(answer_ids):
            parts = [
                (f"first_{args.split_at}", slice(0, args.split_at)),
                ("rest", slice(args.split_at, None)),
            ]
        report = agreement_report(annotators, run_labels, parts)
        rows.append(("min-mean-kappa", f"{report.min_mean:.4f}"))
        rows.append(("max-mean-kappa", f"{report.max_mean:.4f}"))
        rows.append(("run-mean-kappa", f"{report.run_mean:.4f}"))
        tsv_rows.append(("min-mean-kappa", f"{report.min_mean:.9g}"))
        tsv_rows.append(("max-mean-kappa", f"{report.max_mean:.9g}"))
        tsv_rows.append(("run-mean-kappa", f"{report.run_mean:.9g}"))
        for name, mean in sorted(report.annotator_means.items()):
            rows.append((f"mean-kappa[{name}]", f"{mean:.4f}"))
            tsv_rows.append(("mean-kappa", name, f"{mean:.9g}"))
        for part_name, sub in report.parts:
            rows.append((f"{part_name}: min-mean-kappa", f"{sub.min_mean:.4f}"))
            rows.append((f"{part_name}: max-mean-kappa", f"{sub.max_mean:.4f}"))
            tsv_rows.append((part_name, "min-mean-kappa", f"{sub.min_mean:.9g}"))
            tsv_rows.append((part_name, "max-mean-kappa", f"{sub.max_mean:.9g}"))
    elif len(annotators) == 1:
        (name, labels), = annotators.items()
        kappa = cohens_kappa(run_labels, labels)
        rows.append((f"run-kappa[{name}]", f"{kappa:.4f}"))
        tsv_rows.append(("run-kappa", name, f"{kappa:.9g}"))

    text = _format_report_rows(rows) + "\n"
    print(text, end="")
    if args.out:
        text_path = Path(args.out + ".txt")
        with atomic_output(text_path) as out:
            out.write(text)
        with atomic_output(Path(args.out + ".tsv")) as out:
            for row in tsv_rows:
                out.write("\t".join(row) + "\n")
        options = {"out": args.out}
        if args.split_at:
            options["split-at"] = args.split_at
        write_manifest(
            text_path, "evaluate",
            ["evaluate", args.assignment, args.gold] + _flatten_options(options),
            {"assignment": args.assignment, "gold": args.gold},
            {"text": args.out + ".txt", "tsv": args.out + ".tsv"},
            options, deterministic=True,
        )
    return 0


def cmd_sim(args: argparse.Namespace) -> int:
    scorer = build_scorer(args)
    estimate = scorer(args.text_a.split(), args.text_b.split())
    print(f"{estimate.method}\t{estimate.value:.9g}")
    for key in sorted(estimate.diagnostics):
        print(f"// {key}\t{estimate.diagnostics[key]}")
    return 0


# ------------------------------------------------------------------- parsing


def _flatten_options(options: dict) -> list[str]:
    argv: list[str] = []
    for key, value in options.items():
        argv += [f"--{key}", str(value)]
    return argv


def _add_scorer_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--estimator", default="words",
                     help=f"one of: {', '.join(ESTIMATORS)}")
    sub.add_argument("--words-table", help="word embedding table")
    sub.add_argument("--concepts-table", help="concept embedding table (walk-trained)")
    sub.add_argument("--wct-table", help="word-concept table for disambiguation")
    sub.add_argument("--aux-table", help="auxiliary table for the concat estimator")
    sub.add_argument("--lexicon", help="sense lexicon file")
    sub.add_argument("--lemma-map", help="surface-form to lemma fallback file")
    sub.add_argument("--ce-weight", type=float, default=0.2,
                     help="concept weight for the combined estimator")
    sub.add_argument("--w2v-weight", type=float, default=0.8,
                     help="word weight for the combined estimator")


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, set[str]]]:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=1, help="random seed")
    common.add_argument("--threads", type=int, default=1,
                        help="worker threads; >1 forfeits reproducibility")
    common.add_argument("--config", help="flat key = value defaults file")
    common.add_argument("--verbose", action="store_true", help="info-level logging")

    parser = argparse.ArgumentParser(
        prog="cewalk",
        description="Concept embeddings from semantic-network random walks, "
                    "text similarity, and target-group assignment.",
    )
    parser.add_argument("--version", action="version", version=f"cewalk {__version__}")
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    known_flags: dict[str, set[str]] = {}

    walk = subparsers.add_parser("walk", parents=[common],
                                 help="generate a random-walk corpus from MNSN networks")
    walk.add_argument("sn_file")
    walk.add_argument("--out", required=True, help="corpus output path")
    walk.add_argument("--stop-threshold", type=float, default=0.05)
    walk.add_argument("--max-steps", type=int, default=40)
    walk.add_argument("--walks-per-network", type=int, default=10)
    walk.add_argument("--inner-node-policy", choices=["elide", "sort"], default="elide")
    walk.add_argument("--symmetric-relations", help="comma-separated relation names")
    walk.add_argument("--sorts", help="sort taxonomy file")
    walk.set_defaults(func=cmd_walk)

    train_p = subparsers.add_parser("train", parents=[common],
                                    help="train embeddings on a walk or text corpus")
    train_p.add_argument("corpus")
    train_p.add_argument("--out", required=True, help="embedding table output path")
    train_p.add_argument("--dimension", type=int, default=300)
    train_p.add_argument("--window", type=int, default=7)
    train_p.add_argument("--negatives", type=int, default=5)
    train_p.add_argument("--epochs", type=int, default=5)
    train_p.add_argument("--learning-rate", type=float, default=0.025)
    train_p.add_argument("--min-learning-rate", type=float, default=1e-4)
    train_p.add_argument("--subsample", type=float, default=1e-4)
    train_p.add_argument("--unigram-power", type=float, default=0.75)
    train_p.add_argument("--min-count", type=int, default=5)
    train_p.set_defaults(func=cmd_train)

    wct = subparsers.add_parser("wct", parents=[common],
                                help="build a word-concept table from networks with tokens")
    wct.add_argument("sn_file")
    wct.add_argument("--words-table", required=True)
    wct.add_argument("--out", required=True)
    wct.set_defaults(func=cmd_wct)

    classify = subparsers.add_parser("classify", parents=[common],
                                     help="assign answers to the best-matching profile")
    classify.add_argument("answers")
    classify.add_argument("profiles")
    classify.add_argument("--out", required=True)
    classify.add_argument("--quantile", type=float, default=0.10,
                          help="fallback quantile for the special group")
    _add_scorer_flags(classify)
    classify.set_defaults(func=cmd_classify)

    evaluate = subparsers.add_parser("evaluate", parents=[common],
                                     help="score an assignment against gold annotations")
    evaluate.add_argument("assignment")
    evaluate.add_argument("gold")
    evaluate.add_argument("--out", help="report path prefix (.txt and .tsv)")
    evaluate.add_argument("--split-at", type=int,
                          help="also report agreement over the first N / remaining items")
    evaluate.set_defaults(func=cmd_evaluate)

    sim = subparsers.add_parser("sim", parents=[common],
                                help="ad-hoc similarity of two texts")
    sim.add_argument("--text-a", required=True)
    sim.add_argument("--text-b", required=True)
    _add_scorer_flags(sim)
    sim.set_defaults(func=cmd_sim)

    for name, sub in subparsers.choices.items():
        flags = set()
        for action in sub._actions:  # noqa: SLF001 - argparse offers no public listing
            flags.update(action.option_strings)
        known_flags[name] = flags
    return parser, known_flags


def load_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for line_no, raw in enumerate(_open_lines(path), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("//"):
            continue
        key, sep, value = stripped.partition("=")
        if not sep or not key.strip():
            raise ProfileFormatError("config line must be: key = value", line_no)
        values[key.strip().replace("_", "-")] = value.strip()
    return values


def _apply_config(argv: list[str], known_flags: dict[str, set[str]]) -> list[str]:
    """Expand --config entries into flags inserted after the subcommand.

    Command-line flags appear later and therefore win; config keys not
    accepted by the subcommand are skipped.
    """
    if not argv or "--config" not in argv:
        return argv
    at = argv.index("--config")
    if at + 1 >= len(argv):
        return argv  # argparse will report the missing value
    values = load_config_file(argv[at + 1])
    subcommand = argv[0]
    flags = known_flags.get(subcommand, set())
    inserted: list[str] = []
    for key, value in values.items():
        flag = f"--{key}"
        if flag == "--config":
            continue
        if flag in flags:
            inserted += [flag, value]
        else:
            logger.debug("config key %s not used by %s", key, subcommand)
    return [argv[0]] + inserted + argv[1:]


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, known_flags = build_parser()
    try:
        argv = _apply_config(argv, known_flags)
    except FileNotFoundError as exc:
        print(f"cewalk: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ProfileFormatError as exc:
        print(f"cewalk: config: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except CliError as exc:
        print(f"cewalk: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"cewalk: missing file: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MissingSortError as exc:
        print(f"cewalk: {exc}", file=sys.stderr)
        return EXIT_MISSING_SORT
    except EmptyVocabularyError as exc:
        print(f"cewalk: {exc}", file=sys.stderr)
        return EXIT_EMPTY_VOCAB
    except (SnFormatError, LexiconFormatError, ProfileFormatError, TableFormatError) as exc:
        print(f"cewalk: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except ValueError as exc:
        print(f"cewalk: {exc}", file=sys.stderr)
        return EXIT_FORMAT


if __name__ == "__main__":
    sys.exit(main())
