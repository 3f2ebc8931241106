"""Target-group assignment for short free-text answers, plus evaluation.

Each answer is assigned the profile whose keyword list it is most similar
to; answers whose best score falls strictly below the empirical
10%-quantile of best scores are relabeled to the special fallback group.
Evaluation covers accuracy against majority-vote gold labels and Cohen's
kappa agreement, including per-annotator mean agreement reports.

File formats (UTF-8, ``//`` comments):

    profiles:  M <name>            starts a profile (rest of line is the name)
               K <keyword> ...     adds keywords; a profile without keywords
                                   is the special fallback group
    answers:   <answer_id> TAB <text>
    gold:      <answer_id> TAB <annotator> TAB <label>
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

logger = logging.getLogger(__name__)

__all__ = [
    "MilieuProfile",
    "ProfileSet",
    "ContestAnswer",
    "AssignmentEntry",
    "AssignmentRun",
    "AgreementReport",
    "ProfileFormatError",
    "assign",
    "lower_quantile",
    "majority_vote",
    "accuracy",
    "cohens_kappa",
    "agreement_report",
    "load_profiles",
    "load_answers",
    "load_gold",
]

DEFAULT_SPECIAL_NAME = "special_groups"

AnswerScorer = Callable[[Sequence[str], Sequence[str]], float]


class ProfileFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class MilieuProfile:
    name: str
    keywords: tuple[str, ...]


@dataclass
class ProfileSet:
    """Assignable profiles in declaration order, plus the fallback name."""

    profiles: list[MilieuProfile]
    special_name: str = DEFAULT_SPECIAL_NAME

    def __post_init__(self):
        names = [p.name for p in self.profiles]
        if len(set(names)) != len(names):
            raise ValueError("profile names must be unique")
        if self.special_name in names:
            raise ValueError("the special fallback group cannot carry keywords")
        for profile in self.profiles:
            if not profile.keywords:
                raise ValueError(f"profile {profile.name!r} has no keywords")


@dataclass
class ContestAnswer:
    answer_id: str
    tokens: list[str]
    gold_labels: dict[str, str] = field(default_factory=dict)


@dataclass
class AssignmentEntry:
    answer_id: str
    best_milieu: str | None
    best_score: float | None
    final_label: str
    error: str | None = None


@dataclass
class AssignmentRun:
    estimator: str
    quantile: float
    threshold: float | None
    entries: list[AssignmentEntry]

    def labels(self) -> dict[str, str]:
        return {e.answer_id: e.final_label for e in self.entries}


def lower_quantile(values: Sequence[float], q: float) -> float | None:
    """The ceil(q*N)-th smallest value (inverted-CDF estimator); None if q=0.

    q*N within one part in 1e9 of an integer is snapped to that integer
    before the ceiling, so decimal quantiles behave as written.
    """
    if not 0.0 <= q <= 1.0:
        raise ValueError("quantile must lie in [0, 1]")
    n = len(values)
    if n == 0:
        raise ValueError("quantile of an empty sequence")
    product = q * n
    nearest = round(product)
    if math.isclose(product, nearest, rel_tol=1e-9, abs_tol=1e-12):
        k = nearest
    else:
        k = math.ceil(product)
    if k < 1:
        return None
    return sorted(values)[k - 1]


def assign(
    answers: Sequence[ContestAnswer],
    profiles: ProfileSet,
    estimator: AnswerScorer,
    quantile_q: float = 0.10,
    estimator_name: str = "custom",
) -> AssignmentRun:
    """Best-profile assignment with the low-score fallback rule.

    Per answer the best profile is the argmax of
    ``estimator(answer_tokens, keywords)`` over profiles in declaration
    order (first wins ties). Answers scoring strictly below the empirical
    ``quantile_q`` lower quantile of best scores are relabeled to the
    fallback group, as are answers whose estimator call failed.
    """
    if not answers:
        raise ValueError("no answers to assign")
    if not profiles.profiles:
        raise ValueError("need at least one assignable profile")
    entries: list[AssignmentEntry] = []
    for answer in answers:
        best_name: str | None = None
        best_score = -math.inf
        try:
            for profile in profiles.profiles:
                score = float(estimator(answer.tokens, list(profile.keywords)))
                if best_name is None or score > best_score:
                    best_name = profile.name
                    best_score = score
        except Exception as exc:  # noqa: BLE001 - estimator is caller-supplied
            logger.warning("estimator failed on answer %s: %s", answer.answer_id, exc)
            entries.append(
                AssignmentEntry(answer.answer_id, None, None, profiles.special_name, str(exc))
            )
            continue
        entries.append(AssignmentEntry(answer.answer_id, best_name, best_score, best_name))
    scored = [e.best_score for e in entries if e.best_score is not None]
    threshold = lower_quantile(scored, quantile_q) if scored else None
    if threshold is not None:
        for entry in entries:
            if entry.best_score is not None and entry.best_score < threshold:
                entry.final_label = profiles.special_name
    return AssignmentRun(estimator_name, quantile_q, threshold, entries)


def majority_vote(
    annotations: Mapping[str, Mapping[str, str]]
) -> tuple[dict[str, str], list[str]]:
    """Per-answer unique plurality label; tied answers are returned separately."""
    majorities: dict[str, str] = {}
    unresolved: list[str] = []
    for answer_id, votes in annotations.items():
        counts = Counter(votes.values()).most_common()
        if not counts:
            continue
        if len(counts) > 1 and counts[0][1] == counts[1][1]:
            unresolved.append(answer_id)
            continue
        majorities[answer_id] = counts[0][0]
    return majorities, unresolved


def accuracy(run: AssignmentRun, gold: Mapping[str, str]) -> float:
    """Fraction of gold-labeled answers whose final label matches."""
    evaluated = [e for e in run.entries if e.answer_id in gold]
    if not evaluated:
        raise ValueError("no overlap between the assignment run and the gold labels")
    hits = sum(1 for e in evaluated if e.final_label == gold[e.answer_id])
    return hits / len(evaluated)


def cohens_kappa(
    labels_a: Sequence[str | None], labels_b: Sequence[str | None]
) -> float:
    """Chance-corrected agreement over the jointly labeled items.

    Degenerate marginals (chance agreement 1) yield 1.0 for identical
    sequences and 0.0 otherwise.
    """
    if len(labels_a) != len(labels_b):
        raise ValueError("label sequences must have equal length")
    pairs = [
        (a, b) for a, b in zip(labels_a, labels_b) if a is not None and b is not None
    ]
    if not pairs:
        raise ValueError("no jointly labeled items")
    n = len(pairs)
    observed = sum(1 for a, b in pairs if a == b) / n
    marginal_a = Counter(a for a, _ in pairs)
    marginal_b = Counter(b for _, b in pairs)
    expected = sum(
        (marginal_a[label] / n) * (marginal_b[label] / n) for label in marginal_a
    )
    if expected >= 1.0:
        logger.warning("degenerate marginals: chance agreement is 1")
        return 1.0 if observed == 1.0 else 0.0
    return (observed - expected) / (1.0 - expected)


@dataclass
class AgreementReport:
    annotator_means: dict[str, float]
    min_mean: float
    max_mean: float
    run_mean: float | None
    excluded: list[str] = field(default_factory=list)
    parts: list[tuple[str, "AgreementReport"]] = field(default_factory=list)


def _mean_kappa_against(
    labels: Sequence[str | None],
    others: Mapping[str, Sequence[str | None]],
) -> float | None:
    kappas = []
    for other in others.values():
        try:
            kappas.append(cohens_kappa(labels, other))
        except ValueError:
            continue
    return sum(kappas) / len(kappas) if kappas else None


def agreement_report(
    annotators: Mapping[str, Sequence[str | None]],
    run_labels: Sequence[str | None] | None = None,
    parts: Sequence[tuple[str, slice]] | None = None,
) -> AgreementReport:
    """Mean pairwise kappa per annotator, its extremes, and the run's mean.

    Annotators with no labeled overlap with any other annotator are
    excluded and listed. *parts* adds sub-reports over slices of the item
    range, for annotation campaigns where some annotators labeled only a
    part of the data.
    """
    if len(annotators) < 2:
        raise ValueError("need at least two annotators")
    lengths = {len(labels) for labels in annotators.values()}
    if run_labels is not None:
        lengths.add(len(run_labels))
    if len(lengths) != 1:
        raise ValueError("annotator label lists must be aligned to equal length")
    means: dict[str, float] = {}
    excluded: list[str] = []
    for name, labels in annotators.items():
        others = {n: l for n, l in annotators.items() if n != name}
        mean = _mean_kappa_against(labels, others)
        if mean is None:
            logger.warning("annotator %s shares no labeled items with the others", name)
            excluded.append(name)
        else:
            means[name] = mean
    if not means:
        raise ValueError("no annotator pair shares labeled items")
    run_mean = (
        _mean_kappa_against(run_labels, annotators) if run_labels is not None else None
    )
    report = AgreementReport(
        means, min(means.values()), max(means.values()), run_mean, excluded
    )
    if parts:
        for part_name, window in parts:
            sub = agreement_report(
                {n: labels[window] for n, labels in annotators.items()},
                run_labels[window] if run_labels is not None else None,
            )
            report.parts.append((part_name, sub))
    return report


def load_profiles(stream: Iterable[str]) -> ProfileSet:
    """Parse a profiles file; at most one keyword-less profile (the fallback)."""
    named: list[tuple[str, list[str]]] = []
    for line_no, raw in enumerate(stream, start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("//"):
            continue
        tag, _, rest = stripped.partition(" ")
        if tag == "M":
            name = rest.strip()
            if not name:
                raise ProfileFormatError("profile line is missing a name", line_no)
            if any(name == n for n, _ in named):
                raise ProfileFormatError(f"duplicate profile name {name!r}", line_no)
            named.append((name, []))
        elif tag == "K":
            if not named:
                raise ProfileFormatError("keyword line before any profile", line_no)
            keywords = rest.split()
            if not keywords:
                raise ProfileFormatError("keyword line carries no keywords", line_no)
            named[-1][1].extend(keywords)
        else:
            raise ProfileFormatError(f"unknown line tag {tag!r}", line_no)
    specials = [name for name, keywords in named if not keywords]
    if len(specials) > 1:
        raise ProfileFormatError(f"multiple keyword-less profiles: {', '.join(specials)}")
    profiles = [
        MilieuProfile(name, tuple(keywords)) for name, keywords in named if keywords
    ]
    special = specials[0] if specials else DEFAULT_SPECIAL_NAME
    return ProfileSet(profiles, special)


def load_answers(stream: Iterable[str]) -> list[ContestAnswer]:
    answers: list[ContestAnswer] = []
    seen: set[str] = set()
    for line_no, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip() or line.startswith("//"):
            continue
        answer_id, sep, text = line.partition("\t")
        if not sep or not answer_id.strip():
            raise ProfileFormatError(
                "answer line must be: <answer_id> TAB <text>", line_no
            )
        answer_id = answer_id.strip()
        if answer_id in seen:
            raise ProfileFormatError(f"duplicate answer id {answer_id!r}", line_no)
        seen.add(answer_id)
        answers.append(ContestAnswer(answer_id, text.split()))
    return answers


def load_gold(stream: Iterable[str]) -> dict[str, dict[str, str]]:
    gold: dict[str, dict[str, str]] = {}
    for line_no, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip() or line.startswith("//"):
            continue
        fields = line.split("\t")
        if len(fields) != 3 or not all(f.strip() for f in fields):
            raise ProfileFormatError(
                "gold line must be: <answer_id> TAB <annotator> TAB <label>", line_no
            )
        answer_id, annotator, label = (f.strip() for f in fields)
        votes = gold.setdefault(answer_id, {})
        if annotator in votes:
            raise ProfileFormatError(
                f"duplicate vote by {annotator!r} on {answer_id!r}", line_no
            )
        votes[annotator] = label
    return gold
