"""
Brute-force ground truth and evaluation.

`oracle_map` scans every contig on both strands with a full semi-global
dynamic program, so it finds every location within k edits by
construction. `simulate_reads` plants mutated copies of genome windows and
records where they came from; `evaluate` scores mapper output against both.

Meant for desk-scale genomes: the scan is O(|read| * |genome|) per read.
"""
import logging
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, Field
from rich.table import Table

from masai_lite.errors import InputError
from masai_lite.index import encode_text
from masai_lite.mapper import dedupe_matches
from masai_lite.seq import ALPHABET, Genome, Read, Strand, orient, symbols_match
from masai_lite.verify import Match, leftmost_begin

logger = logging.getLogger(__name__)

_N = ALPHABET.index("N")
_BASES = "ACGT"
DEFAULT_INDEL_FRACTION = 0.05


@dataclass(frozen=True)
class OracleHit:
    read_id: str
    strand: Strand
    contig: int
    begin: int
    end: int
    distance: int

    def agrees_with(self, match: Match) -> bool:
        """Same strand and contig, overlapping intervals, equal distance."""
        return (
            match.strand is self.strand
            and match.contig == self.contig
            and match.begin < self.end
            and self.begin < match.end
            and match.errors == self.distance
        )


class EditPlan(NamedTuple):
    substitutions: int = 0
    insertions: int = 0
    deletions: int = 0

    @property
    def total(self) -> int:
        return self.substitutions + self.insertions + self.deletions

    @property
    def indels(self) -> int:
        return self.insertions + self.deletions


@dataclass(frozen=True)
class ReadOrigin:
    read_id: str
    strand: Strand
    contig: int
    begin: int
    end: int
    plan: EditPlan

    def near(self, match: Match, window_bp: int) -> bool:
        return (
            match.strand is self.strand
            and match.contig == self.contig
            and (abs(match.begin - self.begin) <= window_bp or abs(match.end - self.end) <= window_bp)
        )


# --- Reference kernels ---


def full_dp_distance(a: str, b: str) -> int:
    """Textbook edit distance; N matches nothing."""
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i]
        for j, y in enumerate(b, 1):
            cur.append(min(prev[j - 1] + (0 if symbols_match(x, y) else 1), prev[j] + 1, cur[j - 1] + 1))
        prev = cur
    return prev[-1]


def _codes(seq: str) -> np.ndarray:
    return np.frombuffer(encode_text(seq), dtype=np.uint8)


def hamming_scan(text: str, pattern: str, k: int) -> list[tuple[int, int]]:
    """(position, mismatches) for every window of `text` within `k` mismatches."""
    m = len(pattern)
    if m == 0 or m > len(text):
        return []
    windows = np.lib.stride_tricks.sliding_window_view(_codes(text), m)
    p = _codes(pattern)
    mismatches = ((windows != p) | (windows == _N) | (p == _N)).sum(axis=1)
    return [(int(pos), int(mismatches[pos])) for pos in np.flatnonzero(mismatches <= k)]


def semi_global_scores(pattern: str, text: str) -> np.ndarray:
    """
    Last row of the semi-global DP: entry j is the smallest edit distance
    between `pattern` and any substring of `text` ending at j.
    """
    t = _codes(text)
    n = len(t)
    cols = np.arange(n + 1, dtype=np.int64)
    prev = np.zeros(n + 1, dtype=np.int64)
    t_is_n = t == _N
    for i, c in enumerate(_codes(pattern), 1):
        cost = ((t != c) | t_is_n | (c == _N)).astype(np.int64)
        x = np.empty(n + 1, dtype=np.int64)
        x[0] = i
        np.minimum(prev[:-1] + cost, prev[1:] + 1, out=x[1:])
        # horizontal moves: D[j] = min over t <= j of x[t] + (j - t)
        prev = cols + np.minimum.accumulate(x - cols)
    return prev


def _hits_to_matches(read: Read, strand: Strand, contig: int, spans) -> list[Match]:
    return [Match(0, read.id, strand, contig, begin, end, distance) for begin, end, distance in spans]


def oracle_map(genome: Genome, read: Read, k: int, indels: bool = True) -> list[OracleHit]:
    """Every location of `read` within `k` edits (mismatches only when `indels` is off)."""
    found: list[Match] = []
    for strand in Strand:
        pattern = orient(read.seq, strand)
        m = len(pattern)
        for ci, contig in enumerate(genome.contigs):
            seq = genome.contig_sequence(ci)
            if not indels:
                spans = [(p, p + m, mm) for p, mm in hamming_scan(seq, pattern, k)]
            else:
                scores = semi_global_scores(pattern, seq)
                spans = []
                for end in np.flatnonzero(scores[1:] <= k) + 1:
                    distance = int(scores[end])
                    start = max(0, end - m - distance)
                    begin = end - leftmost_begin(pattern, seq[start:end], distance)
                    spans.append((int(begin), int(end), distance))
            offset = contig.start
            found.extend(
                _hits_to_matches(read, strand, ci, [(b + offset, e + offset, d) for b, e, d in spans])
            )
    return [
        OracleHit(read.id, m.strand, m.contig, m.begin, m.end, m.errors)
        for m in dedupe_matches(found)
    ]


# --- Read simulation ---


def _random_base(rng: np.random.Generator, exclude: Optional[str] = None) -> str:
    choices = [b for b in _BASES if b != exclude]
    return choices[int(rng.integers(len(choices)))]


def mutate_read(
    window: str, plan: EditPlan, rng: Union[int, np.random.Generator] = 0
) -> tuple[str, EditPlan]:
    """
    Applies `plan` to `window`: deletions, then insertions, then
    substitutions, each at distinct random positions. A substitution always
    changes the base. Returns the read and the plan actually applied.
    """
    rng = np.random.default_rng(rng)
    if plan.deletions >= len(window):
        raise InputError(f"cannot delete {plan.deletions} bases from a window of {len(window)}")
    bases = list(window)
    for pos in sorted(rng.choice(len(bases), plan.deletions, replace=False), reverse=True):
        del bases[pos]
    for _ in range(plan.insertions):
        bases.insert(int(rng.integers(len(bases) + 1)), _random_base(rng))
    substitutions = min(plan.substitutions, len(bases))
    for pos in rng.choice(len(bases), substitutions, replace=False):
        bases[pos] = _random_base(rng, exclude=bases[pos])
    return "".join(bases), EditPlan(substitutions, plan.insertions, plan.deletions)


def simulate_reads(
    genome: Genome,
    count: int,
    read_length: int,
    max_errors: int,
    indel_fraction: float = DEFAULT_INDEL_FRACTION,
    rng_seed: int = 0,
) -> tuple[list[Read], list[ReadOrigin]]:
    """
    Draws `count` reads: a uniform origin inside one contig (contigs weighted
    by length), a random strand, an edit count uniform in 0..max_errors of
    which each edit is an indel with probability `indel_fraction`.
    """
    rng = np.random.default_rng(rng_seed)
    lengths = np.array([c.length for c in genome.contigs], dtype=np.float64)
    reads, origins = [], []
    for i in range(count):
        edits = int(rng.integers(max_errors + 1))
        indels = int(rng.binomial(edits, indel_fraction))
        insertions = int(rng.integers(indels + 1))
        plan = EditPlan(edits - indels, insertions, indels - insertions)
        window_len = read_length + plan.deletions - plan.insertions

        fits = np.where(lengths >= window_len, lengths, 0.0)
        if fits.sum() == 0:
            raise InputError(f"no contig is long enough for {read_length} bp reads")
        ci = int(rng.choice(len(fits), p=fits / fits.sum()))
        contig = genome.contigs[ci]
        begin = contig.start + int(rng.integers(contig.length - window_len + 1))
        strand = Strand.FORWARD if rng.random() < 0.5 else Strand.REVERSE

        window = orient(genome.text[begin:begin + window_len], strand)
        seq, applied = mutate_read(window, plan, rng)
        read_id = f"sim{i}"
        reads.append(Read(read_id, seq, "I" * len(seq)))
        origins.append(ReadOrigin(read_id, strand, ci, begin, begin + window_len, applied))
    logger.info(f"Simulated {count} reads of {read_length} bp with up to {max_errors} edits")
    return reads, origins


# --- Evaluation ---


def _percent(found: int, total: int) -> Optional[float]:
    return 100.0 * found / total if total else None


def _fmt(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.2f}"


class StratumScore(BaseModel):
    """Counts for one edit-distance stratum."""

    distance: int
    all_total: int = 0
    all_found: int = 0
    all_best_total: int = 0
    all_best_found: int = 0
    any_best_total: int = 0
    any_best_found: int = 0
    recall_total: int = 0
    recall_found: int = 0

    def percent(self, category: str) -> Optional[float]:
        return _percent(getattr(self, f"{category}_found"), getattr(self, f"{category}_total"))


class VariantClassScore(BaseModel):
    """Reads sharing the same planted (substitutions, indels) mix."""

    substitutions: int
    indels: int
    reads: int = 0
    recalled: int = 0
    unique: int = 0
    unique_correct: int = 0

    @property
    def recall(self) -> Optional[float]:
        return _percent(self.recalled, self.reads)

    @property
    def precision(self) -> Optional[float]:
        return _percent(self.unique_correct, self.unique)


CATEGORIES = ("all", "all_best", "any_best", "recall")


class EvalReport(BaseModel):
    window_bp: int = Field(10, description="Recall tolerance around the simulated origin.")
    strata: list[StratumScore] = Field(default_factory=list)
    variant_classes: list[VariantClassScore] = Field(default_factory=list)

    def total(self, category: str) -> tuple[int, int]:
        found = sum(getattr(s, f"{category}_found") for s in self.strata)
        total = sum(getattr(s, f"{category}_total") for s in self.strata)
        return found, total

    def overall(self, category: str) -> Optional[float]:
        return _percent(*self.total(category))

    def to_tsv(self) -> str:
        lines = ["section\tkey\tfound\ttotal\tpercent"]
        for category in CATEGORIES:
            name = category.replace("_", "-")
            for s in self.strata:
                found, total = getattr(s, f"{category}_found"), getattr(s, f"{category}_total")
                lines.append(f"{name}\t{s.distance}\t{found}\t{total}\t{_fmt(_percent(found, total))}")
            found, total = self.total(category)
            lines.append(f"{name}\ttotal\t{found}\t{total}\t{_fmt(_percent(found, total))}")
        for v in self.variant_classes:
            key = f"subs={v.substitutions},indels={v.indels}"
            lines.append(f"class-recall\t{key}\t{v.recalled}\t{v.reads}\t{_fmt(v.recall)}")
            lines.append(f"class-precision\t{key}\t{v.unique_correct}\t{v.unique}\t{_fmt(v.precision)}")
        return "\n".join(lines) + "\n"

    def to_table(self) -> Table:
        table = Table(title="Mapping accuracy (%)")
        table.add_column("distance", justify="right")
        for category in CATEGORIES:
            table.add_column(category.replace("_", "-"), justify="right")
        for s in self.strata:
            table.add_row(str(s.distance), *(_fmt(s.percent(c)) for c in CATEGORIES))
        table.add_row("total", *(_fmt(self.overall(c)) for c in CATEGORIES), style="bold")
        return table

    def violations(
        self,
        min_all: Optional[float] = None,
        min_any_best: Optional[float] = None,
        min_recall: Optional[float] = None,
    ) -> list[str]:
        failed = []
        for category, threshold in (("all", min_all), ("any_best", min_any_best), ("recall", min_recall)):
            score = self.overall(category)
            if threshold is not None and score is not None and score < threshold:
                failed.append(f"{category.replace('_', '-')} {score:.2f}% below {threshold:.2f}%")
        return failed


def evaluate(
    reported: Mapping[str, Sequence[Match]],
    oracle_hits: Mapping[str, Sequence[OracleHit]],
    origins: Mapping[str, ReadOrigin],
    window_bp: int = 10,
) -> EvalReport:
    """Scores mapper output per edit-distance stratum and per planted variant class."""
    if set(reported) != set(oracle_hits) or set(reported) != set(origins):
        raise InputError("mapper output, oracle hits and origins cover different read ids")

    strata: dict[int, StratumScore] = {}
    classes: dict[tuple[int, int], VariantClassScore] = {}

    def stratum(d: int) -> StratumScore:
        return strata.setdefault(d, StratumScore(distance=d))

    for read_id in sorted(reported):
        matches = list(reported[read_id])
        hits = oracle_hits[read_id]
        origin = origins[read_id]

        for hit in hits:
            s = stratum(hit.distance)
            s.all_total += 1
            s.all_found += any(hit.agrees_with(m) for m in matches)
        if hits:
            best = min(h.distance for h in hits)
            s = stratum(best)
            best_hits = [h for h in hits if h.distance == best]
            s.all_best_total += len(best_hits)
            s.all_best_found += sum(any(h.agrees_with(m) for m in matches) for h in best_hits)
            s.any_best_total += 1
            s.any_best_found += any(h.agrees_with(m) for h in best_hits for m in matches)

        recalled = any(origin.near(m, window_bp) for m in matches)
        s = stratum(origin.plan.total)
        s.recall_total += 1
        s.recall_found += recalled

        key = (origin.plan.substitutions, origin.plan.indels)
        v = classes.setdefault(key, VariantClassScore(substitutions=key[0], indels=key[1]))
        v.reads += 1
        v.recalled += recalled
        if len(matches) == 1:
            v.unique += 1
            v.unique_correct += origin.near(matches[0], window_bp)

    return EvalReport(
        window_bp=window_bp,
        strata=[strata[d] for d in sorted(strata)],
        variant_classes=[classes[key] for key in sorted(classes)],
    )
