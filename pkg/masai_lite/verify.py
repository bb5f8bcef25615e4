"""
Candidate verification.

Seeds reported by the backtracking step are extended into full-read
alignments: first the read prefix to the left of the seed, then, only when
that succeeds, the suffix to the right within whatever budget is left. Each
side is a global alignment of the read flank against a genome window with a
free far end, computed with Myers' bit-vector algorithm after skipping the
longest common prefix next to the seed.
"""
import logging
from dataclasses import dataclass
from typing import Iterator, Optional

from masai_lite.seq import Genome, Strand, contig_index_of, symbols_match

logger = logging.getLogger(__name__)

_INF = float("inf")


@dataclass(frozen=True)
class ExtensionBudget:
    total_k: int
    seed_errors: int

    @property
    def remaining(self) -> int:
        return self.total_k - self.seed_errors


@dataclass(frozen=True)
class Match:
    read_index: int
    read_id: str
    strand: Strand
    contig: int
    begin: int
    end: int
    errors: int
    cigar: Optional[str] = None

    @property
    def length(self) -> int:
        return self.end - self.begin

    def overlaps(self, other: "Match") -> bool:
        return (
            self.strand is other.strand
            and self.contig == other.contig
            and self.begin < other.end
            and other.begin < self.end
        )


def _peq(pattern: str) -> dict[str, int]:
    masks: dict[str, int] = {}
    for i, c in enumerate(pattern):
        if c != "N":
            masks[c] = masks.get(c, 0) | (1 << i)
    return masks


def myers_prefix_scores(pattern: str, text: str, free_start: bool = False) -> Iterator[int]:
    """
    Yields D[m][j] for j = 0..len(text): the edit distance between the whole
    pattern and text[:j]. The start is anchored unless `free_start` is set,
    in which case D[m][j] is the best distance of any substring ending at j.
    """
    m = len(pattern)
    if m == 0:
        yield from ([0] * (len(text) + 1) if free_start else range(len(text) + 1))
        return
    mask = (1 << m) - 1
    high = 1 << (m - 1)
    peq = _peq(pattern)
    vp, vn = mask, 0
    score = m
    yield score
    for c in text:
        eq = peq.get(c, 0)
        xv = eq | vn
        xh = ((((eq & vp) + vp) & mask) ^ vp) | eq
        hp = (vn | ~(xh | vp)) & mask
        hn = vp & xh
        if hp & high:
            score += 1
        elif hn & high:
            score -= 1
        # row 0 grows by one per column unless the start is free
        hp = ((hp << 1) | (0 if free_start else 1)) & mask
        hn = (hn << 1) & mask
        vp = (hn | ~(xv | hp)) & mask
        vn = hp & xv
        yield score


def myers_distance(pattern: str, text_window: str) -> int:
    """Global edit distance via the bit-vector kernel (multi-word by Python ints)."""
    score = len(pattern)
    for score in myers_prefix_scores(pattern, text_window):
        pass
    return score


def banded_global_distance(a: str, b: str, max_err: int) -> Optional[int]:
    """Global edit distance restricted to diagonals |i - j| <= max_err, or None above max_err."""
    n, m = len(a), len(b)
    if abs(n - m) > max_err:
        return None
    # prev[j] holds D[i-1][j]; cells outside the band stay infinite
    prev = [j if j <= max_err else _INF for j in range(m + 1)]
    for i in range(1, n + 1):
        cur = [_INF] * (m + 1)
        lo, hi = max(0, i - max_err), min(m, i + max_err)
        if lo == 0:
            cur[0] = i
        row_min = cur[0] if lo == 0 else _INF
        ai = a[i - 1]
        for j in range(max(1, lo), hi + 1):
            cost = 0 if symbols_match(ai, b[j - 1]) else 1
            best = min(prev[j - 1] + cost, prev[j] + 1, cur[j - 1] + 1)
            cur[j] = best
            if best < row_min:
                row_min = best
        if row_min > max_err:
            return None
        prev = cur
    result = prev[m]
    return int(result) if result <= max_err else None


def lcp_prime(a: str, b: str) -> int:
    """Length of the longest common prefix, N matching nothing."""
    i = 0
    for x, y in zip(a, b):
        if not symbols_match(x, y):
            break
        i += 1
    return i


def _extend_side(flank: str, window: str, budget: int, prefer_longest: bool) -> Optional[tuple[int, int]]:
    """
    Aligns all of `flank` against a prefix of `window` (both read outward
    from the seed). Returns (cost, window characters consumed) or None when
    the cost exceeds `budget`.
    """
    primed = lcp_prime(flank, window)
    best_cost, best_used = None, 0
    for used, cost in enumerate(myers_prefix_scores(flank[primed:], window[primed:])):
        if best_cost is None or cost < best_cost or (cost == best_cost and prefer_longest):
            best_cost, best_used = cost, used
    if best_cost is None or best_cost > budget:
        return None
    return best_cost, primed + best_used


def extend_match(
    genome: Genome,
    oriented_read: str,
    seed_offset: int,
    seed_length: int,
    text_position: int,
    seed_errors: int,
    k: int,
    *,
    read_index: int = 0,
    read_id: str = "",
    strand: Strand = Strand.FORWARD,
) -> Optional[Match]:
    """
    Extends a seed occurrence with `seed_errors` mismatches into a full
    alignment of `oriented_read` within `k` edits.
    """
    budget = ExtensionBudget(k, seed_errors)
    if budget.remaining < 0:
        return None
    contig_index = contig_index_of(genome, text_position)
    contig = genome.contigs[contig_index]
    seed_end = text_position + seed_length
    if seed_end > contig.end:
        return None
    text = genome.text

    prefix = oriented_read[:seed_offset]
    window_start = max(contig.start, text_position - len(prefix) - budget.remaining)
    left = _extend_side(
        prefix[::-1], text[window_start:text_position][::-1], budget.remaining, prefer_longest=True
    )
    if left is None:
        return None
    left_cost, left_used = left

    suffix = oriented_read[seed_offset + seed_length:]
    right_budget = budget.remaining - left_cost
    window_end = min(contig.end, seed_end + len(suffix) + right_budget)
    right = _extend_side(suffix, text[seed_end:window_end], right_budget, prefer_longest=False)
    if right is None:
        return None
    right_cost, right_used = right

    return Match(
        read_index=read_index,
        read_id=read_id,
        strand=strand,
        contig=contig_index,
        begin=text_position - left_used,
        end=seed_end + right_used,
        errors=seed_errors + left_cost + right_cost,
    )


def hamming_extend(
    genome: Genome,
    oriented_read: str,
    seed_offset: int,
    text_position: int,
    k: int,
    *,
    read_index: int = 0,
    read_id: str = "",
    strand: Strand = Strand.FORWARD,
) -> Optional[Match]:
    """Ungapped verification: counts mismatches of the whole read at the seed's diagonal."""
    begin = text_position - seed_offset
    end = begin + len(oriented_read)
    if begin < 0 or end > len(genome.text):
        return None
    contig_index = contig_index_of(genome, begin)
    if end > genome.contigs[contig_index].end:
        return None
    mismatches = 0
    for x, y in zip(oriented_read, genome.text[begin:end]):
        if not symbols_match(x, y):
            mismatches += 1
            if mismatches > k:
                return None
    return Match(read_index, read_id, strand, contig_index, begin, end, mismatches, f"{len(oriented_read)}M")


def leftmost_begin(read: str, text_before_end: str, distance: int) -> int:
    """
    How many characters, counted back from the end of `text_before_end`, the
    leftmost alignment of `read` with cost `distance` spans.
    """
    best = None
    for used, cost in enumerate(myers_prefix_scores(read[::-1], text_before_end[::-1])):
        if cost == distance:
            best = used
    if best is None:
        raise ValueError(f"no alignment of cost {distance} ends here")
    return best


def band_placements(
    genome: Genome,
    oriented_read: str,
    contig_index: int,
    first_diagonal: int,
    last_diagonal: int,
    k: int,
    *,
    read_index: int = 0,
    read_id: str = "",
    strand: Strand = Strand.FORWARD,
) -> list[Match]:
    """
    Every placement of `oriented_read` within `k` edits that an anchor on a
    diagonal in [first_diagonal, last_diagonal] can reach, one per end
    position, each with its leftmost begin.

    Ends are scanned over [first_diagonal + |r| - k, last_diagonal + |r| + k]
    and the text starts a further |r| + k before the first end, so every
    reported distance equals the best over the whole contig.
    """
    contig = genome.contigs[contig_index]
    m = len(oriented_read)
    first_end = max(contig.start + 1, first_diagonal + m - k)
    last_end = min(contig.end, last_diagonal + m + k)
    if first_end > last_end:
        return []
    lo = max(contig.start, first_end - m - k)
    text = genome.text
    placements = []
    scores = myers_prefix_scores(oriented_read, text[lo:last_end], free_start=True)
    for end, distance in enumerate(scores, lo):
        if end < first_end or distance > k:
            continue
        start = max(lo, end - m - distance)
        begin = end - leftmost_begin(oriented_read, text[start:end], distance)
        placements.append(Match(read_index, read_id, strand, contig_index, begin, end, distance))
    return placements


def traceback_cigar(read: str, text_window: str, max_err: int) -> tuple[str, int]:
    """
    Banded global alignment with traceback. On equal cost the walk back from
    the end prefers M, then D, then I.
    """
    n, m = len(read), len(text_window)
    band = max(max_err, abs(n - m))
    rows: list[dict[int, int]] = []
    prev = {j: j for j in range(0, min(m, band) + 1)}
    rows.append(prev)
    for i in range(1, n + 1):
        cur: dict[int, int] = {}
        for j in range(max(0, i - band), min(m, i + band) + 1):
            if j == 0:
                cur[j] = i
                continue
            cost = 0 if symbols_match(read[i - 1], text_window[j - 1]) else 1
            cur[j] = min(
                prev.get(j - 1, _INF) + cost,
                prev.get(j, _INF) + 1,
                cur.get(j - 1, _INF) + 1,
            )
        rows.append(cur)
        prev = cur
    distance = int(rows[n][m])

    ops = []
    i, j = n, m
    while i > 0 or j > 0:
        here = rows[i][j]
        if i > 0 and j > 0:
            cost = 0 if symbols_match(read[i - 1], text_window[j - 1]) else 1
            if rows[i - 1].get(j - 1, _INF) + cost == here:
                ops.append("M")
                i, j = i - 1, j - 1
                continue
        if j > 0 and rows[i].get(j - 1, _INF) + 1 == here:
            ops.append("D")
            j -= 1
            continue
        ops.append("I")
        i -= 1
    ops.reverse()
    return compress_cigar(ops), distance


def compress_cigar(ops: list[str]) -> str:
    parts = []
    run_op, run_len = None, 0
    for op in ops:
        if op == run_op:
            run_len += 1
        else:
            if run_op is not None:
                parts.append(f"{run_len}{run_op}")
            run_op, run_len = op, 1
    if run_op is not None:
        parts.append(f"{run_len}{run_op}")
    return "".join(parts)


def cigar_cost(cigar: str, read: str, text_window: str) -> int:
    """Edit cost implied by `cigar`: mismatching M columns plus every I and D."""
    cost = 0
    i = j = 0
    number = ""
    for ch in cigar:
        if ch.isdigit():
            number += ch
            continue
        length = int(number)
        number = ""
        if ch == "M":
            cost += sum(
                not symbols_match(read[i + t], text_window[j + t]) for t in range(length)
            )
            i += length
            j += length
        elif ch == "I":
            cost += length
            i += length
        elif ch == "D":
            cost += length
            j += length
        else:
            raise ValueError(f"unsupported CIGAR operation {ch!r}")
    if i != len(read) or j != len(text_window):
        raise ValueError("CIGAR does not span both sequences")
    return cost
