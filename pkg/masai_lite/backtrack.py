"""
Multiple backtracking of a pattern trie against the genome index.

Both structures are walked one character at a time. The exact search only
follows index children whose label equals the pattern child's label; the
approximate search (mismatches only) pairs every index child with every
pattern child, spending one unit of budget on each disagreeing pair, and
falls back to the exact search as soon as the budget is spent.

N never agrees with anything, N included.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Iterator, NamedTuple, Optional

from masai_lite.index import EsaIndex, EsaNode, go_down, node_children, occurrences, root
from masai_lite.seq import symbols_match
from masai_lite.trie import PatternTrie, SeedString, TrieNode, leaf_seeds, trie_children

logger = logging.getLogger(__name__)

Sink = Callable[[SeedString, list[int], int], None]


class SeedHit(NamedTuple):
    seed: SeedString
    text_positions: list[int]
    errors_used: int


@dataclass
class SearchStats:
    calls: int = 0
    matched_pairs: int = 0
    mismatched_pairs: int = 0
    reports: int = 0


class HitCollector:
    """
    Sink that keeps one mismatch count per (seed, position): the smallest.

    Hits are regrouped per seed and per mismatch count when iterated, seeds
    in first-report order.
    """

    def __init__(self):
        self._best: dict[SeedString, dict[int, int]] = {}

    def __call__(self, seed: SeedString, positions: list[int], errors: int) -> None:
        best = self._best.setdefault(seed, {})
        for pos in positions:
            if errors < best.get(pos, errors + 1):
                best[pos] = errors

    def __len__(self) -> int:
        return sum(len(v) for v in self._best.values())

    def __iter__(self) -> Iterator[SeedHit]:
        for seed, best in self._best.items():
            by_errors: dict[int, list[int]] = {}
            for pos in sorted(best):
                by_errors.setdefault(best[pos], []).append(pos)
            for errors in sorted(by_errors):
                yield SeedHit(seed, by_errors[errors], errors)

    def pairs(self) -> set[tuple[str, int, int]]:
        """(seed chars, position, mismatches) triples, for comparisons."""
        return {
            (seed.chars, pos, errors)
            for seed, best in self._best.items()
            for pos, errors in best.items()
        }


def _report(index, trie, g: EsaNode, s: TrieNode, sink: Sink, errors: int, stats) -> None:
    positions = occurrences(index, g)
    for seed in leaf_seeds(trie, s):
        sink(seed, positions, errors)
        if stats is not None:
            stats.reports += 1


def multi_exact_search(
    index: EsaIndex,
    trie: PatternTrie,
    g: EsaNode,
    s: TrieNode,
    sink: Sink,
    errors: int = 0,
    stats: Optional[SearchStats] = None,
) -> None:
    """Reports every seed below `s` together with its exact occurrences below `g`."""
    if stats is not None:
        stats.calls += 1
    if trie.is_leaf(s):
        _report(index, trie, g, s, sink, errors, stats)
        return
    for label, cs in trie_children(trie, s):
        if label == "N":
            continue
        cg = go_down(index, g, label)
        if cg is not None:
            if stats is not None:
                stats.matched_pairs += 1
            multi_exact_search(index, trie, cg, cs, sink, errors, stats)


def multi_approx_search(
    index: EsaIndex,
    trie: PatternTrie,
    g: EsaNode,
    s: TrieNode,
    k: int,
    sink: Sink,
    errors: int = 0,
    stats: Optional[SearchStats] = None,
) -> None:
    """
    Reports every seed below `s` with its occurrences below `g` within `k`
    further mismatches; `errors` is what the path down to here already spent.
    """
    if k == 0:
        multi_exact_search(index, trie, g, s, sink, errors, stats)
        return
    if stats is not None:
        stats.calls += 1
    if trie.is_leaf(s):
        _report(index, trie, g, s, sink, errors, stats)
        return
    pattern_children = trie_children(trie, s)
    for label_g, cg in node_children(index, g):
        for label_s, cs in pattern_children:
            if symbols_match(label_g, label_s):
                if stats is not None:
                    stats.matched_pairs += 1
                multi_approx_search(index, trie, cg, cs, k, sink, errors, stats)
            else:
                if stats is not None:
                    stats.mismatched_pairs += 1
                multi_approx_search(index, trie, cg, cs, k - 1, sink, errors + 1, stats)


def search_trie(
    index: EsaIndex, trie: PatternTrie, sink: Sink, stats: Optional[SearchStats] = None
) -> None:
    """Runs the search once per budget class of `trie`, from the index root."""
    if len(index) == 0:
        return
    for budget, class_root in trie.classes:
        multi_approx_search(index, trie, root(index), class_root, budget, sink, 0, stats)


def single_backtrack(index: EsaIndex, pattern: str, k: int) -> list[tuple[int, int]]:
    """Depth-first backtracking of one pattern; (position, mismatches) sorted by position."""
    found: list[tuple[int, int]] = []

    def walk(node: EsaNode, mismatches: int) -> None:
        if node.depth == len(pattern):
            found.extend((pos, mismatches) for pos in occurrences(index, node))
            return
        for label, child in node_children(index, node):
            cost = mismatches + (0 if symbols_match(label, pattern[node.depth]) else 1)
            if cost <= k:
                walk(child, cost)

    if len(index):
        walk(root(index), 0)
    return sorted(found)
