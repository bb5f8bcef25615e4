"""
Radix-trie view over the seeds of one read batch.

Seeds are bucket-sorted into one array per budget class; a trie node is an
interval of that array plus a depth, exactly like the suffix-array nodes of
the genome index, so both sides of multiple backtracking expose the same
per-character navigation. Identical seeds are collapsed into one entry
whose owner list records every read, strand and offset that produced it.
"""
import bisect
import logging
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

from masai_lite.errors import ContractError
from masai_lite.seq import ALPHABET, Strand

logger = logging.getLogger(__name__)

_SORT_KEY = str.maketrans(ALPHABET, "01234")


class SeedOwner(NamedTuple):
    read_index: int
    read_id: str
    strand: Strand
    offset: int


@dataclass
class SeedString:
    chars: str
    budget: int
    owners: list[SeedOwner] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.chars)

    def __hash__(self) -> int:
        return hash((self.chars, self.budget))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SeedString):
            return NotImplemented
        return self.chars == other.chars and self.budget == other.budget


class TrieNode(NamedTuple):
    lo: int
    hi: int
    depth: int


@dataclass
class PatternTrie:
    seeds: list[SeedString]
    roots: dict[int, TrieNode]
    seed_lengths: dict[int, int]

    def is_leaf(self, node: TrieNode) -> bool:
        return node.lo < node.hi and node.depth == len(self.seeds[node.lo])

    @property
    def classes(self) -> list[tuple[int, TrieNode]]:
        """(budget, root) pairs in increasing budget order."""
        return sorted(self.roots.items())


def build_pattern_trie(seeds: Iterable[SeedString]) -> PatternTrie:
    merged: dict[tuple[str, int], SeedString] = {}
    lengths: dict[int, int] = {}
    for seed in seeds:
        expected = lengths.setdefault(seed.budget, len(seed))
        if len(seed) != expected:
            raise ContractError(
                f"seed of length {len(seed)} in budget class {seed.budget} of length {expected}"
            )
        key = (seed.chars, seed.budget)
        if key in merged:
            merged[key].owners.extend(seed.owners)
        else:
            merged[key] = SeedString(seed.chars, seed.budget, list(seed.owners))

    ordered = sorted(merged.values(), key=lambda s: (s.budget, s.chars.translate(_SORT_KEY)))
    roots = {}
    lo = 0
    for budget in sorted(lengths):
        hi = lo
        while hi < len(ordered) and ordered[hi].budget == budget:
            hi += 1
        roots[budget] = TrieNode(lo, hi, 0)
        lo = hi
    logger.debug(f"Pattern trie: {len(ordered)} distinct seeds in {len(roots)} budget class(es)")
    return PatternTrie(ordered, roots, lengths)


def _code(seed: SeedString, depth: int) -> int:
    return ALPHABET.index(seed.chars[depth])


def trie_children(trie: PatternTrie, node: TrieNode) -> list[tuple[str, TrieNode]]:
    """Children of `node` grouped by the character at `node.depth`."""
    if trie.is_leaf(node):
        raise ContractError("trie_children called on a leaf")
    children = []
    lo = node.lo
    while lo < node.hi:
        code = _code(trie.seeds[lo], node.depth)
        hi = bisect.bisect_left(
            trie.seeds, code + 1, lo, node.hi, key=lambda s: _code(s, node.depth)
        )
        children.append((ALPHABET[code], TrieNode(lo, hi, node.depth + 1)))
        lo = hi
    return children


def leaf_seeds(trie: PatternTrie, node: TrieNode) -> list[SeedString]:
    if node.lo == node.hi:
        return []
    if not trie.is_leaf(node):
        raise ContractError(f"node at depth {node.depth} is not a leaf")
    return trie.seeds[node.lo:node.hi]
