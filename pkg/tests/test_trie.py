import pytest

from masai_lite.errors import ContractError
from masai_lite.seq import Strand
from masai_lite.trie import (
    SeedOwner,
    SeedString,
    TrieNode,
    build_pattern_trie,
    leaf_seeds,
    trie_children,
)


def seed(chars, budget=0, read_index=0, offset=0):
    return SeedString(chars, budget, [SeedOwner(read_index, f"r{read_index}", Strand.FORWARD, offset)])


class TestPatternTrie:
    """Test suite for the seed trie"""

    def test_duplicates_merge_owners(self):
        """Test that identical seeds collapse into one with both owners"""
        trie = build_pattern_trie([seed("ACGT", read_index=0), seed("ACGT", read_index=1)])
        assert len(trie.seeds) == 1
        assert [o.read_index for o in trie.seeds[0].owners] == [0, 1]

    def test_budget_classes(self):
        """Test that seeds are grouped by budget, classes in increasing order"""
        trie = build_pattern_trie([seed("AC", 1), seed("GT", 0), seed("CCC", 2)])
        assert [budget for budget, _ in trie.classes] == [0, 1, 2]
        assert trie.roots[0] == TrieNode(0, 1, 0)
        assert trie.seed_lengths == {0: 2, 1: 2, 2: 3}

    def test_mixed_lengths_rejected(self):
        """Test that one budget class must have a single seed length"""
        with pytest.raises(ContractError):
            build_pattern_trie([seed("ACG"), seed("ACGT")])

    def test_children(self):
        """Test per-character children in ACGTN order"""
        trie = build_pattern_trie([seed("AGG"), seed("ACT"), seed("ACG"), seed("NAA")])
        root = trie.roots[0]
        top = trie_children(trie, root)
        assert [label for label, _ in top] == ["A", "N"]
        below_a = trie_children(trie, top[0][1])
        assert [label for label, _ in below_a] == ["C", "G"]
        assert below_a[0][1] == TrieNode(0, 2, 2)

    def test_leaves(self):
        """Test leaf detection and the seeds a leaf carries"""
        trie = build_pattern_trie([seed("ACG"), seed("ACT")])
        node = trie.roots[0]
        while not trie.is_leaf(node):
            node = trie_children(trie, node)[0][1]
        assert [s.chars for s in leaf_seeds(trie, node)] == ["ACG"]
        assert leaf_seeds(trie, TrieNode(1, 1, 3)) == []

    def test_contract_violations(self):
        """Test misuse of leaf and inner nodes"""
        trie = build_pattern_trie([seed("ACG"), seed("ACT")])
        with pytest.raises(ContractError):
            leaf_seeds(trie, trie.roots[0])
        with pytest.raises(ContractError):
            trie_children(trie, TrieNode(0, 1, 3))
