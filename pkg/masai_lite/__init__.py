"""masai-lite: approximate read mapping by multiple backtracking over a pattern trie."""

__version__ = "0.1.0"
