from collections import Counter

import pytest
from pydantic import ValidationError

from masai_lite.errors import ParameterError
from masai_lite.filter import (
    APPROXIMATE_SEEDS_MIN_GENOME,
    MappingParams,
    SeedMode,
    StrategyOverride,
    choose_strategy,
    make_scheme,
    partition,
)
from masai_lite.seq import Read, Strand


class TestSeedScheme:
    """Test suite for pigeonhole seed schemes"""

    def test_budget_identities(self):
        """Test budget multiset and sum(budget + 1) == k + 1 for every k <= 15"""
        for k in range(16):
            for s in range(1, k + 2):
                scheme = make_scheme(200, k, s)
                q, r = divmod(k, s)
                assert sum(b + 1 for b in scheme.budgets) == k + 1
                assert Counter(scheme.budgets) == Counter([q] * (r + 1) + [q - 1] * (s - r - 1))
                assert min(scheme.budgets) >= 0

    def test_exact_seeds(self):
        """Test that s = k + 1 gives zero budgets"""
        assert make_scheme(100, 5, 6).budgets == (0,) * 6

    def test_approximate_seeds(self):
        """Test three seeds for five errors"""
        assert make_scheme(100, 5, 3).budgets == (1, 1, 1)

    def test_seeds_tile_the_read(self):
        """Test that the last seed absorbs the remainder"""
        scheme = make_scheme(11, 1, 2)
        assert scheme.offsets == (0, 5)
        assert scheme.lengths == (5, 6)
        assert sum(scheme.lengths) == 11

    def test_invalid_parameters(self):
        """Test rejection of too many seeds, negative k and too-short reads"""
        with pytest.raises(ParameterError):
            make_scheme(100, 2, 4)
        with pytest.raises(ParameterError):
            make_scheme(100, -1, 1)
        with pytest.raises(ParameterError):
            make_scheme(3, 5, 6)


class TestPartition:
    """Test suite for cutting reads into seeds"""

    def test_forward_and_reverse(self):
        """Test seeds of both strands with owners"""
        read = Read("r", "ACGTACGTAC")
        scheme = make_scheme(10, 1, 2)
        forward = partition(read, scheme, Strand.FORWARD, read_index=3)
        reverse = partition(read, scheme, Strand.REVERSE, read_index=3)
        assert [s.chars for s in forward] == ["ACGTA", "CGTAC"]
        assert [s.chars for s in reverse] == ["GTACG", "TACGT"]
        assert forward[1].owners[0].offset == 5
        assert forward[1].owners[0].read_index == 3
        assert reverse[0].owners[0].strand is Strand.REVERSE


class TestStrategy:
    """Test suite for the filtration heuristic and its overrides"""

    def test_small_genome_uses_exact_seeds(self):
        """Test the default on desk-scale genomes"""
        params = choose_strategy(50_000, 100, 5)
        assert params == MappingParams(k=5, s=6, l=16, mode=SeedMode.EXACT)

    def test_large_genome_uses_approximate_seeds(self):
        """Test the default on large genomes"""
        params = choose_strategy(APPROXIMATE_SEEDS_MIN_GENOME, 100, 5)
        assert params.s == 3
        assert params.mode is SeedMode.APPROXIMATE

    def test_seed_length_override(self):
        """Test that a fixed seed length determines the seed count"""
        assert choose_strategy(1000, 100, 5, StrategyOverride(seed_length=30)).s == 3
        assert choose_strategy(1000, 100, 2, StrategyOverride(seed_length=10)).s == 3

    def test_seed_errors_override(self):
        """Test seed counts derived from the per-seed budget"""
        assert choose_strategy(1000, 100, 5, StrategyOverride(seed_errors=0)).s == 6
        assert choose_strategy(1000, 100, 5, StrategyOverride(seed_errors=1)).s == 3
        assert choose_strategy(1000, 100, 5, StrategyOverride(seed_errors=2)).s == 2

    def test_override_precedence(self):
        """Test that an explicit seed count wins over the other overrides"""
        override = StrategyOverride(seeds=2, seed_length=10, seed_errors=0)
        assert choose_strategy(1000, 100, 5, override).s == 2
        override = StrategyOverride(seed_length=50, seed_errors=0)
        assert choose_strategy(1000, 100, 5, override).s == 2

    def test_invalid_overrides(self):
        """Test rejection of impossible seed counts"""
        with pytest.raises(ParameterError):
            choose_strategy(1000, 100, 2, StrategyOverride(seeds=4))
        with pytest.raises(ParameterError):
            choose_strategy(1000, 3, 5)
        with pytest.raises(ValidationError):
            StrategyOverride(seeds=0)

    def test_params_validation(self):
        """Test that mode and seed count must agree"""
        with pytest.raises(ParameterError):
            MappingParams(k=5, s=6, l=16, mode=SeedMode.APPROXIMATE)
        with pytest.raises(ParameterError):
            MappingParams(k=1, s=3, l=10, mode=SeedMode.EXACT)
        assert StrategyOverride().empty
