import logging
import re

import numpy as np
import pytest
from pydantic import ValidationError

from conftest import random_dna, random_genome
from masai_lite.filter import StrategyOverride, choose_strategy, make_scheme
from masai_lite.index import EsaIndex
from masai_lite.mapper import (
    Candidate,
    MapperConfig,
    MappingMode,
    MappingStats,
    dedupe_candidates,
    dedupe_matches,
    map_batch,
    map_reads,
    select_mode,
)
from masai_lite.oracle import DEFAULT_INDEL_FRACTION, evaluate, full_dp_distance, oracle_map, simulate_reads
from masai_lite.seq import Genome, Read, Strand, reverse_complement
from masai_lite.verify import Match


def substitute(seq: str, positions) -> str:
    chars = list(seq)
    for pos in positions:
        chars[pos] = "A" if chars[pos] != "A" else "C"
    return "".join(chars)


def match(begin, end, errors, strand=Strand.FORWARD, contig=0):
    return Match(0, "r", strand, contig, begin, end, errors)


@pytest.fixture(scope="module")
def planted():
    """A 5 kb genome with one read copied verbatim at 1200 and with two substitutions at 3000."""
    rng_genome = random_genome(5000, seed=3)
    read = rng_genome.text[1200:1240]
    text = rng_genome.text
    text = text[:3000] + substitute(read, [10, 30]) + text[3040:]
    genome = Genome.from_records([("chr1", text)])
    return EsaIndex.build(genome), read


class TestMapperConfig:
    """Test suite for mapping options"""

    def test_exactly_one_error_spec(self):
        """Test that k and error rate exclude each other"""
        with pytest.raises(ValidationError):
            MapperConfig()
        with pytest.raises(ValidationError):
            MapperConfig(k=2, error_rate=5)
        with pytest.raises(ValidationError):
            MapperConfig(k=2, batch_size=0)

    def test_error_rate_per_read(self):
        """Test the per-read conversion of an error rate"""
        config = MapperConfig(error_rate=5)
        assert config.errors_for(100) == 5
        assert config.errors_for(59) == 2
        assert MapperConfig(error_rate=29).errors_for(100) == 29
        assert MapperConfig(k=3).errors_for(1000) == 3


class TestMapBatch:
    """Test suite for mapping one batch"""

    def test_unique_exact_read(self):
        """Test a read planted once in a random genome"""
        genome = random_genome(5000, seed=1)
        index = EsaIndex.build(genome)
        read = Read("r1", genome.text[2000:2050])
        [result] = map_batch(index, [read], MapperConfig(k=3))
        assert len(result) == 1
        m = result.matches[0]
        assert (m.strand, m.begin, m.end, m.errors, m.cigar) == (Strand.FORWARD, 2000, 2050, 0, "50M")

    def test_reverse_strand(self):
        """Test a read sampled from the reverse strand"""
        genome = random_genome(5000, seed=1)
        index = EsaIndex.build(genome)
        read = Read("r1", reverse_complement(genome.text[700:760]))
        [result] = map_batch(index, [read], MapperConfig(k=2))
        assert [(m.strand, m.begin, m.errors) for m in result] == [(Strand.REVERSE, 700, 0)]

    def test_modes(self, planted):
        """Test all, all-best and any-best on a read placed twice"""
        index, seq = planted
        read = Read("r1", seq)
        [everything] = map_batch(index, [read], MapperConfig(k=3, mode=MappingMode.ALL))
        [best] = map_batch(index, [read], MapperConfig(k=3, mode=MappingMode.ALL_BEST))
        [one] = map_batch(index, [read], MapperConfig(k=3, mode=MappingMode.ANY_BEST))
        assert [(m.begin, m.errors) for m in everything] == [(1200, 0), (3000, 2)]
        assert [(m.begin, m.errors) for m in best] == [(1200, 0)]
        assert [(m.begin, m.errors) for m in one] == [(1200, 0)]

    def test_all_n_read_unmapped(self, small_index):
        """Test that a read of N only maps nowhere"""
        [result] = map_batch(small_index, [Read("n", "N" * 50)], MapperConfig(k=3))
        assert not result.mapped

    def test_short_read_reported_unmapped(self, small_index):
        """Test a read too short for its seed scheme"""
        stats = MappingStats()
        [result] = map_batch(small_index, [Read("tiny", "ACG")], MapperConfig(k=5), stats)
        assert result.too_short
        assert not result.mapped
        assert stats.too_short == 1

    def test_without_indels(self, planted):
        """Test ungapped mapping"""
        index, seq = planted
        [result] = map_batch(index, [Read("r1", seq)], MapperConfig(k=3, indels=False))
        assert [(m.begin, m.errors, m.cigar) for m in result] == [(1200, 0, "40M"), (3000, 2, "40M")]

    def test_approximate_seeds(self, planted):
        """Test that approximate seeds find the same locations"""
        index, seq = planted
        config = MapperConfig(k=3, strategy=StrategyOverride(seeds=2))
        [result] = map_batch(index, [Read("r1", seq)], config)
        assert [(m.begin, m.errors) for m in result] == [(1200, 0), (3000, 2)]

    def test_reported_errors_are_edit_distances(self, small_index):
        """Test each match's error count against an independent DP"""
        reads, _ = simulate_reads(small_index.genome, 20, 60, 3, rng_seed=4)
        for read, result in zip(reads, map_batch(small_index, reads, MapperConfig(k=3))):
            for m in result:
                window = small_index.text[m.begin:m.end]
                seq = read.seq if m.strand is Strand.FORWARD else reverse_complement(read.seq)
                assert full_dp_distance(seq, window) == m.errors


class TestDedupe:
    """Test suite for candidate and match deduplication"""

    def _candidate(self, read_index=0, diagonal=100, offset=0, errors=0, k=2, strand=Strand.FORWARD):
        return Candidate(read_index, strand, diagonal, diagonal + offset, offset, 10, errors, k)

    def test_same_placement_verified_once(self):
        """Test two seeds of one read anchoring the same placement"""
        kept = dedupe_candidates([self._candidate(offset=0), self._candidate(offset=10)])
        assert len(kept) == 1
        assert kept[0].seed_offset == 0

    def test_one_verification_per_owner(self):
        """Test that two reads sharing a seed are verified separately"""
        kept = dedupe_candidates([self._candidate(read_index=0), self._candidate(read_index=1)])
        assert len(kept) == 2

    def test_distant_diagonals(self):
        """Test anchors further apart than 2k"""
        kept = dedupe_candidates([self._candidate(diagonal=100), self._candidate(diagonal=105)])
        assert len(kept) == 2
        kept = dedupe_candidates([self._candidate(diagonal=100), self._candidate(diagonal=104)])
        assert len(kept) == 1

    def test_strands_kept_apart(self):
        """Test that the same diagonal on two strands is two placements"""
        kept = dedupe_candidates([self._candidate(), self._candidate(strand=Strand.REVERSE)])
        assert len(kept) == 2

    def test_fewest_seed_errors_represents_band(self):
        """Test the representative choice within a band"""
        kept = dedupe_candidates([self._candidate(offset=0, errors=1), self._candidate(offset=20, errors=0)])
        assert kept[0].seed_errors == 0

    def test_band_carries_its_diagonal_range(self):
        """Test that each kept anchor knows the lowest and highest diagonal of its band"""
        diagonals = [104, 100, 110, 102]
        kept = dedupe_candidates([self._candidate(diagonal=d) for d in diagonals])
        assert [(c.first_diagonal, c.last_diagonal) for c in kept] == [(100, 104), (110, 110)]

    def test_contigs_kept_apart(self):
        """Test that neighbouring diagonals on two contigs are two bands"""
        kept = dedupe_candidates([self._candidate(), self._candidate(diagonal=101)._replace(contig=1)])
        assert len(kept) == 2

    def test_overlapping_matches(self):
        """Test that the lower-error match of an overlapping pair is kept"""
        result = dedupe_matches([match(10, 50, 3), match(11, 51, 2)])
        assert [(m.begin, m.errors) for m in result] == [(11, 2)]

    def test_disjoint_and_identical(self):
        """Test disjoint matches both kept, identical ones collapsed"""
        assert len(dedupe_matches([match(0, 40, 1), match(40, 80, 1)])) == 2
        assert len(dedupe_matches([match(0, 40, 1), match(0, 40, 1)])) == 1
        assert len(dedupe_matches([match(0, 40, 1), match(0, 40, 1, Strand.REVERSE)])) == 2

    def test_ties_keep_leftmost(self):
        """Test that equal-error overlaps keep the leftmost begin"""
        result = dedupe_matches([match(12, 52, 1), match(10, 50, 1)])
        assert [m.begin for m in result] == [10]

    def test_any_best_tie_break(self):
        """Test forward strand, then contig, then begin among equal errors"""
        matches = dedupe_matches(
            [match(5, 45, 1, Strand.REVERSE), match(90, 130, 1, contig=1), match(300, 340, 1)]
        )
        [chosen] = select_mode(matches, MappingMode.ANY_BEST)
        assert (chosen.strand, chosen.contig, chosen.begin) == (Strand.FORWARD, 0, 300)


class TestAgainstOracle:
    """Test suite comparing the mapper with the full-scan oracle on simulated reads"""

    @pytest.fixture(scope="class")
    def corpus(self):
        genome = random_genome(12_000, 8_000, seed=21)
        index = EsaIndex.build(genome)
        reads, origins = simulate_reads(genome, 40, 100, 5, indel_fraction=0.3, rng_seed=9)
        hits = [oracle_map(genome, read, 5) for read in reads]
        return index, reads, hits

    def test_all_mode_full_sensitivity(self, corpus):
        """Test that every oracle location is reported with its distance using exact seeds"""
        index, reads, hits = corpus
        results, stats = map_reads(index, reads, MapperConfig(k=5))
        assert stats.reads == len(reads)
        for result, read_hits in zip(results, hits):
            for hit in read_hits:
                assert any(hit.agrees_with(m) for m in result)

    def test_any_best_minimum_distance(self, corpus):
        """Test that any-best reports each read's minimum distance"""
        index, reads, hits = corpus
        results, _ = map_reads(index, reads, MapperConfig(k=5, mode=MappingMode.ANY_BEST))
        for result, read_hits in zip(results, hits):
            assert len(result) == 1
            assert result.best_errors == min(h.distance for h in read_hits)

    def test_mode_monotonicity(self, corpus):
        """Test that all-best is a subset of all at the minimum error"""
        index, reads, _ = corpus
        everything, _ = map_reads(index, reads, MapperConfig(k=5))
        best, _ = map_reads(index, reads, MapperConfig(k=5, mode=MappingMode.ALL_BEST))
        for all_set, best_set in zip(everything, best):
            assert set(best_set.matches) <= set(all_set.matches)
            assert {m.errors for m in best_set} <= {all_set.best_errors}

    def test_batch_size_and_workers_do_not_change_output(self, corpus):
        """Test determinism across batch sizes and worker counts"""
        index, reads, _ = corpus
        reference, _ = map_reads(index, reads, MapperConfig(k=5))
        small_batches, _ = map_reads(index, reads, MapperConfig(k=5, batch_size=7))
        pooled, stats = map_reads(index, reads, MapperConfig(k=5, threads=2))
        assert [r.matches for r in small_batches] == [r.matches for r in reference]
        assert [r.matches for r in pooled] == [r.matches for r in reference]
        assert stats.reads == len(reads)


def tandem_repeat_corpus(seed: int, read_length: int = 80):
    """Random flanks around a lightly mutated tandem repeat, and reads drawn from the repeat."""
    rng = np.random.default_rng(seed)
    unit = random_dna(rng, int(rng.integers(3, 12)))
    repeat = unit * (360 // len(unit))
    repeat = substitute(repeat, rng.choice(len(repeat), size=len(repeat) // 30, replace=False))
    left = random_dna(rng, 300)
    genome = Genome.from_records([("chr1", left + repeat + random_dna(rng, 300))])
    reads = []
    for j in range(5):
        start = len(left) + int(rng.integers(0, len(repeat) - read_length))
        seq = genome.text[start:start + read_length]
        seq = substitute(seq, rng.choice(read_length, size=int(rng.integers(0, 4)), replace=False))
        if rng.random() < 0.5:
            seq = reverse_complement(seq)
        reads.append(Read(f"t{seed}_{j}", seq))
    return genome, reads


class TestTandemRepeats:
    """Test suite for reads drawn from tandem repeats, compared with the full-scan oracle"""

    @pytest.fixture(scope="class")
    def corpora(self):
        out = []
        for seed in range(12):
            genome, reads = tandem_repeat_corpus(seed)
            out.append((EsaIndex.build(genome), reads, [oracle_map(genome, r, 5) for r in reads]))
        return out

    def test_all_mode_matches_oracle(self, corpora):
        """Test that every oracle location is reported, and nothing else"""
        for index, reads, hits in corpora:
            results, _ = map_reads(index, reads, MapperConfig(k=5))
            for result, read_hits in zip(results, hits):
                assert len(result) == len(read_hits)
                for hit in read_hits:
                    assert any(hit.agrees_with(m) for m in result)

    def test_any_best_minimum_distance(self, corpora):
        """Test that the best placement inside the repeat is found"""
        for index, reads, hits in corpora:
            results, _ = map_reads(index, reads, MapperConfig(k=5, mode=MappingMode.ANY_BEST))
            for result, read_hits in zip(results, hits):
                assert result.best_errors == min(h.distance for h in read_hits)

    def test_all_best_matches_oracle_stratum(self, corpora):
        """Test all-best against the oracle's minimum-distance locations"""
        for index, reads, hits in corpora:
            results, _ = map_reads(index, reads, MapperConfig(k=5, mode=MappingMode.ALL_BEST))
            for result, read_hits in zip(results, hits):
                best = min(h.distance for h in read_hits)
                assert len(result) == sum(h.distance == best for h in read_hits)


class TestApproximateSeeds:
    """Test suite for three seeds with one mismatch each on a simulated corpus"""

    @pytest.fixture(scope="class")
    def corpus(self):
        genome = random_genome(20_000, seed=31)
        reads, origins = simulate_reads(genome, 500, 100, 5, indel_fraction=DEFAULT_INDEL_FRACTION, rng_seed=13)
        hits = {read.id: oracle_map(genome, read, 5) for read in reads}
        return EsaIndex.build(genome), reads, origins, hits

    def _report(self, corpus, keep=lambda origin: True):
        index, reads, origins, hits = corpus
        config = MapperConfig(k=5, strategy=StrategyOverride(seeds=3))
        params = choose_strategy(len(index.genome.text), 100, 5, config.strategy)
        assert make_scheme(100, 5, params.s).budgets == (1, 1, 1)
        results, _ = map_reads(index, reads, config)
        kept = {o.read_id for o in origins if keep(o)}
        return evaluate(
            {read.id: result.matches for read, result in zip(reads, results) if read.id in kept},
            {read_id: h for read_id, h in hits.items() if read_id in kept},
            {o.read_id: o for o in origins if o.read_id in kept},
        )

    def test_overall_sensitivity(self, corpus):
        """Test at least 99% of oracle locations found"""
        assert self._report(corpus).overall("all") >= 99.0

    def test_mismatch_only_reads_fully_found(self, corpus):
        """Test that reads without planted indels lose nothing"""
        report = self._report(corpus, keep=lambda origin: origin.plan.indels == 0)
        assert report.overall("all") == 100.0


def test_debug_log_reports_each_batch(small_index, caplog):
    """Test that per-batch log lines carry that batch's own counts"""
    reads, _ = simulate_reads(small_index.genome, 10, 60, 3, rng_seed=6)
    with caplog.at_level(logging.DEBUG, logger="masai_lite.mapper"):
        _, stats = map_reads(small_index, reads, MapperConfig(k=3, batch_size=5))
    pattern = re.compile(r"Batch of (\d+) reads: (\d+) candidates, (\d+) verifications")
    found = (pattern.search(record.getMessage()) for record in caplog.records)
    batches = [tuple(int(x) for x in m.groups()) for m in found if m]
    assert [b[0] for b in batches] == [5, 5]
    assert sum(b[1] for b in batches) == stats.candidates
    assert sum(b[2] for b in batches) == stats.verifications


def test_random_reads_do_not_map(small_index, rng):
    """Test that random reads do not map within a small error budget"""
    reads = [Read(f"x{i}", random_dna(rng, 80)) for i in range(10)]
    results, stats = map_reads(small_index, reads, MapperConfig(k=2))
    assert stats.mapped == sum(r.mapped for r in results) == 0
