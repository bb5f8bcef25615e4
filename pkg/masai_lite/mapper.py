"""
End-to-end mapping pipeline.

For a batch of reads: cut both strands of every read into seeds, arrange
the seeds in pattern tries, search them all at once against the genome
index, collapse candidate anchors into diagonal bands, align the read
across each band and keep, per read, the locations the reporting mode
asks for.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from functools import lru_cache
from typing import Any, Iterator, NamedTuple, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field, model_validator

from masai_lite.backtrack import HitCollector, SearchStats, search_trie
from masai_lite.errors import ParameterError
from masai_lite.filter import (
    MappingParams,
    StrategyOverride,
    choose_strategy,
    make_scheme,
    partition,
)
from masai_lite.index import EsaIndex
from masai_lite.seq import Read, Strand, contig_index_of, orient
from masai_lite.trie import SeedString, build_pattern_trie
from masai_lite.verify import (
    Match,
    band_placements,
    extend_match,
    hamming_extend,
    traceback_cigar,
)

logger = logging.getLogger(__name__)


class MappingMode(str, Enum):
    ALL = "all"
    ALL_BEST = "all-best"
    ANY_BEST = "any-best"


class MapperConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: Optional[int] = Field(None, ge=0, description="Absolute number of edits per read.")
    error_rate: Optional[float] = Field(None, ge=0, le=100, description="Edits as a percentage of read length.")
    strategy: StrategyOverride = Field(default_factory=StrategyOverride)
    mode: MappingMode = MappingMode.ALL
    indels: bool = True
    batch_size: int = Field(100_000, ge=1)
    report_unmapped: bool = False
    threads: int = Field(1, ge=1)

    @model_validator(mode="after")
    def _one_error_spec(self) -> "MapperConfig":
        if (self.k is None) == (self.error_rate is None):
            raise ValueError("give exactly one of an absolute error count or an error rate")
        return self

    def errors_for(self, read_len: int) -> int:
        if self.k is not None:
            return self.k
        return math.floor(self.error_rate * read_len / 100 + 1e-9)


@dataclass
class MatchSet:
    """The retained locations of one read, sorted by (contig, begin, strand)."""

    matches: list[Match] = field(default_factory=list)
    too_short: bool = False

    def __iter__(self) -> Iterator[Match]:
        return iter(self.matches)

    def __len__(self) -> int:
        return len(self.matches)

    @property
    def mapped(self) -> bool:
        return bool(self.matches)

    @property
    def best_errors(self) -> Optional[int]:
        return min((m.errors for m in self.matches), default=None)


@dataclass
class MappingStats:
    reads: int = 0
    mapped: int = 0
    too_short: int = 0
    seeds: int = 0
    distinct_seeds: int = 0
    seed_hits: int = 0
    candidates: int = 0
    verifications: int = 0
    locations: int = 0

    @property
    def unmapped(self) -> int:
        return self.reads - self.mapped

    def merge(self, other: "MappingStats") -> None:
        for f in fields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))


class Candidate(NamedTuple):
    read_index: int
    strand: Strand
    diagonal: int
    text_position: int
    seed_offset: int
    seed_length: int
    seed_errors: int
    k: int
    contig: int = 0
    first_diagonal: Optional[int] = None
    last_diagonal: Optional[int] = None


def _sort_key(match: Match) -> tuple:
    return (match.contig, match.begin, match.strand.value)


def dedupe_candidates(candidates: Sequence[Candidate]) -> list[Candidate]:
    """
    Keeps one anchor per (read, strand, contig, diagonal band). A band starts
    at the lowest remaining diagonal and spans 2k further diagonals; its
    representative has the fewest seed errors, then the lowest seed offset,
    and carries the lowest and highest diagonal seen in the band.
    """
    groups: dict[tuple[int, Strand, int], list[Candidate]] = {}
    for c in candidates:
        groups.setdefault((c.read_index, c.strand, c.contig), []).append(c)
    kept = []
    for key in sorted(groups, key=lambda g: (g[0], g[1].value, g[2])):
        group = sorted(set(groups[key]), key=lambda c: (c.diagonal, c.seed_errors, c.seed_offset))
        i = 0
        while i < len(group):
            band_end = group[i].diagonal + 2 * group[i].k
            j = i
            while j < len(group) and group[j].diagonal <= band_end:
                j += 1
            representative = min(group[i:j], key=lambda c: (c.seed_errors, c.seed_offset, c.diagonal))
            kept.append(
                representative._replace(first_diagonal=group[i].diagonal, last_diagonal=group[j - 1].diagonal)
            )
            i = j
    return kept


def dedupe_matches(matches: Sequence[Match]) -> MatchSet:
    """
    Collapses overlapping same-strand matches to their minimum-error
    representative (ties: leftmost begin).
    """
    kept: list[Match] = []
    for match in sorted(set(matches), key=lambda m: (m.errors, m.begin, m.end, m.strand.value, m.contig)):
        if not any(match.overlaps(other) for other in kept):
            kept.append(match)
    return MatchSet(sorted(kept, key=_sort_key))


def select_mode(match_set: MatchSet, mode: MappingMode) -> MatchSet:
    if mode is MappingMode.ALL or not match_set.matches:
        return match_set
    best = match_set.best_errors
    if mode is MappingMode.ALL_BEST:
        return MatchSet([m for m in match_set.matches if m.errors == best])
    choice = min(
        match_set.matches,
        key=lambda m: (m.errors, m.strand is not Strand.FORWARD, m.contig, m.begin),
    )
    return MatchSet([choice])


@lru_cache(maxsize=1024)
def _strategy(genome_len: int, read_len: int, k: int, override: StrategyOverride) -> MappingParams:
    return choose_strategy(genome_len, read_len, k, override)


def _verify(index: EsaIndex, read: Read, candidate: Candidate, indels: bool, exact_is_final: bool) -> list[Match]:
    """All placements reachable from one candidate's diagonal band."""
    genome = index.genome
    oriented = orient(read.seq, candidate.strand)
    owner: dict[str, Any] = {"read_index": candidate.read_index, "read_id": read.id, "strand": candidate.strand}
    first = candidate.diagonal if candidate.first_diagonal is None else candidate.first_diagonal
    last = candidate.diagonal if candidate.last_diagonal is None else candidate.last_diagonal
    if not indels:
        found = (hamming_extend(genome, oriented, 0, d, candidate.k, **owner) for d in range(first, last + 1))
        return [m for m in found if m is not None]
    if exact_is_final:
        # any exact alignment is a minimum-error location
        match = extend_match(
            genome,
            oriented,
            candidate.seed_offset,
            candidate.seed_length,
            candidate.text_position,
            candidate.seed_errors,
            candidate.k,
            **owner,
        )
        if match is not None and match.errors == 0:
            return [match]
    return band_placements(genome, oriented, candidate.contig, first, last, candidate.k, **owner)


def _with_cigar(index: EsaIndex, read: Read, match: Match) -> Match:
    if match.cigar is not None:
        return match
    window = index.genome.text[match.begin:match.end]
    cigar, distance = traceback_cigar(orient(read.seq, match.strand), window, match.errors)
    return replace(match, cigar=cigar, errors=distance)


def map_batch(
    index: EsaIndex,
    reads: Sequence[Read],
    config: MapperConfig,
    stats: Optional[MappingStats] = None,
) -> list[MatchSet]:
    """Maps one batch of reads with a single pattern trie per seed length."""
    stats = stats if stats is not None else MappingStats()
    genome_len = len(index.genome.text)
    results = [MatchSet() for _ in reads]
    seeds_by_length: dict[int, list[SeedString]] = {}

    # --- Seeding ---
    for i, read in enumerate(reads):
        k = config.errors_for(len(read))
        try:
            params = _strategy(genome_len, len(read), k, config.strategy)
            scheme = make_scheme(len(read), k, params.s)
        except ParameterError as e:
            logger.warning(f"read {read.id!r} reported unmapped: {e}")
            results[i].too_short = True
            stats.too_short += 1
            continue
        for strand in Strand:
            for seed in partition(read, scheme, strand, read_index=i):
                seeds_by_length.setdefault(len(seed), []).append(seed)
                stats.seeds += 1

    # --- Multiple backtracking ---
    collector = HitCollector()
    search_stats = SearchStats()
    for length in sorted(seeds_by_length):
        trie = build_pattern_trie(seeds_by_length[length])
        stats.distinct_seeds += len(trie.seeds)
        search_trie(index, trie, collector, search_stats)
    stats.seed_hits += len(collector)

    candidates = []
    for hit in collector:
        for owner in hit.seed.owners:
            k = config.errors_for(len(reads[owner.read_index]))
            for pos in hit.text_positions:
                candidates.append(
                    Candidate(
                        owner.read_index,
                        owner.strand,
                        pos - owner.offset,
                        pos,
                        owner.offset,
                        len(hit.seed),
                        hit.errors_used,
                        k,
                        contig_index_of(index.genome, pos),
                    )
                )
    stats.candidates += len(candidates)
    verifications = 0
    per_read: dict[int, list[Candidate]] = {}
    for c in dedupe_candidates(candidates):
        per_read.setdefault(c.read_index, []).append(c)

    # --- Verification ---
    for i, read_candidates in per_read.items():
        read = reads[i]
        found: list[Match] = []
        exact_found = False
        for c in sorted(read_candidates, key=lambda c: (c.seed_errors, c.strand.value, c.diagonal)):
            if exact_found and c.seed_errors > 0 and config.mode is not MappingMode.ALL:
                break
            verifications += 1
            placements = _verify(index, read, c, config.indels, config.mode is MappingMode.ANY_BEST)
            found.extend(placements)
            if any(m.errors == 0 for m in placements) and config.mode is not MappingMode.ALL:
                exact_found = True
                if config.mode is MappingMode.ANY_BEST:
                    break
        selected = select_mode(dedupe_matches(found), config.mode)
        results[i] = MatchSet([_with_cigar(index, read, m) for m in selected.matches])

    stats.verifications += verifications
    stats.reads += len(reads)
    for result in results:
        if result.mapped:
            stats.mapped += 1
            stats.locations += len(result)
    logger.debug(
        f"Batch of {len(reads)} reads: {len(candidates)} candidates, "
        f"{verifications} verifications, {search_stats.calls} search calls"
    )
    return results


# --- Worker pool ---

_WORKER_INDEX: Optional[EsaIndex] = None


def _init_worker(index: EsaIndex) -> None:
    global _WORKER_INDEX
    _WORKER_INDEX = index


def _map_in_worker(job: tuple[list[Read], MapperConfig]) -> tuple[list[MatchSet], MappingStats]:
    reads, config = job
    stats = MappingStats()
    return map_batch(_WORKER_INDEX, reads, config, stats), stats


def _batches(reads: Sequence[Read], size: int) -> Iterator[list[Read]]:
    for start in range(0, len(reads), size):
        yield list(reads[start:start + size])


def map_reads(
    index: EsaIndex, reads: Sequence[Read], config: MapperConfig
) -> tuple[list[MatchSet], MappingStats]:
    """
    Maps all reads in batches, in a process pool when `config.threads` > 1.
    Results come back in input order whatever the thread count.
    """
    reads = list(reads)
    size = config.batch_size
    if config.threads > 1 and reads:
        size = min(size, math.ceil(len(reads) / config.threads))
    jobs = [(batch, config) for batch in _batches(reads, size)]

    results: list[MatchSet] = []
    total = MappingStats()
    if config.threads == 1 or len(jobs) <= 1:
        for batch, _ in jobs:
            results.extend(map_batch(index, batch, config, total))
    else:
        with ProcessPoolExecutor(
            max_workers=config.threads, initializer=_init_worker, initargs=(index,)
        ) as pool:
            for batch_results, batch_stats in pool.map(_map_in_worker, jobs):
                results.extend(batch_results)
                total.merge(batch_stats)
    logger.info(f"Mapped {total.mapped}/{total.reads} reads to {total.locations} locations")
    return results, total
