"""
Pigeonhole seed partitioning.

A read searched within k edits is cut into s <= k+1 non-overlapping seeds.
The first (k mod s)+1 seeds get a budget of floor(k/s) errors and the rest
floor(k/s)-1, so that missing every seed costs at least k+1 edits. With
s = k+1 every budget is 0 (exact seeds).
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from masai_lite.errors import ParameterError
from masai_lite.seq import Read, Strand, orient
from masai_lite.trie import SeedOwner, SeedString

logger = logging.getLogger(__name__)

# Genomes shorter than this use exact seeds by default.
APPROXIMATE_SEEDS_MIN_GENOME = 2**26
DEFAULT_MAX_SEED_ERRORS = 1


class SeedMode(str, Enum):
    EXACT = "exact-seeds"
    APPROXIMATE = "approximate-seeds"


@dataclass(frozen=True)
class MappingParams:
    k: int
    s: int
    l: int
    mode: SeedMode

    def __post_init__(self):
        if not 1 <= self.s <= self.k + 1:
            raise ParameterError(f"need 1 <= seeds <= k+1, got s={self.s}, k={self.k}")
        if self.l < 1:
            raise ParameterError("seed length must be at least 1")
        if (self.mode is SeedMode.EXACT) != (self.s == self.k + 1):
            raise ParameterError(f"{self.mode.value} inconsistent with s={self.s}, k={self.k}")


@dataclass(frozen=True)
class SeedScheme:
    offsets: tuple[int, ...]
    lengths: tuple[int, ...]
    budgets: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.offsets)


class StrategyOverride(BaseModel):
    """User choices that replace the default filtration heuristic."""

    model_config = ConfigDict(frozen=True)

    seeds: Optional[int] = Field(None, ge=1, description="Number of seeds s.")
    seed_length: Optional[int] = Field(None, ge=1, description="Seed length l; s = |r| // l.")
    seed_errors: Optional[int] = Field(None, ge=0, description="Largest per-seed error budget.")

    @property
    def empty(self) -> bool:
        return self.seeds is None and self.seed_length is None and self.seed_errors is None


def make_scheme(read_len: int, k: int, s: int) -> SeedScheme:
    if k < 0:
        raise ParameterError(f"error count must be non-negative, got {k}")
    if not 1 <= s <= k + 1:
        raise ParameterError(f"need 1 <= seeds <= k+1, got s={s}, k={k}")
    l = read_len // s
    if l < 1:
        raise ParameterError(f"read of length {read_len} is too short for {s} seeds")
    offsets = tuple(i * l for i in range(s))
    # the last seed absorbs the remainder
    lengths = tuple([l] * (s - 1) + [l + read_len % s])
    q, r = divmod(k, s)
    budgets = tuple([q] * (r + 1) + [q - 1] * (s - r - 1))
    return SeedScheme(offsets, lengths, budgets)


def partition(
    read: Read, scheme: SeedScheme, strand: Strand, read_index: int = 0
) -> list[SeedString]:
    oriented = orient(read.seq, strand)
    return [
        SeedString(
            oriented[offset:offset + length],
            budget,
            [SeedOwner(read_index, read.id, strand, offset)],
        )
        for offset, length, budget in zip(scheme.offsets, scheme.lengths, scheme.budgets)
    ]


def _seeds_for_errors(k: int, max_seed_errors: int) -> int:
    """Smallest s whose largest budget floor(k/s) stays within `max_seed_errors`."""
    return k // (max_seed_errors + 1) + 1


def choose_strategy(
    genome_len: int, read_len: int, k: int, override: Optional[StrategyOverride] = None
) -> MappingParams:
    if k < 0:
        raise ParameterError(f"error count must be non-negative, got {k}")
    override = override or StrategyOverride()
    if override.seeds is not None:
        s = override.seeds
    elif override.seed_length is not None:
        s = min(read_len // override.seed_length, k + 1)
    elif override.seed_errors is not None:
        s = _seeds_for_errors(k, override.seed_errors)
    elif genome_len < APPROXIMATE_SEEDS_MIN_GENOME:
        s = k + 1
    else:
        s = _seeds_for_errors(k, DEFAULT_MAX_SEED_ERRORS)

    if not 1 <= s <= k + 1:
        raise ParameterError(f"cannot use {s} seeds with k={k}")
    if read_len // s < 1:
        raise ParameterError(f"read of length {read_len} is too short for {s} seeds")
    mode = SeedMode.EXACT if s == k + 1 else SeedMode.APPROXIMATE
    return MappingParams(k=k, s=s, l=read_len // s, mode=mode)
