"""
Nucleotide alphabet, genome and read containers, strand arithmetic.

Sequences are plain upper-case `str` over A, C, G, T and N. N is a wildcard
that never matches anything, itself included: searchers treat it as a
mismatch and verification charges it one edit.
"""
import bisect
import logging
import re
from dataclasses import dataclass
from functools import cached_property
from enum import Enum
from typing import Iterable, NamedTuple, Optional, Union

from masai_lite.errors import GenomeRangeError, InputError

logger = logging.getLogger(__name__)

# Symbol order of the index; N sorts last.
ALPHABET = "ACGTN"

_COMPLEMENT = str.maketrans("ACGTN", "TGCAN")
_NON_ACGTN = re.compile(r"[^ACGTN]")


class Nucleotide(str, Enum):
    A = "A"
    C = "C"
    G = "G"
    T = "T"
    N = "N"

    @property
    def code(self) -> int:
        """2-bit code (A=0 .. T=3), N = 4."""
        return ALPHABET.index(self.value)

    def complement(self) -> "Nucleotide":
        return Nucleotide(self.value.translate(_COMPLEMENT))

    def matches(self, other: Union["Nucleotide", str]) -> bool:
        return symbols_match(self.value, str(getattr(other, "value", other)))


def symbols_match(a: str, b: str) -> bool:
    """Equality with N as a never-matching symbol."""
    return a == b and a != "N"


class Strand(str, Enum):
    FORWARD = "+"
    REVERSE = "-"

    def reverse(self) -> "Strand":
        return Strand.REVERSE if self is Strand.FORWARD else Strand.FORWARD

    @property
    def sam_flag(self) -> int:
        return 16 if self is Strand.REVERSE else 0


def reverse_complement(seq: str) -> str:
    return seq.translate(_COMPLEMENT)[::-1]


def orient(seq: str, strand: Strand) -> str:
    """The read as seen on the given strand."""
    return seq if strand is Strand.FORWARD else reverse_complement(seq)


def normalize_sequence(raw: str, source: str = "sequence") -> tuple[str, int]:
    """
    Uppercases `raw` and turns every byte outside ACGTN into N.

    Returns the cleaned sequence and how many bytes were converted; a single
    warning is logged when that count is non-zero.
    """
    upper = raw.upper()
    cleaned, converted = _NON_ACGTN.subn("N", upper)
    if converted:
        logger.warning(f"{source}: converted {converted} non-ACGTN symbol(s) to N")
    return cleaned, converted


class Contig(NamedTuple):
    name: str
    start: int
    length: int

    @property
    def end(self) -> int:
        return self.start + self.length


@dataclass(frozen=True)
class Genome:
    """All contigs concatenated into one text plus the contig boundary table."""

    text: str
    contigs: tuple[Contig, ...]

    def __post_init__(self):
        expected = 0
        for contig in self.contigs:
            if contig.start != expected or contig.length < 1:
                raise InputError(f"contig table does not tile the text at {contig.name!r}")
            expected = contig.end
        if expected != len(self.text):
            raise InputError("contig table does not cover the whole text")

    @classmethod
    def from_records(cls, records: Iterable[tuple[str, str]]) -> "Genome":
        parts = []
        contigs = []
        start = 0
        for name, seq in records:
            parts.append(seq)
            contigs.append(Contig(name, start, len(seq)))
            start += len(seq)
        return cls("".join(parts), tuple(contigs))

    def __len__(self) -> int:
        return len(self.text)

    @cached_property
    def starts(self) -> list[int]:
        return [c.start for c in self.contigs]

    def contig_sequence(self, index: int) -> str:
        contig = self.contigs[index]
        return self.text[contig.start:contig.end]


def contig_index_of(genome: Genome, pos: int) -> int:
    if not 0 <= pos < len(genome.text):
        raise GenomeRangeError(f"position {pos} outside genome of length {len(genome.text)}")
    return bisect.bisect_right(genome.starts, pos) - 1


def locate(genome: Genome, pos: int) -> tuple[str, int]:
    """Maps a global text position to (contig name, 0-based offset)."""
    contig = genome.contigs[contig_index_of(genome, pos)]
    return contig.name, pos - contig.start


def to_global(genome: Genome, contig: Union[str, int], offset: int) -> int:
    """Inverse of `locate`."""
    if isinstance(contig, str):
        names = [c.name for c in genome.contigs]
        if contig not in names:
            raise GenomeRangeError(f"unknown contig {contig!r}")
        contig = names.index(contig)
    if not 0 <= contig < len(genome.contigs):
        raise GenomeRangeError(f"contig index {contig} out of range")
    entry = genome.contigs[contig]
    if not 0 <= offset < entry.length:
        raise GenomeRangeError(f"offset {offset} outside contig {entry.name!r} of length {entry.length}")
    return entry.start + offset


@dataclass(frozen=True)
class Read:
    id: str
    seq: str
    qual: Optional[str] = None

    def __post_init__(self):
        if len(self.seq) < 1:
            raise InputError(f"read {self.id!r} has an empty sequence")
        if self.qual is not None and len(self.qual) != len(self.seq):
            raise InputError(f"read {self.id!r}: quality length differs from sequence length")

    def __len__(self) -> int:
        return len(self.seq)
