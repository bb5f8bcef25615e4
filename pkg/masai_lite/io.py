"""
FASTA/FASTQ ingestion and SAM output.

Record tokenising is delegated to Biopython's low-level parsers; this module
adds the checks a mapper needs (sequence normalisation, record-indexed
format errors) and writes plain SAM text.
"""
import io
import logging
import sys
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence, TextIO, Union

from Bio.SeqIO.FastaIO import SimpleFastaParser
from Bio.SeqIO.QualityIO import FastqGeneralIterator

from masai_lite import __version__
from masai_lite.errors import FormatError, InputError
from masai_lite.seq import Genome, Read, Strand, normalize_sequence, reverse_complement
from masai_lite.verify import Match

logger = logging.getLogger(__name__)

Source = Union[str, Path, TextIO]

FASTA_WIDTH = 60
UNMAPPED_FLAG = 4
MAPQ_UNAVAILABLE = 255


@contextmanager
def _open_text(source: Source, mode: str = "r") -> Iterator[TextIO]:
    if not isinstance(source, (str, Path)):
        yield source
        return
    if str(source) == "-":
        yield sys.stdin if "r" in mode else sys.stdout
        return
    try:
        handle = open(source, mode)
    except OSError as e:
        raise InputError(f"cannot open {source}: {e.strerror}") from e
    with handle:
        yield handle


def _name(source: Source) -> str:
    return str(source) if isinstance(source, (str, Path)) else getattr(source, "name", "<stream>")


def _record_id(title: str) -> str:
    return title.split(None, 1)[0] if title.strip() else ""


def _first_content_line(text: str) -> Optional[str]:
    return next((line for line in text.splitlines() if line.strip()), None)


def read_fasta(source: Source) -> Genome:
    """Reads every contig of a FASTA file into one concatenated genome."""
    name = _name(source)
    with _open_text(source) as handle:
        text = handle.read()
    first = _first_content_line(text)
    if first is None:
        raise FormatError(f"{name}: empty FASTA file")
    if not first.startswith(">"):
        raise FormatError(f"{name}: sequence data before the first '>' header")

    records = []
    for i, (title, raw) in enumerate(SimpleFastaParser(io.StringIO(text)), 1):
        contig_id = _record_id(title)
        if not contig_id:
            raise FormatError(f"{name}: FASTA record {i} has an empty header")
        seq, _ = normalize_sequence(raw, f"{name}:{contig_id}")
        if not seq:
            logger.warning(f"{name}: skipping empty contig {contig_id!r}")
            continue
        records.append((contig_id, seq))
    if not records:
        raise FormatError(f"{name}: no sequence in FASTA file")
    genome = Genome.from_records(records)
    logger.info(f"Read {len(genome.contigs)} contig(s), {len(genome)} bp from {name}")
    return genome


def read_fastq(source: Source) -> Iterator[Read]:
    """Streams reads from a FASTQ file; qualities are kept verbatim."""
    name = _name(source)
    with _open_text(source) as handle:
        records = FastqGeneralIterator(handle)
        index = 0
        while True:
            index += 1
            try:
                title, raw, qual = next(records)
            except StopIteration:
                return
            except ValueError as e:
                raise FormatError(f"{name}: FASTQ record {index}: {e}") from e
            seq, _ = normalize_sequence(raw, f"{name}:{_record_id(title)}")
            if len(seq) != len(qual):
                raise FormatError(f"{name}: FASTQ record {index}: sequence and quality lengths differ")
            if not seq:
                raise FormatError(f"{name}: FASTQ record {index}: empty sequence")
            yield Read(_record_id(title), seq, qual)


def _read_fasta_reads(text: str, name: str) -> Iterator[Read]:
    for i, (title, raw) in enumerate(SimpleFastaParser(io.StringIO(text)), 1):
        seq, _ = normalize_sequence(raw, f"{name}:{_record_id(title)}")
        if not seq:
            raise FormatError(f"{name}: FASTA record {i}: empty sequence")
        yield Read(_record_id(title), seq)


def read_reads(source: Source) -> list[Read]:
    """Reads FASTQ or FASTA reads, telling the two apart by the first record marker."""
    name = _name(source)
    with _open_text(source) as handle:
        text = handle.read()
    first = _first_content_line(text)
    if first is None:
        return []
    if first.startswith("@"):
        return list(read_fastq(io.StringIO(text)))
    if first.startswith(">"):
        return list(_read_fasta_reads(text, name))
    raise FormatError(f"{name}: neither FASTA nor FASTQ (first line starts with {first[:1]!r})")


def write_fasta(records: Union[Genome, Iterable[tuple[str, str]]], sink: Source, width: int = FASTA_WIDTH) -> None:
    if isinstance(records, Genome):
        records = [(c.name, records.contig_sequence(i)) for i, c in enumerate(records.contigs)]
    with _open_text(sink, "w") as handle:
        for name, seq in records:
            handle.write(f">{name}\n")
            for start in range(0, len(seq), width):
                handle.write(seq[start:start + width] + "\n")


def write_fastq(reads: Iterable[Read], sink: Source) -> None:
    with _open_text(sink, "w") as handle:
        for read in reads:
            qual = read.qual if read.qual is not None else "I" * len(read)
            handle.write(f"@{read.id}\n{read.seq}\n+\n{qual}\n")


# --- SAM ---


@dataclass(frozen=True)
class SamRecord:
    qname: str
    flag: int
    rname: str
    pos: int
    mapq: int
    cigar: str
    rnext: str
    pnext: int
    tlen: int
    seq: str
    qual: str
    nm: Optional[int] = None

    def to_line(self) -> str:
        fields = [
            self.qname, str(self.flag), self.rname, str(self.pos), str(self.mapq), self.cigar,
            self.rnext, str(self.pnext), str(self.tlen), self.seq, self.qual,
        ]
        if self.nm is not None:
            fields.append(f"NM:i:{self.nm}")
        return "\t".join(fields)

    @classmethod
    def mapped(cls, genome: Genome, read: Read, match: Match) -> "SamRecord":
        contig = genome.contigs[match.contig]
        seq, qual = read.seq, read.qual or "*"
        if match.strand is Strand.REVERSE:
            seq = reverse_complement(seq)
            qual = qual[::-1] if read.qual else "*"
        return cls(
            read.id, match.strand.sam_flag, contig.name, match.begin - contig.start + 1,
            MAPQ_UNAVAILABLE, match.cigar or f"{len(read)}M", "*", 0, 0, seq, qual, match.errors,
        )

    @classmethod
    def unmapped(cls, read: Read) -> "SamRecord":
        return cls(read.id, UNMAPPED_FLAG, "*", 0, 0, "*", "*", 0, 0, read.seq, read.qual or "*")


def sam_header_lines(genome: Genome, version: str = __version__) -> list[str]:
    lines = ["@HD\tVN:1.6\tSO:unsorted"]
    lines.extend(f"@SQ\tSN:{c.name}\tLN:{c.length}" for c in genome.contigs)
    lines.append(f"@PG\tID:masai-lite\tPN:masai-lite\tVN:{version}")
    return lines


def sam_records(
    genome: Genome, reads: Sequence[Read], match_sets: Sequence[Iterable[Match]], report_unmapped: bool = False
) -> Iterator[SamRecord]:
    """Records grouped per read, in input read order."""
    for read, matches in zip(reads, match_sets):
        matches = list(matches)
        if not matches:
            if report_unmapped:
                yield SamRecord.unmapped(read)
            continue
        for match in matches:
            yield SamRecord.mapped(genome, read, match)


def write_sam(
    genome: Genome,
    reads: Sequence[Read],
    match_sets: Sequence[Iterable[Match]],
    sink: Source,
    report_unmapped: bool = False,
) -> int:
    """Writes header and records; returns the number of records written."""
    written = 0
    with _open_text(sink, "w") as handle:
        for line in sam_header_lines(genome):
            handle.write(line + "\n")
        for record in sam_records(genome, reads, match_sets, report_unmapped):
            handle.write(record.to_line() + "\n")
            written += 1
    return written
