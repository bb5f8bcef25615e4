"""
Enhanced suffix array over the genome text.

The suffix array and LCP table emulate the suffix trie of the genome: a trie
node is a half-open interval of the suffix array plus the number of
characters spelled from the root. Children are found by refining the
interval with binary search on the character at offset `depth`, so no child
table is stored.

Index file layout (little-endian):

    magic "MSAI" | version u32 | flags u32 (bit0: 64-bit arrays) | n u64 |
    contig count u32 | {name len u16, name, start u64, length u64}* |
    text packed 4 bits/base (A=0 C=1 G=2 T=3 N=4, first base in the high
    nibble) | sa | lcp
"""
import bisect
import logging
import struct
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, NamedTuple, Optional, Union

import numpy as np

from masai_lite.errors import FormatError, InputError
from masai_lite.seq import ALPHABET, Contig, Genome

logger = logging.getLogger(__name__)

MAGIC = b"MSAI"
FORMAT_VERSION = 1
FLAG_WIDE = 0x1

_ENCODE = bytes.maketrans(ALPHABET.encode(), bytes(range(len(ALPHABET))))
_EXHAUSTED = -1


def encode_text(text: str) -> bytes:
    """ACGTN -> byte codes 0..4."""
    return text.encode("ascii").translate(_ENCODE)


def index_dtype(n: int) -> np.dtype:
    return np.dtype("<u4") if n < 2**32 else np.dtype("<u8")


class EsaNode(NamedTuple):
    lo: int
    hi: int
    depth: int

    @property
    def size(self) -> int:
        return self.hi - self.lo


def build_suffix_array(text: str) -> np.ndarray:
    """
    Suffix array by prefix doubling.

    Ranks start from the symbol codes shifted by one so that the implicit
    terminator (rank 0) sorts before A. Each round sorts suffixes by the pair
    (rank of the first h symbols, rank of the next h symbols) until every
    rank is distinct.
    """
    n = len(text)
    if n < 1:
        raise ValueError("cannot build a suffix array of an empty text")
    rank = np.frombuffer(encode_text(text), dtype=np.uint8).astype(np.int64) + 1
    h = 1
    while True:
        second = np.zeros(n, dtype=np.int64)
        if h < n:
            second[: n - h] = rank[h:]
        order = np.lexsort((second, rank))
        first_sorted = rank[order]
        second_sorted = second[order]
        changed = np.empty(n, dtype=bool)
        changed[0] = True
        changed[1:] = (first_sorted[1:] != first_sorted[:-1]) | (
            second_sorted[1:] != second_sorted[:-1]
        )
        new_rank = np.cumsum(changed)
        rank = np.empty(n, dtype=np.int64)
        rank[order] = new_rank
        if new_rank[-1] == n:
            break
        h *= 2
    return order.astype(index_dtype(n))


def build_lcp(text: str, sa: np.ndarray) -> np.ndarray:
    """Kasai et al. LCP construction; lcp[0] = 0."""
    n = len(text)
    positions = sa.tolist()
    rank = [0] * n
    for i, p in enumerate(positions):
        rank[p] = i
    lcp = [0] * n
    h = 0
    for p in range(n):
        r = rank[p]
        if r == 0:
            h = 0
            continue
        q = positions[r - 1]
        while p + h < n and q + h < n and text[p + h] == text[q + h]:
            h += 1
        lcp[r] = h
        if h > 0:
            h -= 1
    return np.asarray(lcp, dtype=sa.dtype)


@dataclass(eq=False)
class EsaIndex:
    genome: Genome
    sa: np.ndarray
    lcp: np.ndarray
    _codes: bytes = field(init=False, repr=False)
    _positions: list = field(init=False, repr=False)

    def __post_init__(self):
        self._codes = encode_text(self.genome.text)
        self._positions = self.sa.tolist()

    @classmethod
    def build(cls, genome: Genome) -> "EsaIndex":
        started = time.perf_counter()
        sa = build_suffix_array(genome.text)
        lcp = build_lcp(genome.text, sa)
        logger.info(f"Built suffix array over {len(genome.text)} bp in {time.perf_counter() - started:.2f}s")
        return cls(genome, sa, lcp)

    @property
    def text(self) -> str:
        return self.genome.text

    def __len__(self) -> int:
        return len(self._positions)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EsaIndex):
            return NotImplemented
        return (
            self.genome == other.genome
            and np.array_equal(self.sa, other.sa)
            and np.array_equal(self.lcp, other.lcp)
        )

    def __getstate__(self):
        return {"genome": self.genome, "sa": self.sa, "lcp": self.lcp}

    def __setstate__(self, state):
        self.genome = state["genome"]
        self.sa = state["sa"]
        self.lcp = state["lcp"]
        self.__post_init__()

    def code_at(self, pos: int) -> int:
        """Symbol code at `pos`, or -1 past the end of the text."""
        return self._codes[pos] if pos < len(self._codes) else _EXHAUSTED


def root(index: EsaIndex) -> EsaNode:
    return EsaNode(0, len(index), 0)


def _bound(index: EsaIndex, node: EsaNode, code: int, lo: int) -> int:
    """First suffix-array slot in [lo, node.hi) whose symbol at node.depth is >= code."""
    depth = node.depth
    return bisect.bisect_left(
        index._positions, code, lo, node.hi, key=lambda p: index.code_at(p + depth)
    )


def node_children(index: EsaIndex, node: EsaNode) -> list[tuple[str, EsaNode]]:
    """Per-character children of `node`, labels in ACGTN order."""
    children = []
    lo = node.lo
    # the one suffix of length == depth, if any, sorts first and drops out
    if lo < node.hi and index.code_at(index._positions[lo] + node.depth) == _EXHAUSTED:
        lo += 1
    while lo < node.hi:
        code = index.code_at(index._positions[lo] + node.depth)
        hi = _bound(index, node, code + 1, lo)
        children.append((ALPHABET[code], EsaNode(lo, hi, node.depth + 1)))
        lo = hi
    return children


def go_down(index: EsaIndex, node: EsaNode, c: str) -> Optional[EsaNode]:
    """The child of `node` labelled `c`, or None."""
    code = ALPHABET.find(c)
    if code < 0:
        return None
    lo = _bound(index, node, code, node.lo)
    hi = _bound(index, node, code + 1, lo)
    if lo == hi:
        return None
    return EsaNode(lo, hi, node.depth + 1)


def find(index: EsaIndex, pattern: str) -> Optional[EsaNode]:
    """Spells `pattern` from the root."""
    node: Optional[EsaNode] = root(index)
    for c in pattern:
        node = go_down(index, node, c)
        if node is None:
            return None
    return node


def occurrences(index: EsaIndex, node: EsaNode) -> list[int]:
    """Text positions below `node`, in suffix-array order."""
    return index._positions[node.lo:node.hi]


# --- Persistence ---

def _pack_text(text: str) -> bytes:
    codes = np.frombuffer(encode_text(text), dtype=np.uint8)
    if codes.size % 2:
        codes = np.append(codes, np.uint8(0))
    return ((codes[0::2] << 4) | codes[1::2]).astype(np.uint8).tobytes()


def _unpack_text(packed: bytes, n: int) -> str:
    raw = np.frombuffer(packed, dtype=np.uint8)
    codes = np.empty(raw.size * 2, dtype=np.uint8)
    codes[0::2] = raw >> 4
    codes[1::2] = raw & 0x0F
    codes = codes[:n]
    if codes.size and codes.max() >= len(ALPHABET):
        raise FormatError("index text contains an invalid base code")
    return np.frombuffer(ALPHABET.encode(), dtype=np.uint8)[codes].tobytes().decode("ascii")


def save_index(index: EsaIndex, sink: Union[str, Path, BinaryIO]) -> None:
    if isinstance(sink, (str, Path)):
        with open(sink, "wb") as handle:
            save_index(index, handle)
        return
    n = len(index.genome.text)
    dtype = index_dtype(n)
    flags = FLAG_WIDE if dtype.itemsize == 8 else 0
    sink.write(MAGIC)
    sink.write(struct.pack("<IIQI", FORMAT_VERSION, flags, n, len(index.genome.contigs)))
    for contig in index.genome.contigs:
        name = contig.name.encode("utf-8")
        sink.write(struct.pack("<H", len(name)))
        sink.write(name)
        sink.write(struct.pack("<QQ", contig.start, contig.length))
    sink.write(_pack_text(index.genome.text))
    sink.write(index.sa.astype(dtype).tobytes())
    sink.write(index.lcp.astype(dtype).tobytes())


class _Reader:
    def __init__(self, source: BinaryIO):
        self.source = source

    def take(self, size: int, what: str) -> bytes:
        data = self.source.read(size)
        if len(data) != size:
            raise FormatError(f"truncated index file while reading {what}")
        return data

    def unpack(self, fmt: str, what: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def load_index(source: Union[str, Path, BinaryIO]) -> EsaIndex:
    if isinstance(source, (str, Path)):
        try:
            with open(source, "rb") as handle:
                return load_index(handle)
        except OSError as e:
            raise FormatError(f"cannot read index {source}: {e}") from e
    reader = _Reader(source)
    if reader.take(4, "magic") != MAGIC:
        raise FormatError("not a masai-lite index (bad magic)")
    version, flags, n, contig_count = reader.unpack("<IIQI", "header")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported index version {version} (expected {FORMAT_VERSION})")
    wide = bool(flags & FLAG_WIDE)
    if not wide and n >= 2**32:
        raise FormatError(f"text length {n} does not fit the 32-bit arrays declared by the header")
    contigs = []
    for _ in range(contig_count):
        (name_len,) = reader.unpack("<H", "contig name length")
        name = reader.take(name_len, "contig name").decode("utf-8")
        start, length = reader.unpack("<QQ", "contig bounds")
        contigs.append(Contig(name, start, length))
    text = _unpack_text(reader.take((n + 1) // 2, "text"), n)
    dtype = np.dtype("<u8") if wide else np.dtype("<u4")
    sa = np.frombuffer(reader.take(n * dtype.itemsize, "suffix array"), dtype=dtype).copy()
    lcp = np.frombuffer(reader.take(n * dtype.itemsize, "lcp table"), dtype=dtype).copy()
    if n and int(sa.max()) >= n:
        raise FormatError("suffix array entry out of range")
    try:
        genome = Genome(text, tuple(contigs))
    except InputError as e:
        raise FormatError(f"corrupt contig table: {e}") from e
    return EsaIndex(genome, sa, lcp)
