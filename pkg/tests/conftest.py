import numpy as np
import pytest

from masai_lite.index import EsaIndex
from masai_lite.seq import Genome

# Text and seeds of the classic multiple-backtracking worked example
EXAMPLE_TEXT = "GGTAACGGTGCGGGC"
EXAMPLE_SEEDS = ("GGTT", "GTAT", "GTGG")


def random_dna(rng: np.random.Generator, n: int, alphabet: str = "ACGT") -> str:
    return "".join(rng.choice(list(alphabet), size=n))


def random_genome(*lengths: int, seed: int = 0) -> Genome:
    rng = np.random.default_rng(seed)
    return Genome.from_records((f"chr{i + 1}", random_dna(rng, n)) for i, n in enumerate(lengths))


@pytest.fixture
def rng():
    return np.random.default_rng(7)


@pytest.fixture
def example_index():
    return EsaIndex.build(Genome.from_records([("ex", EXAMPLE_TEXT)]))


@pytest.fixture
def small_genome():
    return random_genome(3000, 2000, seed=11)


@pytest.fixture
def small_index(small_genome):
    return EsaIndex.build(small_genome)
