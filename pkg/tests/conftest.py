import random
from pathlib import Path

import pytest

from arbrf import Taxa, extract_clades, parse, random_tree

DATA = Path(__file__).parent / "data"

FIG1_T1 = "(((((((((1,2),3),4),5),6),7),8),9),10);"
FIG1_T2 = "((1,10),(((((((2,3),4),5),6),7),8),9));"


def taxa_of(n):
    return Taxa(tuple(f"t{i}" for i in range(n)))


def random_pair(rng, n, binary=True):
    taxa = taxa_of(n)
    return random_tree(taxa, rng, binary=binary), random_tree(taxa, rng, binary=binary)


def clade_pair(rng, n, binary=True):
    a, b = random_pair(rng, n, binary)
    return extract_clades(a), extract_clades(b)


@pytest.fixture(scope="session")
def fig1():
    doc = parse(FIG1_T1 + "\n" + FIG1_T2)
    return doc


@pytest.fixture(scope="session")
def fig1_clades(fig1):
    return extract_clades(fig1[0]), extract_clades(fig1[1])


@pytest.fixture(scope="session")
def fig1_path():
    return DATA / "fig1.nwk"


@pytest.fixture
def rng():
    return random.Random(20240611)


def labels(taxa, clade_set):
    return [frozenset(taxa.labels(c.bits)) for c in clade_set]
