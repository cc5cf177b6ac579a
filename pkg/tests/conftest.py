"""Shared fixtures and generators for the test suite."""

from __future__ import annotations

import random
import string
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from cdp.clock import ManualClock
from cdp.records import SourceDescriptor, StructureClass, SubDomain, build_record

PROVIDERS = ["hospital:stvincents", "grower:farm-12", "research:pubcorpus"]

WORDS = [
    "cbd", "thc", "cbn", "terpene", "indica", "sativa", "hybrid", "pain",
    "chronic", "relief", "dose", "strain", "treatment", "effective",
    "morning", "evening", "oil", "flower", "tincture", "capsule", "sleep",
    "anxiety", "nausea", "appetite", "inflammation", "spasm", "migraine",
]


def random_scalar(rng: random.Random):
    kind = rng.randrange(6)
    if kind == 0:
        return None
    if kind == 1:
        return rng.random() < 0.5
    if kind == 2:
        return rng.randint(-(2**40), 2**40)
    if kind == 3:
        # include negative zero and subnormal-ish values occasionally
        return rng.choice([0.0, -0.0, 12.5, 250.0, 1e-7, 1e16, rng.random() * 100])
    if kind == 4:
        return " ".join(rng.sample(WORDS, rng.randint(1, 4)))
    return "".join(rng.choice(string.printable) for _ in range(rng.randint(0, 12)))


def random_field_name(rng: random.Random) -> str:
    name = "".join(rng.choice(string.ascii_lowercase + "_") for _ in range(rng.randint(1, 10)))
    return name or "f"


def random_tree(rng: random.Random, depth: int = 0) -> dict:
    tree = {}
    for _ in range(rng.randint(0, 5)):
        name = random_field_name(rng)
        roll = rng.random()
        if depth < 2 and roll < 0.2:
            tree[name] = random_tree(rng, depth + 1)
        elif depth < 2 and roll < 0.35:
            tree[name] = [random_scalar(rng) for _ in range(rng.randint(0, 4))]
        else:
            tree[name] = random_scalar(rng)
    return tree


def random_record(rng: random.Random):
    provider = rng.choice(PROVIDERS)
    sub_domain = SubDomain(provider.split(":")[0])
    return build_record(
        source=SourceDescriptor(provider=provider),
        sub_domain=sub_domain,
        structure_class=rng.choice(list(StructureClass)),
        schema_ref=rng.choice([None, "strain/profile", "hospital/treatment", "research/notes"]),
        created_at=f"20{rng.randint(10, 25):02d}-0{rng.randint(1, 9)}-1{rng.randint(0, 9)}"
        f"T{rng.randint(0, 23):02d}:{rng.randint(0, 59):02d}:{rng.randint(0, 59):02d}Z",
        fields=random_tree(rng),
    )


ACCEPTANCE_RESULTS: list[tuple[str, bool]] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for name, ok in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}")


@pytest.fixture
def rng():
    return random.Random(20190327)


@pytest.fixture
def clock():
    return ManualClock("2019-03-27T09:00:00Z")


@pytest.fixture
def store(tmp_path):
    from cdp.store import Store

    return Store(tmp_path / "store")
