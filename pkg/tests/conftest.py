from __future__ import annotations

import pytest

from kgdecode.fixtures import FixtureSpec, QuestionMix, film_scenario, generate


@pytest.fixture(scope="session")
def film_fixture():
    """The director/writer scenario with one 2-pattern gold question."""
    return film_scenario()


@pytest.fixture(scope="session")
def small_fixture():
    """A 12-entity mixed-template fixture shared by pipeline tests.

    One-word labels with at most one type keep identifiers short enough
    that queries complete comfortably within a 64-token budget.
    """
    return generate(
        FixtureSpec(
            entities=12,
            relations=3,
            density=2.0,
            mix=QuestionMix(one_hop=4, two_hop=2, count=2, ask=2),
            seed=11,
            label_len=(3, 6),
            two_word_labels=False,
            max_types=1,
        )
    )


@pytest.fixture(scope="session")
def tiny_fixture():
    """Few entities and short labels: cheap exhaustive enumeration."""
    return generate(
        FixtureSpec(
            entities=4,
            relations=2,
            density=1.5,
            mix=QuestionMix(one_hop=2, ask=1),
            alphabet="ab",
            seed=5,
            max_patterns=2,
            type_pool=1,
            label_len=(2, 3),
            two_word_labels=False,
            max_types=0,
        )
    )
