import pytest

from coarsekit.spacegen import GeneratorSpec, generate


@pytest.fixture(scope="session")
def p6():
    return generate(GeneratorSpec("path", n=6))


@pytest.fixture(scope="session")
def p10():
    return generate(GeneratorSpec("path", n=10))


@pytest.fixture(scope="session")
def p12():
    return generate(GeneratorSpec("path", n=12))


@pytest.fixture(scope="session")
def p200():
    return generate(GeneratorSpec("path", n=200))


@pytest.fixture(scope="session")
def grid8():
    return generate(GeneratorSpec("grid", side=8))


@pytest.fixture(scope="session")
def triple_uniform():
    return generate(GeneratorSpec("uniform", n=3))


def random_space(seed: int, n: int):
    """Seeded connected unit-edge graph space, used all over the suite."""
    return generate(GeneratorSpec("random_graph", n=n, seed=seed))
