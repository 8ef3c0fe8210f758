import pytest

from priceshock.data import CategorySet
from priceshock.fixtures import canonical_fixtures, write_fixture_bundle


@pytest.fixture(scope="session")
def bundle():
    return canonical_fixtures()


@pytest.fixture(scope="session")
def categories():
    return CategorySet.default()


@pytest.fixture(scope="session")
def bundle_dir(tmp_path_factory):
    """Materialised fixture bundle with its config file."""
    d = tmp_path_factory.mktemp("bundle")
    write_fixture_bundle(d)
    return d
