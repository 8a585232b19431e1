import pytest

from helpers import ml100k_file

from prefwalk import load_ratings


@pytest.fixture(scope="session")
def ml100k():
    """MovieLens-100K ratings, skipping when the file is not on disk."""
    path = ml100k_file()
    if path is None:
        pytest.skip("MovieLens-100K not found (set PREFWALK_ML100K or place "
                    "data/ml-100k/u.data)")
    return load_ratings(path, "tsv_umr")
