"""Shared generators for synthetic test instances."""

import os
from pathlib import Path

import numpy as np

from prefwalk import PreferenceStore, loads_ratings


def random_ratings(rng, n_users=8, n_items=9, min_per_user=2, max_per_user=None,
                   raw_offset=100):
    """Random ratings dataset built through the text parser, so raw-id
    mapping is exercised too.  Every user rates at least min_per_user
    distinct items with grades 1..5."""
    max_per_user = max_per_user or n_items
    lines = []
    for u in range(n_users):
        count = int(rng.integers(min_per_user, max_per_user + 1))
        items = rng.choice(n_items, size=min(count, n_items), replace=False)
        for i in items:
            lines.append(f"{u + raw_offset}\t{i + raw_offset}\t{rng.integers(1, 6)}")
    return loads_ratings("\n".join(lines))


def random_store(rng, n_users=6, n_items=6, fill=0.4) -> PreferenceStore:
    """Random preference store: each unordered item pair is held by a
    user with probability fill, in a random orientation (so stores are
    antisymmetric by construction)."""
    users = []
    for _ in range(n_users):
        pairs = []
        for a in range(n_items):
            for b in range(a + 1, n_items):
                if rng.random() < fill:
                    pairs.append((a, b) if rng.random() < 0.5 else (b, a))
        users.append(pairs)
    return PreferenceStore.from_pairs(n_users, n_items, users)


def first_warm_user(store) -> int:
    for u in range(store.n_users):
        if store.count(u) > 0:
            return u
    raise AssertionError("store has no warm user")


def ml100k_file():
    """Locate the MovieLens-100K u.data file, if present."""
    env = os.environ.get("PREFWALK_ML100K")
    candidates = [Path(env)] if env else []
    candidates += [Path("data/ml-100k/u.data"), Path("u.data"),
                   Path(__file__).resolve().parent.parent / "data" / "ml-100k" / "u.data"]
    for path in candidates:
        if path and path.is_file():
            return path
    return None
