import numpy as np
import pytest

from grouprec.data import InteractionDataset


def make_dataset(interactions, topics, num_topics, num_users=None, edges=()):
    """Dataset over dense ids straight from index pairs."""
    interactions = list(interactions)
    if num_users is None:
        num_users = 1 + max((u for u, _ in interactions), default=0)
    return InteractionDataset(
        [f"u{u}" for u in range(num_users)], [f"i{j}" for j in range(len(topics))],
        interactions, list(edges), list(topics), num_topics,
    )


@pytest.fixture
def hetrec_files(tmp_path):
    inter = tmp_path / "user_artists.dat"
    inter.write_text(
        "#userID\tartistID\tweight\n"
        "A\tx\t5\nA\ty\t1\nA\tz\t3\n"
        "B\tx\t2\nB\tz\t0\nB\tw\t7\n"
        "C\ty\t4\n",
        encoding="utf-8",
    )
    social = tmp_path / "user_friends.dat"
    social.write_text("#userID\tfriendID\nA\tB\nB\tA\nB\tC\nC\tC\n", encoding="utf-8")
    topics = tmp_path / "item_topics.dat"
    topics.write_text("x\t0\ny\t1\nz\t2\nunused\t1\n", encoding="utf-8")
    return inter, social, topics


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
