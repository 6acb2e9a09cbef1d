import numpy as np
import pytest

from treecast import Hierarchy


def fig_hierarchy() -> Hierarchy:
    """Two-level example tree: T; A,B; AA,AB,BA,BB,BC."""
    return Hierarchy.from_nodes(
        [
            ("T", None),
            ("A", 0),
            ("B", 0),
            ("AA", 1),
            ("AB", 1),
            ("BA", 2),
            ("BB", 2),
            ("BC", 2),
        ]
    )


def random_hierarchy(rng: np.random.Generator, max_nodes: int = 30) -> Hierarchy:
    """Random rooted tree; degenerate shapes (chains, single children) included."""
    n = int(rng.integers(1, max_nodes + 1))
    nodes = [("n0", None)]
    for i in range(1, n):
        parent = int(rng.integers(0, i))
        nodes.append((f"n{i}", parent))
    return Hierarchy.from_nodes(nodes)


@pytest.fixture
def fig_tree() -> Hierarchy:
    return fig_hierarchy()
