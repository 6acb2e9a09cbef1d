"""Aggregation trees, summing matrices, and node/parameter counting.

A hierarchy is a rooted tree of labelled nodes. Every internal node is the
sum of its children; leaves carry the disaggregate series. Nodes are kept in
a canonical order (level by level from the root, declaration order within a
level) so that vectors indexed by the hierarchy always line up with the rows
of its summing matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import StructuralValidityError

_INT64_MAX = 2**63 - 1


@dataclass(frozen=True)
class Hierarchy:
    """Rooted aggregation tree.

    ``labels[i]`` names node ``i`` and ``parents[i]`` is the index of its
    parent (``None`` for the root). Indices refer to canonical order: the
    constructor re-sorts its input level by level, so a parent always
    precedes its children.
    """

    labels: tuple[str, ...]
    parents: tuple[int | None, ...]
    children: tuple[tuple[int, ...], ...] = field(repr=False)
    depths: tuple[int, ...] = field(repr=False)

    @classmethod
    def from_nodes(cls, nodes: list[tuple[str, int | None]]) -> "Hierarchy":
        """Build and validate a hierarchy from ``(label, parent_index)`` pairs.

        Parent indices refer to positions in ``nodes``. Raises
        :class:`StructuralValidityError` for multiple roots, orphans, cycles,
        or duplicate labels.
        """
        n = len(nodes)
        if n == 0:
            raise StructuralValidityError("hierarchy needs at least one node")
        labels = [str(lab) for lab, _ in nodes]
        if len(set(labels)) != n:
            dupes = sorted({l for l in labels if labels.count(l) > 1})
            raise StructuralValidityError(f"duplicate labels: {dupes}")
        roots = [i for i, (_, p) in enumerate(nodes) if p is None]
        if len(roots) != 1:
            raise StructuralValidityError(
                f"expected exactly one root, found {len(roots)}"
            )
        for i, (_, p) in enumerate(nodes):
            if p is None:
                continue
            if not isinstance(p, (int, np.integer)) or not (0 <= p < n) or p == i:
                raise StructuralValidityError(
                    f"node {labels[i]!r} has invalid parent index {p!r}"
                )

        # Depth-by-depth walk; nodes never reached sit on a cycle or under one.
        depth = [-1] * n
        depth[roots[0]] = 0
        frontier = [roots[0]]
        order: list[int] = []
        while frontier:
            order.extend(frontier)
            nxt = []
            for i in range(n):
                p = nodes[i][1]
                if p is not None and depth[i] < 0 and depth[p] >= 0:
                    depth[i] = depth[p] + 1
                    nxt.append(i)
            frontier = nxt
        if len(order) != n:
            missing = [labels[i] for i in range(n) if depth[i] < 0]
            raise StructuralValidityError(
                f"nodes unreachable from the root (cycle or orphan): {missing}"
            )

        # Canonical order: level-major, declaration order within a level.
        order.sort(key=lambda i: (depth[i], i))
        pos = {old: new for new, old in enumerate(order)}
        clabels = tuple(labels[i] for i in order)
        cparents = tuple(
            None if nodes[i][1] is None else pos[nodes[i][1]] for i in order
        )
        cdepths = tuple(depth[i] for i in order)
        kids: list[list[int]] = [[] for _ in range(n)]
        for i, p in enumerate(cparents):
            if p is not None:
                kids[p].append(i)
        return cls(clabels, cparents, tuple(tuple(k) for k in kids), cdepths)

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def n_nodes(self) -> int:
        return len(self.labels)

    @property
    def bottom_indices(self) -> tuple[int, ...]:
        return tuple(i for i, k in enumerate(self.children) if not k)

    @property
    def internal_indices(self) -> tuple[int, ...]:
        return tuple(i for i, k in enumerate(self.children) if k)

    @property
    def n_bottom(self) -> int:
        return len(self.bottom_indices)

    @property
    def max_depth(self) -> int:
        return max(self.depths)

    def index_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"no node labelled {label!r}") from None

    def level(self, d: int) -> tuple[int, ...]:
        """Indices of all nodes at depth ``d``."""
        return tuple(i for i, dd in enumerate(self.depths) if dd == d)


@dataclass(frozen=True)
class StructureMatrix:
    """0/1 summing matrix mapping bottom series to every series.

    Rows follow the hierarchy's canonical node order; columns are the bottom
    nodes in canonical order, so selecting the bottom rows yields the
    identity.
    """

    entries: np.ndarray
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape


@dataclass(frozen=True)
class SubHierarchy:
    """One parent with its direct children, as a standalone one-level tree."""

    parent: int
    children: tuple[int, ...]
    local_structure: np.ndarray  # (1+w) x w: ones row stacked on I_w

    @property
    def indices(self) -> tuple[int, ...]:
        return (self.parent,) + self.children


def build_structure_matrix(h: Hierarchy) -> StructureMatrix:
    """Summing matrix of ``h``: row i selects the bottom descendants of node i."""
    bottom = h.bottom_indices
    col_of = {node: j for j, node in enumerate(bottom)}
    m, n = h.n_nodes, len(bottom)
    entries = np.zeros((m, n))
    # Walk bottom-up: each row is the sum of its children's rows.
    for i in range(m - 1, -1, -1):
        if not h.children[i]:
            entries[i, col_of[i]] = 1.0
        else:
            for c in h.children[i]:
                entries[i] += entries[c]
    return StructureMatrix(
        entries=entries,
        row_labels=h.labels,
        col_labels=tuple(h.labels[i] for i in bottom),
    )


def aggregate_bottom(smat: StructureMatrix, bottom: np.ndarray) -> np.ndarray:
    """Aggregate a bottom-level assignment through the tree (``smat @ bottom``).

    ``bottom`` may be a vector of length n or an n-by-H array.
    """
    bottom = np.asarray(bottom, dtype=float)
    if bottom.shape[0] != smat.entries.shape[1]:
        raise ValueError(
            f"bottom has {bottom.shape[0]} entries, structure matrix expects "
            f"{smat.entries.shape[1]}"
        )
    return smat.entries @ bottom


def enumerate_subhierarchies(h: Hierarchy) -> list[SubHierarchy]:
    """All one-level sub-hierarchies, one per internal node, top-down.

    Ordering is breadth-first by level and canonical (left-to-right) within a
    level; leaves contribute nothing.
    """
    subs = []
    for i in range(h.n_nodes):  # canonical order is already level-major
        kids = h.children[i]
        if not kids:
            continue
        w = len(kids)
        local = np.vstack([np.ones((1, w)), np.eye(w)])
        subs.append(SubHierarchy(parent=i, children=kids, local_structure=local))
    return subs


def _checked_int(value: int, what: str) -> int:
    if value > _INT64_MAX:
        raise OverflowError(f"{what} exceeds the 64-bit integer range")
    return value


def node_count(w: int, depth: int) -> int:
    """Total nodes of a balanced tree of the given width and depth.

    A depth-``D`` tree with ``w`` children per internal node has
    ``1 + w + ... + w**D = (w**(D+1) - 1) / (w - 1)`` nodes.
    """
    if w < 2:
        raise ValueError("width must be at least 2")
    if depth < 0:
        raise ValueError("depth must be non-negative")
    return _checked_int((w ** (depth + 1) - 1) // (w - 1), "node count")


def mint_param_count(w: int, depth: int) -> int:
    """Free covariance parameters for one-shot trace minimization: p(p+1)/2."""
    p = node_count(w, depth)
    return _checked_int(p * (p + 1) // 2, "parameter count")


def mintit_param_count(w: int, depth: int) -> int:
    """Free covariance parameters for the iterative method.

    One ``(1+w)``-node sub-problem per internal node: ``(w**D - 1)/(w - 1)``
    steps, each estimating a ``w(w+1)/2``-parameter local covariance block
    beneath the shared parent row.
    """
    if w < 2:
        raise ValueError("width must be at least 2")
    if depth < 0:
        raise ValueError("depth must be non-negative")
    steps = (w**depth - 1) // (w - 1)
    return _checked_int(steps * (w * (w + 1) // 2), "parameter count")


def balanced_hierarchy(widths: list[int], root_label: str = "T") -> Hierarchy:
    """Hierarchy with the given child count at each successive depth.

    ``widths=[2, 3]`` yields a root with two children, each of which has
    three children. Labels are path strings ("T", "T/0", "T/0/1", ...).
    """
    nodes: list[tuple[str, int | None]] = [(root_label, None)]
    frontier = [0]
    for w in widths:
        nxt = []
        for p in frontier:
            for j in range(w):
                nodes.append((f"{nodes[p][0]}/{j}", p))
                nxt.append(len(nodes) - 1)
        frontier = nxt
    return Hierarchy.from_nodes(nodes)
