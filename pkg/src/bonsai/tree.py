"""Leaf-only k-d tree with compressed leaf storage.

Interior nodes carry no points, only the split dimension and the two
interval bounds that make sibling pruning possible: left_high is the
largest split-coordinate value in the left subtree, right_low the
smallest in the right. The intervals may overlap. Leaves reference a
contiguous slice of a shared blob arena; the tree is built once and
never mutated.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .codec import compress_leaf, header_flags

__all__ = [
    "PointCloud",
    "LeafNode",
    "InteriorNode",
    "KdTree",
    "build_tree",
    "leaf_visit_order",
    "DEFAULT_LEAF_CAPACITY",
]

DEFAULT_LEAF_CAPACITY = 15


@dataclass
class PointCloud:
    """An (N, 3) float32 array of x, y, z coordinates plus a frame id."""

    xyz: np.ndarray
    frame_id: str = ""

    def __post_init__(self) -> None:
        a = np.ascontiguousarray(self.xyz, dtype=np.float32)
        if a.ndim != 2 or a.shape[1] != 3:
            raise ValueError("xyz must be (N, 3)")
        self.xyz = a

    def __len__(self) -> int:
        return self.xyz.shape[0]


@dataclass
class LeafNode:
    indices: np.ndarray  # positions into the cloud, build order
    blob_offset: int
    blob_len: int
    compressed: bool
    flags: int  # sharing mask for compressed leaves, 0 otherwise

    @property
    def count(self) -> int:
        return len(self.indices)


@dataclass
class InteriorNode:
    split_dim: int
    left_high: float  # max split-dim value in the left subtree
    right_low: float  # min split-dim value in the right subtree
    left: "InteriorNode | LeafNode" = field(repr=False)
    right: "InteriorNode | LeafNode" = field(repr=False)


class KdTree:
    """Immutable search structure over one point cloud.

    `arena` holds every leaf's blob back to back in build order;
    uncompressed (poisoned) leaves store raw little-endian float32
    triplets there instead.
    """

    def __init__(self, root, leaves, arena: bytes, cloud: PointCloud, leaf_capacity: int):
        self.root = root
        self.leaves = leaves
        self.arena = arena
        self.cloud = cloud
        self.leaf_capacity = leaf_capacity

    def leaf_blob(self, leaf: LeafNode) -> np.ndarray:
        return np.frombuffer(
            self.arena, dtype=np.uint8, count=leaf.blob_len, offset=leaf.blob_offset
        )

    @property
    def n_points(self) -> int:
        return len(self.cloud)


def build_tree(cloud: PointCloud, leaf_capacity: int = DEFAULT_LEAF_CAPACITY) -> KdTree:
    """Median-split build. Splits on the dimension of largest spread.

    The pivot is the lower median of the split coordinate and values
    equal to the pivot go left. When every value ties with the pivot
    (right side would be empty) the split falls back to a positional
    lower-median cut of the stable-sorted order, so construction always
    terminates and every left value stays <= every right value.
    """
    if not 1 <= leaf_capacity <= 16:
        raise ValueError("leaf_capacity must be in [1, 16]")
    if len(cloud) == 0:
        raise ValueError("cannot build a tree over an empty cloud")
    xyz = cloud.xyz
    if not np.all(np.isfinite(xyz)):
        raise ValueError("cloud contains non-finite coordinates")

    leaves: list[LeafNode] = []
    arena = bytearray()

    def make_leaf(idx: np.ndarray) -> LeafNode:
        pts = xyz[idx]
        blob = compress_leaf(pts)
        if blob is None:
            blob = pts.astype("<f4").tobytes()
            compressed, flags = False, 0
        else:
            compressed, flags = True, header_flags(blob)
        leaf = LeafNode(idx, len(arena), len(blob), compressed, flags)
        arena.extend(blob)
        leaves.append(leaf)
        return leaf

    def split(idx: np.ndarray):
        n = len(idx)
        if n <= leaf_capacity:
            return make_leaf(idx)
        sub = xyz[idx]
        spread = sub.max(axis=0) - sub.min(axis=0)
        dim = int(np.argmax(spread))  # first max wins, deterministic
        vals = sub[:, dim]
        order = np.argsort(vals, kind="stable")
        pivot = vals[order[(n - 1) // 2]]
        mask = vals <= pivot
        if mask.all():
            mid = (n + 1) // 2
            left_idx, right_idx = idx[order[:mid]], idx[order[mid:]]
            left_high = float(vals[order[mid - 1]])
            right_low = float(vals[order[mid]])
        else:
            left_idx, right_idx = idx[mask], idx[~mask]
            left_high = float(pivot)
            right_low = float(vals[~mask].min())
        return InteriorNode(dim, left_high, right_low, split(left_idx), split(right_idx))

    root = split(np.arange(len(cloud), dtype=np.intp))
    return KdTree(root, leaves, bytes(arena), cloud, leaf_capacity)


def leaf_visit_order(tree: KdTree, q, r: float):
    """Yield the leaves a radius query must inspect, nearer child first.

    The set is a superset of the leaves holding in-radius points: a
    subtree is skipped only when its split-coordinate interval sits
    farther than r from q along that coordinate, which bounds the full
    3-d distance from below.
    """
    if not (np.isfinite(r) and r > 0):
        raise ValueError("radius must be positive and finite")
    q = np.asarray(q, dtype=np.float32).reshape(3)
    stack = [tree.root]
    while stack:
        node = stack.pop()
        while isinstance(node, InteriorNode):
            qd = float(q[node.split_dim])
            gap_l = qd - node.left_high  # > 0 means q lies beyond the interval
            gap_r = node.right_low - qd
            go_l = gap_l <= r
            go_r = gap_r <= r
            if go_l and go_r:
                if gap_l <= gap_r:
                    stack.append(node.right)
                    node = node.left
                else:
                    stack.append(node.left)
                    node = node.right
            elif go_l:
                node = node.left
            elif go_r:
                node = node.right
            else:
                node = None
                break
        if node is not None:
            yield node
