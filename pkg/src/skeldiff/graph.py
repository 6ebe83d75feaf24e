"""Skeleton topology and the partitioned, normalized adjacency matrices.

Each undirected bone (i, j) contributes two directed entries.  An entry
i -> j lands in one of three partitions by comparing BFS hop distances to
the center joint: same distance -> root, closer -> centripetal, farther ->
centrifugal.  Each partition is normalized as D^-1/2 (A + I) D^-1/2 with
D the row sums of (A + I); the identity is added inside every partition.
Temporal edges are not materialized here: convolution along the frame axis
plays that role, keeping adjacency at V x V.
"""

import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import DataFormatError, ShapeError

PARTITION_NAMES = ("root", "centripetal", "centrifugal")


@dataclass(frozen=True)
class SkeletonGraph:
    num_joints: int
    edges: frozenset  # of (i, j) tuples with i < j
    center: int
    joint_names: tuple = field(default=(), compare=False)

    def __post_init__(self):
        v = self.num_joints
        if v < 1:
            raise ShapeError(f"need at least one joint, got {v}")
        if not 0 <= self.center < v:
            raise ShapeError(f"center joint {self.center} out of range")
        for i, j in self.edges:
            if i == j:
                raise ShapeError(f"self loop at joint {i}")
            if not (0 <= i < v and 0 <= j < v):
                raise ShapeError(f"edge ({i},{j}) references missing joints")
        if len(self.hop_distances()) != v:
            raise ShapeError("skeleton graph is not connected")

    @staticmethod
    def from_edges(num_joints, edges, center, joint_names=()):
        norm = frozenset((min(i, j), max(i, j)) for i, j in edges)
        return SkeletonGraph(num_joints, norm, center, tuple(joint_names))

    def neighbors(self):
        adj = [[] for _ in range(self.num_joints)]
        for i, j in sorted(self.edges):
            adj[i].append(j)
            adj[j].append(i)
        return adj

    def hop_distances(self) -> dict:
        """BFS hop distance of every reachable joint from the center."""
        adj = self.neighbors()
        dist = {self.center: 0}
        queue = deque([self.center])
        while queue:
            u = queue.popleft()
            for w in adj[u]:
                if w not in dist:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        return dist

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.num_joints, self.num_joints))
        for i, j in self.edges:
            a[i, j] = 1.0
            a[j, i] = 1.0
        return a

    def parents_from_center(self) -> np.ndarray:
        """Parent of each joint in the BFS tree rooted at the center (-1 there)."""
        adj = self.neighbors()
        parent = np.full(self.num_joints, -1, dtype=np.int64)
        seen = {self.center}
        queue = deque([self.center])
        while queue:
            u = queue.popleft()
            for w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    parent[w] = u
                    queue.append(w)
        return parent


def partition(graph: SkeletonGraph):
    """Split directed adjacency entries into root/centripetal/centrifugal."""
    v = graph.num_joints
    dist = graph.hop_distances()
    mats = [np.zeros((v, v)) for _ in range(3)]
    for i, j in graph.edges:
        for a, b in ((i, j), (j, i)):
            if dist[b] == dist[a]:
                mats[0][a, b] = 1.0
            elif dist[b] < dist[a]:
                mats[1][a, b] = 1.0
            else:
                mats[2][a, b] = 1.0
    return tuple(mats)


def normalize(a: np.ndarray) -> np.ndarray:
    """Symmetric-style normalization D^-1/2 (A + I) D^-1/2, D = row sums."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"adjacency must be square, got {a.shape}")
    if (a < 0).any():
        raise ShapeError("adjacency entries must be nonnegative")
    ai = a + np.eye(a.shape[0])
    d_inv_sqrt = 1.0 / np.sqrt(ai.sum(axis=1))
    return d_inv_sqrt[:, None] * ai * d_inv_sqrt[None, :]


@dataclass(frozen=True)
class PartitionedAdjacency:
    """The three normalized partition matrices, in PARTITION_NAMES order."""
    matrices: tuple

    @staticmethod
    def build(graph: SkeletonGraph) -> "PartitionedAdjacency":
        return PartitionedAdjacency(tuple(normalize(m) for m in partition(graph)))

    @property
    def num_joints(self) -> int:
        return self.matrices[0].shape[0]


_DEFAULT_JOINTS = (
    "pelvis", "spine", "neck", "head",
    "l_shoulder", "l_elbow", "l_wrist", "l_hand",
    "r_shoulder", "r_elbow", "r_wrist", "r_hand",
)

_DEFAULT_EDGES = (
    (0, 1), (1, 2), (2, 3),
    (2, 4), (4, 5), (5, 6), (6, 7),
    (2, 8), (8, 9), (9, 10), (10, 11),
)


def default_skeleton() -> SkeletonGraph:
    """The canonical 12-joint synthetic skeleton.

    Torso chain pelvis-spine-neck-head with a shoulder-elbow-wrist arm chain
    plus a hand end effector on each side, attached at the neck; the center
    joint is the spine.
    """
    return SkeletonGraph.from_edges(12, _DEFAULT_EDGES, center=1,
                                    joint_names=_DEFAULT_JOINTS)


def skeleton_from_dict(doc: dict) -> SkeletonGraph:
    try:
        num = int(doc["num_joints"])
        edges = [(int(i), int(j)) for i, j in doc["edges"]]
        center = int(doc["center"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"bad skeleton document: {exc}") from exc
    try:
        return SkeletonGraph.from_edges(num, edges, center)
    except ShapeError as exc:
        raise DataFormatError(f"bad skeleton document: {exc}") from exc


def load_skeleton(path) -> SkeletonGraph:
    """Load a skeleton from JSON: {"num_joints", "edges", "center"}."""
    if str(path) == "default":
        return default_skeleton()
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataFormatError(
                f"{path}: invalid JSON at line {exc.lineno}, col {exc.colno}: "
                f"{exc.msg}") from exc
    return skeleton_from_dict(doc)
