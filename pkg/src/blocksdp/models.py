"""Block model specifications, seeded graph generation, and partition encodings.

Four generative variants are supported:

* ``BinaryAsym``   -- two clusters of sizes K = ceil(rho*n) and n - K.
* ``MultiEqual``   -- r clusters of equal size K = n/r.
* ``GeneralOutliers`` -- clusters of sizes K_1 >= ... >= K_r plus outlier
  vertices that belong to no cluster.
* ``Censored``     -- an Erdos-Renyi graph whose edges carry +/-1 labels that
  agree with the product of the endpoint signs with probability 1 - epsilon.

Edge densities scale as p = a*log(n)/n within clusters and q = b*log(n)/n
across clusters (the censored variant only uses p).  Graphs are dense,
symmetric, zero-diagonal integer matrices: alphabet {0,1} for the plain
variants and {-1,0,+1} for the censored one, where the label is folded into
the sign of the entry.

Randomness comes from numpy's Philox counter-based generator keyed directly
with the caller's 64-bit seed, so identical (spec, seed) pairs reproduce
bit-identical graphs on any platform.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError

VARIANTS = ("BinaryAsym", "MultiEqual", "GeneralOutliers", "Censored")

OUTLIER = 0  # cluster label reserved for vertices outside every cluster

RNG_ALGORITHM = "philox4x64-10"  # numpy.random.Philox keyed with the seed


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed)))


@dataclass(frozen=True)
class ModelSpec:
    """Validated generative parameters for one block model instance.

    ``p_exact`` / ``q_exact`` override the log-density parametrization with
    explicit edge probabilities; they exist for degenerate test instances
    (p = 1, q = 0) that the a/b parametrization cannot reach exactly.
    """

    n: int
    variant: str
    a: Optional[float] = None
    b: Optional[float] = None
    rho: Optional[float] = None
    r: Optional[int] = None
    sizes: Optional[tuple[int, ...]] = None
    epsilon: Optional[float] = None
    p_exact: Optional[float] = None
    q_exact: Optional[float] = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise DomainError(f"unknown variant {self.variant!r}")
        if not isinstance(self.n, int) or self.n < 2:
            raise DomainError("n must be an integer >= 2")
        if self.sizes is not None:
            object.__setattr__(self, "sizes", tuple(int(k) for k in self.sizes))

        needs_b = self.variant != "Censored"
        if self.a is None:
            raise DomainError("a is required")
        if needs_b:
            if self.b is None:
                raise DomainError(f"b is required for {self.variant}")
            if not (self.a > self.b > 0):
                raise DomainError("need a > b > 0")
        elif not self.a > 0:
            raise DomainError("need a > 0")

        if self.p_exact is None and not self.a * math.log(self.n) / self.n <= 1.0:
            raise DomainError("a log(n)/n exceeds 1; not a probability")
        if needs_b and self.q_exact is None and not self.b * math.log(self.n) / self.n <= 1.0:
            raise DomainError("b log(n)/n exceeds 1; not a probability")
        for name in ("p_exact", "q_exact"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1]")

        if self.variant == "BinaryAsym":
            if self.rho is None or not 0.0 <= self.rho <= 0.5:
                raise DomainError("BinaryAsym needs rho in [0, 1/2]")
        elif self.variant == "MultiEqual":
            if self.r is None or self.r < 2:
                raise DomainError("MultiEqual needs r >= 2")
            if self.n % self.r != 0:
                raise DomainError("MultiEqual needs n divisible by r")
        elif self.variant == "GeneralOutliers":
            if not self.sizes:
                raise DomainError("GeneralOutliers needs a nonempty sizes list")
            if any(k < 1 for k in self.sizes):
                raise DomainError("cluster sizes must be >= 1")
            if list(self.sizes) != sorted(self.sizes, reverse=True):
                raise DomainError("sizes must be sorted in decreasing order")
            if sum(self.sizes) > self.n:
                raise DomainError("cluster sizes exceed n")
        elif self.variant == "Censored":
            if self.epsilon is None or not 0.0 <= self.epsilon <= 0.5:
                raise DomainError("Censored needs epsilon in [0, 1/2]")

    @property
    def p(self) -> float:
        """In-cluster edge probability."""
        if self.p_exact is not None:
            return self.p_exact
        return self.a * math.log(self.n) / self.n

    @property
    def q(self) -> float:
        """Cross-cluster edge probability (unused for Censored)."""
        if self.q_exact is not None:
            return self.q_exact
        if self.b is None:
            raise DomainError("q is undefined for this variant")
        return self.b * math.log(self.n) / self.n

    @property
    def num_clusters(self) -> int:
        if self.variant == "MultiEqual":
            return self.r
        if self.variant == "GeneralOutliers":
            return len(self.sizes)
        return 2

    def cluster_sizes(self) -> list[int]:
        """Planted cluster sizes K_1, ..., K_r (outliers excluded)."""
        if self.variant == "BinaryAsym":
            k = math.ceil(self.rho * self.n)
            return [k, self.n - k]
        if self.variant == "MultiEqual":
            return [self.n // self.r] * self.r
        if self.variant == "GeneralOutliers":
            return list(self.sizes)
        k = math.ceil(self.n / 2)  # Censored: balanced planting
        return [k, self.n - k]

    def to_json(self) -> str:
        d = {"n": self.n, "variant": self.variant}
        for name in ("a", "b", "rho", "r", "epsilon", "p_exact", "q_exact"):
            v = getattr(self, name)
            if v is not None:
                d[name] = v
        if self.sizes is not None:
            d["sizes"] = list(self.sizes)
        return json.dumps(d)

    @classmethod
    def from_json(cls, text: str) -> "ModelSpec":
        d = json.loads(text)
        if "sizes" in d:
            d["sizes"] = tuple(d["sizes"])
        return cls(**d)


@dataclass(frozen=True)
class Partition:
    """Per-vertex cluster labels in {0, ..., r} where 0 marks an outlier."""

    labels: np.ndarray
    r: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "labels", labels)
        if labels.ndim != 1:
            raise DomainError("labels must be a vector")
        if labels.min(initial=0) < 0 or labels.max(initial=0) > self.r:
            raise DomainError("labels must lie in {0, ..., r}")

    @property
    def n(self) -> int:
        return self.labels.shape[0]

    @property
    def has_outliers(self) -> bool:
        return bool((self.labels == OUTLIER).any())

    def cluster(self, k: int) -> np.ndarray:
        """Indices of the vertices carrying label k."""
        return np.nonzero(self.labels == k)[0]

    def sizes(self) -> list[int]:
        return [int((self.labels == k).sum()) for k in range(1, self.r + 1)]

    def signs(self) -> np.ndarray:
        """The +/-1 encoding; defined only for two clusters without outliers."""
        if self.r != 2 or self.has_outliers:
            raise DomainError("sign encoding needs exactly two clusters, no outliers")
        return np.where(self.labels == 1, 1.0, -1.0)

    def indicators(self) -> np.ndarray:
        """n x r matrix whose k-th column is the indicator of cluster k+1."""
        xi = np.zeros((self.n, self.r))
        for k in range(1, self.r + 1):
            xi[self.labels == k, k - 1] = 1.0
        return xi


@dataclass(frozen=True)
class Graph:
    """Dense symmetric adjacency matrix with zero diagonal.

    ``alphabet`` is "01" for plain adjacency and "pm1" for label-weighted
    censored entries.
    """

    entries: np.ndarray
    alphabet: str

    def __post_init__(self):
        ent = np.asarray(self.entries, dtype=np.int8)
        object.__setattr__(self, "entries", ent)
        if self.alphabet not in ("01", "pm1"):
            raise DomainError("alphabet must be '01' or 'pm1'")
        if ent.ndim != 2 or ent.shape[0] != ent.shape[1]:
            raise DomainError("entries must be a square matrix")
        if (ent != ent.T).any():
            raise DomainError("entries must be symmetric")
        if np.diagonal(ent).any():
            raise DomainError("diagonal must be zero")
        lo = 0 if self.alphabet == "01" else -1
        if ent.min(initial=0) < lo or ent.max(initial=0) > 1:
            raise DomainError(f"entries outside alphabet {self.alphabet}")

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def dense(self) -> np.ndarray:
        """Entries as a float64 matrix."""
        return self.entries.astype(np.float64)


@dataclass(frozen=True)
class ClusterMatrix:
    """Matrix encoding of a partition: Ybinary (sigma sigma^T) or Zmulti."""

    values: np.ndarray
    encoding: str

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", vals)
        if self.encoding not in ("Ybinary", "Zmulti"):
            raise DomainError("encoding must be 'Ybinary' or 'Zmulti'")
        if vals.ndim != 2 or vals.shape[0] != vals.shape[1]:
            raise DomainError("cluster matrix must be square")


def planted_partition(spec: ModelSpec) -> Partition:
    """Deterministic contiguous planting: first K_1 vertices form cluster 1, etc."""
    labels = np.full(spec.n, OUTLIER, dtype=np.int64)
    start = 0
    sizes = spec.cluster_sizes()
    for k, size in enumerate(sizes, start=1):
        labels[start:start + size] = k
        start += size
    return Partition(labels=labels, r=len(sizes))


def generate(spec: ModelSpec, seed: int, shuffle: bool = False) -> tuple[Partition, Graph]:
    """Draw a planted partition and a graph from the model.

    The planted layout is contiguous unless ``shuffle`` is set, in which case
    a seeded permutation of the vertex labels is applied before sampling.
    Upper-triangle entries are sampled independently; the result is
    bit-identical for identical (spec, seed, shuffle) inputs.
    """
    rng = _rng(seed)
    n = spec.n
    part = planted_partition(spec)
    labels = part.labels
    if shuffle:
        labels = labels[rng.permutation(n)]
        part = Partition(labels=labels, r=part.r)

    if spec.variant == "Censored":
        sigma = part.signs()
        p = spec.p
        edges = rng.random((n, n)) < p
        flips = rng.random((n, n)) < spec.epsilon
        signs = np.sign(np.outer(sigma, sigma)).astype(np.int8)
        vals = np.where(flips, -signs, signs)
        ent = np.where(edges, vals, 0).astype(np.int8)
        ent = np.triu(ent, 1)
        ent = ent + ent.T
        return part, Graph(entries=ent, alphabet="pm1")

    same = (labels[:, None] == labels[None, :]) & (labels[:, None] != OUTLIER)
    prob = np.where(same, spec.p, spec.q)
    ent = (rng.random((n, n)) < prob).astype(np.int8)
    ent = np.triu(ent, 1)
    ent = ent + ent.T
    return part, Graph(entries=ent, alphabet="01")


def partition_to_matrix(part: Partition, encoding: str) -> ClusterMatrix:
    """Exact cluster matrix of a partition.

    Ybinary requires two clusters and no outliers; Zmulti zeroes the rows and
    columns of outlier vertices.
    """
    if encoding == "Ybinary":
        sigma = part.signs()
        return ClusterMatrix(values=np.outer(sigma, sigma), encoding="Ybinary")
    if encoding == "Zmulti":
        lab = part.labels
        same = (lab[:, None] == lab[None, :]) & (lab[:, None] != OUTLIER)
        return ClusterMatrix(values=same.astype(np.float64), encoding="Zmulti")
    raise DomainError(f"unknown encoding {encoding!r}")


def z_from_y(y: ClusterMatrix, r: int) -> ClusterMatrix:
    """Entrywise change of encoding Z = ((r-1) Y + J) / r."""
    vals = ((r - 1) * y.values + 1.0) / r
    return ClusterMatrix(values=vals, encoding="Zmulti")


def exact_match(est: Partition, truth: Partition) -> bool:
    """True iff some permutation of cluster indices makes the labelings equal.

    The outlier label 0 is fixed and never permuted.
    """
    if est.n != truth.n:
        raise DomainError("partitions must have the same number of vertices")
    a, b = est.labels, truth.labels
    if ((a == OUTLIER) != (b == OUTLIER)).any():
        return False
    fwd: dict[int, int] = {}
    back: dict[int, int] = {}
    for x, y in zip(a.tolist(), b.tolist()):
        if x == OUTLIER:
            continue
        if fwd.setdefault(x, y) != y or back.setdefault(y, x) != x:
            return False
    return True


# ---------------------------------------------------------------------------
# File formats: graphs, partitions, model specs
# ---------------------------------------------------------------------------

def write_graph(graph: Graph, path) -> None:
    """Header 'n=<int> alphabet=<01|pm1>', then one 'i j v' line per nonzero
    upper-triangle entry (0-indexed)."""
    ent = graph.entries
    i, j = np.nonzero(np.triu(ent, 1))
    with open(path, "w") as fh:
        fh.write(f"n={graph.n} alphabet={graph.alphabet}\n")
        for ii, jj in zip(i.tolist(), j.tolist()):
            fh.write(f"{ii} {jj} {int(ent[ii, jj])}\n")


def read_graph(path) -> Graph:
    with open(path) as fh:
        header = fh.readline().split()
        fields = dict(tok.split("=", 1) for tok in header)
        n = int(fields["n"])
        alphabet = fields["alphabet"]
        ent = np.zeros((n, n), dtype=np.int8)
        for line in fh:
            if not line.strip():
                continue
            i, j, v = line.split()
            ent[int(i), int(j)] = int(v)
    ent = np.triu(ent, 1)
    ent = ent + ent.T
    return Graph(entries=ent, alphabet=alphabet)


def write_partition(part: Partition, path) -> None:
    with open(path, "w") as fh:
        for lab in part.labels.tolist():
            fh.write(f"{lab}\n")


def read_partition(path, r: Optional[int] = None) -> Partition:
    with open(path) as fh:
        labels = np.array([int(line) for line in fh if line.strip()], dtype=np.int64)
    if r is None:
        r = int(labels.max(initial=1))
    return Partition(labels=labels, r=r)
