"""Logarithmic negativity of Gaussian states."""

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import PartitionError
from .gaussian import GaussianState, symplectic_eigenvalues

__all__ = [
    "Bipartition",
    "PartitionMap",
    "partial_transpose",
    "log_negativity",
    "all_bipartitions",
    "all_bipartitions_negativity",
    "pairwise_negativity",
    "first_lobe_peak",
    "MAX_MODES_FOR_ALL_PARTITIONS",
]

MAX_MODES_FOR_ALL_PARTITIONS = 12


@dataclass(frozen=True)
class Bipartition:
    """Split of ``n`` modes into ``party_a`` (zero-based indices) and the rest."""

    party_a: frozenset
    n: int

    def __post_init__(self):
        a = frozenset(int(i) for i in self.party_a)
        if not a or len(a) >= self.n or min(a) < 0 or max(a) >= self.n:
            raise PartitionError(
                f"party {sorted(a)} is not a non-empty proper subset of {self.n} modes"
            )
        object.__setattr__(self, "party_a", a)

    @property
    def party_b(self):
        return frozenset(range(self.n)) - self.party_a

    def label(self):
        """Label with one-based ion numbers, e.g. ``1|234`` (comma separated from 10 modes on)."""
        sep = "," if self.n >= 10 else ""
        a = sep.join(str(i + 1) for i in sorted(self.party_a))
        b = sep.join(str(i + 1) for i in sorted(self.party_b))
        return f"{a}|{b}"

    def canonical(self):
        """The same split with mode 0 always in party A."""
        if 0 in self.party_a:
            return self
        return Bipartition(self.party_b, self.n)


def _as_partition(partition, n):
    if isinstance(partition, Bipartition):
        if partition.n != n:
            raise PartitionError(f"partition is for {partition.n} modes, state has {n}")
        return partition
    return Bipartition(frozenset(partition), n)


def partial_transpose(cm, partition):
    """Partial transpose on the covariance matrix: flip the momenta of party B."""
    cm = np.asarray(cm, dtype=float)
    n = cm.shape[0] // 2
    part = _as_partition(partition, n)
    d = np.ones(2 * n)
    for j in part.party_b:
        d[n + j] = -1.0
    return d[:, None] * cm * d[None, :]


def log_negativity(state, partition):
    """Logarithmic negativity in ebits, ``sum max(0, -log2(2 nu))`` over the
    symplectic spectrum ``nu`` of the partially transposed covariance matrix."""
    cm = state.cm if isinstance(state, GaussianState) else np.asarray(state)
    nu = symplectic_eigenvalues(partial_transpose(cm, partition))
    return float(np.sum(np.maximum(0.0, -np.log2(2.0 * nu))))


def all_bipartitions(n):
    """Every distinct bipartition of ``n`` modes, mode 0 kept in party A."""
    out = []
    for size in range(1, n):
        for rest in itertools.combinations(range(1, n), size - 1):
            out.append(Bipartition(frozenset((0,) + rest), n))
    return out


@dataclass(frozen=True)
class PartitionMap:
    """Negativity of every bipartition, plus the complete-inseparability flag."""

    values: dict
    threshold: float

    @property
    def completely_inseparable(self):
        return all(v > self.threshold for v in self.values.values())

    def by_label(self):
        return {p.label(): v for p, v in self.values.items()}


def all_bipartitions_negativity(state, threshold=1e-9):
    """Negativity for all ``2**(n-1) - 1`` bipartitions.

    Raises
    ------
    PartitionError
        For more than ``MAX_MODES_FOR_ALL_PARTITIONS`` modes; list the
        partitions of interest explicitly and call :func:`log_negativity`.
    """
    n = state.n
    if n < 2:
        raise PartitionError("a single mode has no bipartitions")
    if n > MAX_MODES_FOR_ALL_PARTITIONS:
        raise PartitionError(
            f"{n} modes give {2 ** (n - 1) - 1} bipartitions; pass an explicit partition list instead"
        )
    return PartitionMap({p: log_negativity(state, p) for p in all_bipartitions(n)}, threshold)


def pairwise_negativity(state):
    """Symmetric matrix of the negativity between each pair of modes."""
    n = state.n
    out = np.zeros((n, n))
    for j, k in itertools.combinations(range(n), 2):
        out[j, k] = out[k, j] = log_negativity(state.reduced([j, k]), [0])
    return out


def first_lobe_peak(times, values, threshold=0.1):
    """Time of the maximum within the first stretch where ``values`` exceed ``threshold``.

    Returns ``nan`` if the values never exceed the threshold.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    above = np.flatnonzero(values > threshold)
    if above.size == 0:
        return float("nan")
    start = above[0]
    stop = start
    while stop + 1 < values.size and values[stop + 1] > threshold:
        stop += 1
    return float(times[start + int(np.argmax(values[start:stop + 1]))])
