"""QUBO instances: weighted-stochastic-block-model generation and file I/O.

An instance holds a sparse symmetric coefficient matrix V as a map
``(i, j) -> value`` with ``i <= j`` stored once (``V[j, i]`` is implied),
an optional linear return vector, and optional per-variable block labels.

File format (one JSON document, UTF-8)::

    {
      "num_vars": 50,
      "entries": [[i, j, value], ...],      # sorted by (i, j), i <= j, no dups
      "linear": [r_0, ..., r_{n-1}],        # optional
      "block_labels": [0, 0, ..., 4],       # optional
      "metadata": {"key": "value", ...}     # strings only
    }

Values are serialized with Python's shortest round-trip ``repr``, so
``load(save(x)) == x`` holds bit-exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np


class InstanceFormatError(ValueError):
    """Raised when an instance file violates the documented format."""


# ---------------------------------------------------------------------------
# Weight distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Normal:
    mean: float
    std: float

    def __post_init__(self):
        if self.std < 0:
            raise ValueError(f"Normal std must be >= 0, got {self.std}")

    def sample(self, rng: np.random.Generator) -> float:
        return float(rng.normal(self.mean, self.std))

    def dist_mean(self) -> float:
        return self.mean

    def dist_std(self) -> float:
        return self.std


@dataclass(frozen=True)
class Exponential:
    rate: float

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError(f"Exponential rate must be > 0, got {self.rate}")

    def sample(self, rng: np.random.Generator) -> float:
        return float(rng.exponential(1.0 / self.rate))

    def dist_mean(self) -> float:
        return 1.0 / self.rate

    def dist_std(self) -> float:
        return 1.0 / self.rate


@dataclass(frozen=True)
class Uniform:
    low: float
    high: float

    def __post_init__(self):
        if self.low > self.high:
            raise ValueError(f"Uniform requires low <= high, got [{self.low}, {self.high}]")

    def sample(self, rng: np.random.Generator) -> float:
        return float(rng.uniform(self.low, self.high))

    def dist_mean(self) -> float:
        return 0.5 * (self.low + self.high)

    def dist_std(self) -> float:
        return (self.high - self.low) / math.sqrt(12.0)


@dataclass(frozen=True)
class Constant:
    value: float

    def sample(self, rng: np.random.Generator) -> float:
        # Consumes no randomness.
        return float(self.value)

    def dist_mean(self) -> float:
        return self.value

    def dist_std(self) -> float:
        return 0.0


WeightDistribution = Normal | Exponential | Uniform | Constant

_DIST_PARSERS = {
    "norm": (Normal, 2),
    "exp": (Exponential, 1),
    "unif": (Uniform, 2),
    "const": (Constant, 1),
}


def parse_weight_dist(text: str) -> WeightDistribution:
    """Parse a CLI distribution spec: norm:M,S | exp:RATE | unif:LO,HI | const:V."""
    kind, _, params = text.partition(":")
    if kind not in _DIST_PARSERS:
        raise ValueError(f"unknown distribution {kind!r} in {text!r} "
                         f"(expected one of {sorted(_DIST_PARSERS)})")
    cls, arity = _DIST_PARSERS[kind]
    parts = params.split(",") if params else []
    if len(parts) != arity:
        raise ValueError(f"{kind} takes {arity} parameter(s), got {text!r}")
    try:
        args = [float(p) for p in parts]
    except ValueError as exc:
        raise ValueError(f"bad numeric parameter in {text!r}: {exc}") from None
    return cls(*args)


# ---------------------------------------------------------------------------
# Instance and generator spec
# ---------------------------------------------------------------------------


@dataclass
class QuboInstance:
    """Sparse symmetric QUBO coefficient matrix plus optional extras.

    ``matrix`` maps ``(i, j)`` with ``i <= j`` to the coefficient ``V_ij``;
    the quadratic form is ``x^T V x`` with ``V_ji = V_ij`` implied.
    Instances are treated as immutable after construction.
    """

    num_vars: int
    matrix: dict[tuple[int, int], float]
    linear: tuple[float, ...] | None = None
    block_labels: tuple[int, ...] | None = None
    metadata: dict[str, str] = field(default_factory=dict)

    def to_dense(self) -> np.ndarray:
        """Full symmetric matrix, mostly for small-n oracles."""
        v = np.zeros((self.num_vars, self.num_vars))
        for (i, j), val in self.matrix.items():
            v[i, j] = val
            v[j, i] = val
        return v

    def linear_array(self) -> np.ndarray | None:
        return None if self.linear is None else np.asarray(self.linear, dtype=float)

    def num_blocks(self) -> int:
        """Number of distinct block labels (1 when unlabeled)."""
        if not self.block_labels:
            return 1
        return len(set(self.block_labels))


@dataclass(frozen=True)
class WsbmSpec:
    """Block-model generator parameters.

    ``block_sizes`` gives the node count per block; ``connectivity[a][b]`` is
    the edge probability between blocks a and b; ``weights[a][b]`` the weight
    distribution of edges that exist.  Both matrices must be symmetric.
    """

    block_sizes: tuple[int, ...]
    connectivity: tuple[tuple[float, ...], ...]
    weights: tuple[tuple[WeightDistribution, ...], ...]

    @property
    def num_blocks(self) -> int:
        return len(self.block_sizes)

    def validate(self) -> None:
        n_b = self.num_blocks
        if n_b == 0:
            raise ValueError("block_sizes must be non-empty")
        if any(s <= 0 for s in self.block_sizes):
            raise ValueError(f"block sizes must be positive, got {self.block_sizes}")
        for name, m in (("connectivity", self.connectivity), ("weights", self.weights)):
            if len(m) != n_b or any(len(row) != n_b for row in m):
                raise ValueError(f"{name} must be {n_b}x{n_b}")
        for a in range(n_b):
            for b in range(n_b):
                p = self.connectivity[a][b]
                if not 0.0 <= p <= 1.0:
                    raise ValueError(f"connectivity[{a}][{b}]={p} outside [0, 1]")
                if self.connectivity[a][b] != self.connectivity[b][a]:
                    raise ValueError("connectivity matrix must be symmetric")
                if self.weights[a][b] != self.weights[b][a]:
                    raise ValueError("weight matrix must be symmetric")


def make_wsbm_spec(block_sizes, connectivity, weights) -> WsbmSpec:
    """Build a validated spec from list/array-like arguments."""
    spec = WsbmSpec(
        block_sizes=tuple(int(s) for s in block_sizes),
        connectivity=tuple(tuple(float(p) for p in row) for row in connectivity),
        weights=tuple(tuple(row) for row in weights),
    )
    spec.validate()
    return spec


def generate_wsbm(spec: WsbmSpec, seed: int) -> QuboInstance:
    """Draw a QUBO instance from the block model, reproducibly.

    The PCG64 stream seeded with ``seed`` is consumed in row-major (i, then j)
    order: at (i, i) the diagonal weight is always drawn from the block's own
    distribution; at (i, j) with j > i one uniform decides edge existence
    against P[a][b] and, if the edge exists, one weight is drawn from W[a][b].
    Exactly-zero weights are dropped from storage.
    """
    spec.validate()
    rng = np.random.Generator(np.random.PCG64(seed))

    labels: list[int] = []
    for block, size in enumerate(spec.block_sizes):
        labels.extend([block] * size)
    n = len(labels)

    matrix: dict[tuple[int, int], float] = {}
    for i in range(n):
        a = labels[i]
        for j in range(i, n):
            b = labels[j]
            if i == j:
                w = spec.weights[a][a].sample(rng)
            else:
                if rng.random() >= spec.connectivity[a][b]:
                    continue
                w = spec.weights[a][b].sample(rng)
            if w != 0.0:
                matrix[(i, j)] = w

    meta = {
        "generator": "wsbm",
        "seed": str(seed),
        "block_sizes": ",".join(str(s) for s in spec.block_sizes),
    }
    return QuboInstance(num_vars=n, matrix=matrix,
                        block_labels=tuple(labels), metadata=meta)


def validate(instance: QuboInstance) -> list[str]:
    """Check instance invariants; returns one message per violation."""
    violations: list[str] = []
    if instance.num_vars <= 0:
        violations.append(f"num_vars must be positive, got {instance.num_vars}")
    for (i, j), val in instance.matrix.items():
        if i > j:
            violations.append(f"entry ({i}, {j}) has i > j")
        if j >= instance.num_vars or i < 0:
            violations.append(f"entry ({i}, {j}) out of range for {instance.num_vars} vars")
        if val == 0.0:
            violations.append(f"entry ({i}, {j}) stores an explicit zero")
        if not math.isfinite(val):
            violations.append(f"entry ({i}, {j}) is not finite")
    if instance.linear is not None and len(instance.linear) != instance.num_vars:
        violations.append(
            f"linear has length {len(instance.linear)}, expected {instance.num_vars}")
    if instance.block_labels is not None and len(instance.block_labels) != instance.num_vars:
        violations.append(
            f"block_labels has length {len(instance.block_labels)}, "
            f"expected {instance.num_vars}")
    return violations


# ---------------------------------------------------------------------------
# File I/O
# ---------------------------------------------------------------------------


def save(instance: QuboInstance, path) -> None:
    problems = validate(instance)
    if problems:
        raise ValueError("refusing to save invalid instance: " + "; ".join(problems))
    doc: dict = {
        "num_vars": instance.num_vars,
        "entries": [[i, j, val] for (i, j), val in sorted(instance.matrix.items())],
    }
    if instance.linear is not None:
        doc["linear"] = list(instance.linear)
    if instance.block_labels is not None:
        doc["block_labels"] = list(instance.block_labels)
    doc["metadata"] = dict(sorted(instance.metadata.items()))
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load(path) -> QuboInstance:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceFormatError(
                f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: "
                f"{exc.msg}") from None
    if not isinstance(doc, dict):
        raise InstanceFormatError(f"{path}: top level must be a JSON object")

    num_vars = doc.get("num_vars")
    if not isinstance(num_vars, int) or num_vars <= 0:
        raise InstanceFormatError(f"{path}: field 'num_vars' must be a positive integer")

    entries = doc.get("entries")
    if not isinstance(entries, list):
        raise InstanceFormatError(f"{path}: field 'entries' must be a list")
    matrix: dict[tuple[int, int], float] = {}
    prev: tuple[int, int] | None = None
    for k, entry in enumerate(entries):
        if (not isinstance(entry, list) or len(entry) != 3
                or not isinstance(entry[0], int) or not isinstance(entry[1], int)
                or isinstance(entry[2], bool)
                or not isinstance(entry[2], (int, float))):
            raise InstanceFormatError(
                f"{path}: entries[{k}] must be [int i, int j, number]")
        i, j, val = entry[0], entry[1], float(entry[2])
        if not 0 <= i <= j < num_vars:
            raise InstanceFormatError(
                f"{path}: entries[{k}] = ({i}, {j}) violates 0 <= i <= j < {num_vars}")
        if (i, j) in matrix:
            raise InstanceFormatError(f"{path}: duplicate entry ({i}, {j}) at entries[{k}]")
        if prev is not None and (i, j) <= prev:
            raise InstanceFormatError(
                f"{path}: entries[{k}] = ({i}, {j}) out of (i, j) sort order")
        if val == 0.0:
            raise InstanceFormatError(f"{path}: entries[{k}] stores an explicit zero")
        matrix[(i, j)] = val
        prev = (i, j)

    linear = doc.get("linear")
    if linear is not None:
        if (not isinstance(linear, list) or len(linear) != num_vars
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                           for v in linear)):
            raise InstanceFormatError(
                f"{path}: field 'linear' must be a list of {num_vars} numbers")
        linear = tuple(float(v) for v in linear)

    block_labels = doc.get("block_labels")
    if block_labels is not None:
        if (not isinstance(block_labels, list) or len(block_labels) != num_vars
                or not all(isinstance(v, int) and not isinstance(v, bool)
                           for v in block_labels)):
            raise InstanceFormatError(
                f"{path}: field 'block_labels' must be a list of {num_vars} integers")
        block_labels = tuple(block_labels)

    metadata = doc.get("metadata", {})
    if (not isinstance(metadata, dict)
            or not all(isinstance(k, str) and isinstance(v, str)
                       for k, v in metadata.items())):
        raise InstanceFormatError(f"{path}: field 'metadata' must map strings to strings")

    return QuboInstance(num_vars=num_vars, matrix=matrix, linear=linear,
                        block_labels=block_labels, metadata=dict(metadata))
