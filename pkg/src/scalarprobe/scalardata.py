"""Scalar observations, logarithmic bucketing and empirical distributions.

Objects come with repeated (value, count) observations of an attribute
(MASS in grams, LENGTH in meters, PRICE in US dollars).  Values are mapped
onto a small grid of logarithmically spaced buckets; the normalized counts
per bucket form the target distribution for probing.
"""

import json
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)

ATTRIBUTES = ("MASS", "LENGTH", "PRICE")


@dataclass(frozen=True)
class BucketScheme:
    """Logarithmic bucket grid: labels min_exp .. min_exp+count-1, bucket b
    covering values near base**b."""

    base: int
    min_exp: int
    count: int

    def __post_init__(self):
        if self.base < 2:
            raise ValueError(f"bucket base must be >= 2, got {self.base}")
        if self.count < 1:
            raise ValueError(f"bucket count must be >= 1, got {self.count}")

    @property
    def max_label(self) -> int:
        return self.min_exp + self.count - 1

    def labels(self) -> np.ndarray:
        return np.arange(self.min_exp, self.min_exp + self.count)

    def as_dict(self) -> dict:
        return {"base": self.base, "min_exp": self.min_exp, "count": self.count}

    @classmethod
    def from_dict(cls, d: dict) -> "BucketScheme":
        return cls(base=int(d["base"]), min_exp=int(d["min_exp"]), count=int(d["count"]))


# Default grid for the decimal scales: 10^-2 .. 10^9.
BASE10_SCHEME = BucketScheme(base=10, min_exp=-2, count=12)
# Finer grid used for the price transfer experiment: 4^-2 .. 4^9.
BASE4_SCHEME = BucketScheme(base=4, min_exp=-2, count=12)


@dataclass(frozen=True)
class ScalarRecord:
    object: str
    attribute: str
    value: float
    count: int


@dataclass(frozen=True)
class ModalityLabel:
    n_peaks: int

    @property
    def label(self) -> str:
        return "unimodal" if self.n_peaks == 1 else "multimodal"

    @property
    def multimodal(self) -> bool:
        return self.n_peaks > 1


@dataclass(eq=False)
class EmpiricalDistribution:
    """Normalized per-bucket histogram of one object's attribute values."""

    scheme: BucketScheme
    probs: np.ndarray
    total_count: int
    object: str = ""
    attribute: str = ""
    n_peaks: Optional[int] = None

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=np.float64)
        if self.probs.shape != (self.scheme.count,):
            raise ValueError(
                f"probs must have length {self.scheme.count}, got shape {self.probs.shape}"
            )
        if not np.all(np.isfinite(self.probs)) or np.any(self.probs < 0):
            raise ValueError("probs must be finite and non-negative")
        if abs(float(self.probs.sum()) - 1.0) > 1e-9:
            raise ValueError(f"probs must sum to 1, got {self.probs.sum()!r}")
        if self.total_count < 1:
            raise ValueError("total_count must be >= 1")

    @classmethod
    def point_mass(cls, scheme: BucketScheme, label: int, **kw) -> "EmpiricalDistribution":
        probs = np.zeros(scheme.count)
        probs[label - scheme.min_exp] = 1.0
        return cls(scheme=scheme, probs=probs, total_count=kw.pop("total_count", 1), **kw)

    def to_dict(self) -> dict:
        return {
            "object": self.object,
            "attribute": self.attribute,
            "scheme": self.scheme.as_dict(),
            "probs": [float(p) for p in self.probs],
            "total_count": int(self.total_count),
            "n_peaks": self.n_peaks,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EmpiricalDistribution":
        return cls(
            scheme=BucketScheme.from_dict(d["scheme"]),
            probs=np.array(d["probs"], dtype=np.float64),
            total_count=int(d["total_count"]),
            object=d.get("object", ""),
            attribute=d.get("attribute", ""),
            n_peaks=d.get("n_peaks"),
        )


def round_half_away(x: float) -> int:
    """Round to nearest integer, halves away from zero (so 2.5 -> 3, -2.5 -> -3).

    Computed from the fractional part rather than floor(x + 0.5): the
    addition can round x just below a half up to it, misrounding the
    double closest to 0.5 from below.  x - floor(x) is exact for x >= 0
    (Sterbenz), so the comparison is exact.
    """
    if x >= 0:
        f = math.floor(x)
        return f + 1 if x - f >= 0.5 else f
    c = math.ceil(x)
    return c - 1 if c - x >= 0.5 else c


def bucketize(value: float, scheme: BucketScheme) -> int:
    """Bucket label for a positive value: clamp(round(log_base(value)))."""
    if not math.isfinite(value) or value <= 0:
        raise ValueError(f"bucketize requires a positive finite value, got {value!r}")
    raw = round_half_away(math.log10(value) / math.log10(scheme.base))
    return min(max(raw, scheme.min_exp), scheme.max_label)


def build_distribution(
    records: Sequence[ScalarRecord], scheme: BucketScheme
) -> EmpiricalDistribution:
    """Histogram of bucketized values weighted by observation counts.

    Non-positive values are skipped with a warning; the record list must
    belong to a single (object, attribute) pair.
    """
    if not records:
        raise ValueError("cannot build a distribution from zero records")
    keys = {(r.object, r.attribute) for r in records}
    if len(keys) > 1:
        raise ValueError(f"records span multiple object/attribute pairs: {sorted(keys)}")
    obj, attr = next(iter(keys))

    counts = np.zeros(scheme.count)
    total = 0
    skipped = 0
    for r in records:
        if r.count < 1:
            raise ValueError(f"record for {r.object!r} has count {r.count} < 1")
        if not math.isfinite(r.value) or r.value <= 0:
            skipped += 1
            continue
        counts[bucketize(r.value, scheme) - scheme.min_exp] += r.count
        total += r.count
    if skipped:
        logger.warning(
            "dropped %d non-positive value(s) for %s/%s", skipped, obj, attr
        )
    if total == 0:
        raise ValueError(f"no usable records for {obj!r}/{attr!r}")
    return EmpiricalDistribution(
        scheme=scheme,
        probs=counts / total,
        total_count=total,
        object=obj,
        attribute=attr,
    )


def filter_min_count(
    distributions: Iterable[EmpiricalDistribution], min_total: int = 100
) -> list:
    """Keep only objects with total observation count strictly above min_total."""
    return [d for d in distributions if d.total_count > min_total]


def log_median(records: Sequence[ScalarRecord]) -> float:
    """log10 of the count-weighted median value.

    With an even total count the median is the arithmetic mean of the two
    middle values (in value space, before the log).
    """
    if not records:
        raise ValueError("log_median of zero records")
    vals = []
    cnts = []
    for r in records:
        if not math.isfinite(r.value) or r.value <= 0:
            raise ValueError(f"log_median requires positive values, got {r.value!r}")
        if r.count < 1:
            raise ValueError(f"record has count {r.count} < 1")
        vals.append(r.value)
        cnts.append(r.count)
    order = np.argsort(vals, kind="stable")
    vals = np.asarray(vals, dtype=np.float64)[order]
    cnts = np.asarray(cnts, dtype=np.int64)[order]
    cum = np.cumsum(cnts)
    total = int(cum[-1])
    if total % 2 == 1:
        # 0-indexed middle element of the expanded sequence
        mid = np.searchsorted(cum, total // 2, side="right")
        med = vals[mid]
    else:
        lo = np.searchsorted(cum, total // 2 - 1, side="right")
        hi = np.searchsorted(cum, total // 2, side="right")
        med = 0.5 * (vals[lo] + vals[hi])
    return math.log10(float(med))


def smooth_distribution(
    dist: EmpiricalDistribution, bandwidth: float = 0.75, grid_step: float = 0.05
) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian-kernel density over bucket space, one unit per bucket.

    Grid spans [min_exp - 1, max label + 1] inclusive.  Returns (grid,
    density); density is the prob-weighted sum of kernels centered on the
    bucket labels.
    """
    scheme = dist.scheme
    lo = scheme.min_exp - 1.0
    hi = scheme.max_label + 1.0
    n = int(round((hi - lo) / grid_step)) + 1
    xs = lo + grid_step * np.arange(n)
    centers = scheme.labels().astype(np.float64)
    z = (xs[:, None] - centers[None, :]) / bandwidth
    kern = np.exp(-0.5 * z * z) / (bandwidth * math.sqrt(2.0 * math.pi))
    return xs, kern @ dist.probs


def _run_values(ys: np.ndarray) -> list:
    """Collapse exact-tie plateaus to single entries."""
    vals = []
    for y in ys:
        if not vals or y != vals[-1]:
            vals.append(float(y))
    return vals


def _peak_prominence(vals: list, i: int) -> float:
    """Topographic prominence of the local maximum at index i: height above
    the higher of the two lowest points reached before higher terrain (or
    the range end) on each side.

    Exact ties are broken leftward: terrain of equal height blocks the walk
    only from the left, so of two float-identical summits (symmetric inputs
    produce them) only the leftmost earns full prominence."""
    h = vals[i]
    bases = []
    for step in (-1, 1):
        j = i + step
        low = h
        while 0 <= j < len(vals):
            v = vals[j]
            if v > h or (v == h and j < i):
                break
            low = min(low, v)
            j += step
        bases.append(low)
    return h - max(bases)


def count_peaks(ys: np.ndarray, prominence: float = 1e-3) -> int:
    """Number of local maxima of a sampled curve with prominence >= the
    threshold; at least 1 (the global max) even when none qualify."""
    vals = _run_values(ys)
    n = len(vals)
    qualified = 0
    for i in range(n):
        up = i == 0 or vals[i] > vals[i - 1]
        down = i == n - 1 or vals[i] > vals[i + 1]
        if up and down and _peak_prominence(vals, i) >= prominence:
            qualified += 1
    return qualified if qualified else 1


def detect_modality(
    dist: EmpiricalDistribution,
    bandwidth: float = 0.75,
    grid_step: float = 0.05,
    prominence: float = 1e-3,
) -> ModalityLabel:
    """Classify a bucket distribution as unimodal or multimodal by counting
    prominent peaks of its kernel-smoothed density."""
    _, ys = smooth_distribution(dist, bandwidth=bandwidth, grid_step=grid_step)
    return ModalityLabel(n_peaks=count_peaks(ys, prominence=prominence))


def load_scalar_records(path) -> list:
    """Read tab-separated records: object, attribute, value, count per line.

    Raises ValueError naming the first offending line on malformed input.
    """
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise ValueError(
                    f"{path}:{lineno}: expected 4 tab-separated fields, got {len(parts)}"
                )
            obj, attr, val_s, count_s = parts
            if attr not in ATTRIBUTES:
                raise ValueError(
                    f"{path}:{lineno}: unknown attribute {attr!r}, expected one of {ATTRIBUTES}"
                )
            try:
                value = float(val_s)
                count = int(count_s)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            if not math.isfinite(value) or value <= 0:
                logger.warning("%s:%d: skipping non-positive value %r", path, lineno, val_s)
                continue
            if count < 1:
                raise ValueError(f"{path}:{lineno}: count must be >= 1, got {count}")
            records.append(ScalarRecord(object=obj, attribute=attr, value=value, count=count))
    return records


def save_distribution(dist: EmpiricalDistribution, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(dist.to_dict(), fh, indent=2)
        fh.write("\n")


def load_distribution(path) -> EmpiricalDistribution:
    with open(path, encoding="utf-8") as fh:
        return EmpiricalDistribution.from_dict(json.load(fh))
