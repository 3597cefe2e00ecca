"""Per-object embedding tables and the PCA reduction used on small domains.

File format (shared with the extractor tool):

    #dim=<D>	encoder=<name>[	key=value ...]
    <object>	v1 v2 ... vD

Header fields are tab-separated ``key=value`` pairs; ``dim`` and ``encoder``
are required, extra fields (e.g. ``pooling=``) are kept as metadata.
Vector components are whitespace-separated decimal floats that round-trip
at full precision.
"""

from dataclasses import dataclass, field
from typing import Dict

import numpy as np


@dataclass
class EmbeddingTable:
    encoder_name: str
    dim: int
    entries: Dict[str, np.ndarray]
    metadata: dict = field(default_factory=dict)

    def __contains__(self, obj: str) -> bool:
        return obj in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def vector(self, obj: str) -> np.ndarray:
        return self.entries[obj]

    def matrix(self, objects) -> np.ndarray:
        """Stack vectors for the given objects into an n×dim matrix."""
        return np.stack([self.entries[o] for o in objects])


@dataclass
class PcaProjection:
    mean: np.ndarray
    components: np.ndarray  # k × dim, orthonormal rows
    k: int

    def as_dict(self) -> dict:
        return {
            "mean": [float(v) for v in self.mean],
            "components": [[float(v) for v in row] for row in self.components],
            "k": self.k,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PcaProjection":
        return cls(
            mean=np.array(d["mean"], dtype=np.float64),
            components=np.array(d["components"], dtype=np.float64),
            k=int(d["k"]),
        )


def _parse_header(line: str, path) -> tuple[int, str, dict]:
    if not line.startswith("#"):
        raise ValueError(f"{path}:1: missing '#dim=...' header line")
    fields = {}
    for part in line[1:].split("\t"):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ValueError(f"{path}:1: bad header field {part!r}")
        key, _, val = part.partition("=")
        fields[key] = val
    if "dim" not in fields or "encoder" not in fields:
        raise ValueError(f"{path}:1: header must declare dim= and encoder=")
    try:
        dim = int(fields.pop("dim"))
    except ValueError:
        raise ValueError(f"{path}:1: dim is not an integer") from None
    if dim < 1:
        raise ValueError(f"{path}:1: dim must be >= 1, got {dim}")
    return dim, fields.pop("encoder"), fields


def load_table(path) -> EmbeddingTable:
    """Load and validate an embedding table.

    Errors (bad header, wrong vector length, non-finite component,
    duplicate object) name the offending line.
    """
    entries: Dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        dim, encoder_name, metadata = _parse_header(header, path)
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            obj, tab, rest = line.partition("\t")
            if not tab:
                raise ValueError(f"{path}:{lineno}: expected 'object<TAB>floats'")
            if obj in entries:
                raise ValueError(f"{path}:{lineno}: duplicate object {obj!r}")
            parts = rest.split()
            if len(parts) != dim:
                raise ValueError(
                    f"{path}:{lineno}: expected {dim} components, got {len(parts)}"
                )
            try:
                vec = np.array([float(p) for p in parts], dtype=np.float64)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            if not np.all(np.isfinite(vec)):
                raise ValueError(f"{path}:{lineno}: non-finite component")
            entries[obj] = vec
    return EmbeddingTable(encoder_name=encoder_name, dim=dim, entries=entries,
                          metadata=metadata)


def save_table(table: EmbeddingTable, path) -> None:
    """Inverse of load_table; components written with repr precision."""
    with open(path, "w", encoding="utf-8") as fh:
        extra = "".join(f"\t{k}={v}" for k, v in table.metadata.items())
        fh.write(f"#dim={table.dim}\tencoder={table.encoder_name}{extra}\n")
        for obj, vec in table.entries.items():
            comps = " ".join(repr(float(v)) for v in vec)
            fh.write(f"{obj}\t{comps}\n")


def fit_pca(X: np.ndarray, k: int = 150) -> PcaProjection:
    """Top-k principal directions of the rows of X.

    Deterministic: components are ordered by decreasing singular value and
    signed so that each row's largest-magnitude entry is positive.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be a 2-D matrix")
    n, dim = X.shape
    if n < 2:
        raise ValueError(f"PCA needs at least 2 rows, got {n}")
    if not 1 <= k <= min(n - 1, dim):
        raise ValueError(f"k must be in [1, min(n-1, dim)] = [1, {min(n - 1, dim)}], got {k}")
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains non-finite values")

    mean = X.mean(axis=0)
    Xc = X - mean
    _, s, vt = np.linalg.svd(Xc, full_matrices=False)
    # effective rank under the usual numerical tolerance
    tol = max(n, dim) * np.finfo(np.float64).eps * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol))
    if rank < k:
        raise ValueError(f"data has rank {rank} < k={k} (identical or collinear rows)")
    components = vt[:k].copy()
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return PcaProjection(mean=mean, components=components, k=k)


def apply_pca(proj: PcaProjection, x: np.ndarray) -> np.ndarray:
    """Project a vector (or row-matrix) onto the fitted components."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != proj.mean.shape[0]:
        raise ValueError(
            f"vector length {x.shape[-1]} does not match PCA dim {proj.mean.shape[0]}"
        )
    return (x - proj.mean) @ proj.components.T
