"""Batch extraction: object names to one embedding table file.

Output is the embedding-table interchange format::

    #dim=<D>	encoder=<name>	pooling=<mode>
    <object>	v1 v2 ... vD

Components are written with repr precision so they round-trip exactly,
and the file is written atomically (temp file then rename) so a crash
never leaves a truncated table at the target path.  The run is
deterministic: same objects, encoder and pooling give a byte-identical
file.
"""

import os
import tempfile
import warnings
from typing import Iterable, List, Optional, Tuple

import numpy as np

from .encoders import POOLING_MODES
from .templates import ATTRIBUTES, TemplateSet, render_template

Rows = List[Tuple[str, np.ndarray]]


def _check_name(obj: str) -> None:
    # names are format-bearing: a tab or newline would corrupt the row
    if not obj or obj != " ".join(obj.split()):
        raise ValueError(
            f"bad object name {obj!r}: must be nonempty, single-spaced text"
        )


def _word_average(obj: str, encoder) -> Optional[np.ndarray]:
    vecs = []
    for word in obj.split():
        vec = encoder.lookup_word(word)
        if vec is not None:
            vecs.append(vec)
    if not vecs:
        return None
    return np.mean(vecs, axis=0)


def _embed(obj: str, attribute: str, encoder, pooling: str,
           templates: Optional[TemplateSet]) -> Optional[np.ndarray]:
    if pooling in ("cls", "final_state"):
        sentence = render_template(obj, attribute, templates)
        return encoder.sentence_vector(sentence, pooling)
    if pooling == "phrase_lookup":
        vec = encoder.lookup_phrase(obj)
        if vec is not None:
            return vec
    return _word_average(obj, encoder)


def extract_vectors(objects: Iterable[str], attribute: str, encoder,
                    pooling: str,
                    templates: Optional[TemplateSet] = None
                    ) -> Tuple[Rows, List[str]]:
    """Embed each object; returns (rows, omitted) with rows in input order.

    word_average skips out-of-vocabulary words and omits, with a warning,
    any object with no in-vocabulary words at all; phrase_lookup falls
    back to word_average when the exact phrase is absent.  Duplicate
    input names are collapsed to their first occurrence.
    """
    if pooling not in POOLING_MODES:
        raise ValueError(
            f"unknown pooling {pooling!r}, expected one of {POOLING_MODES}"
        )
    if attribute not in ATTRIBUTES:
        raise ValueError(
            f"unknown attribute {attribute!r}, expected one of {ATTRIBUTES}"
        )
    objects = list(objects)
    if not objects:
        raise ValueError("no objects to extract")

    seen = set()
    unique = []
    n_dupes = 0
    for obj in objects:
        _check_name(obj)
        if obj in seen:
            n_dupes += 1
            continue
        seen.add(obj)
        unique.append(obj)
    if n_dupes:
        warnings.warn(f"skipped {n_dupes} duplicate object name(s)")

    rows: Rows = []
    omitted: List[str] = []
    for obj in unique:
        vec = _embed(obj, attribute, encoder, pooling, templates)
        if vec is None:
            omitted.append(obj)
        else:
            rows.append((obj, np.asarray(vec, dtype=np.float64)))
    if omitted:
        shown = ", ".join(omitted[:5]) + (", ..." if len(omitted) > 5 else "")
        warnings.warn(
            f"omitted {len(omitted)} object(s) with no in-vocabulary words: {shown}"
        )
    if not rows:
        raise ValueError("empty output: no object produced a vector")
    return rows, omitted


def write_table(path, rows: Rows, dim: int, encoder_name: str,
                pooling: str) -> None:
    """Write extraction rows as an embedding table, atomically."""
    for field in (encoder_name, pooling):
        if "\t" in field or "\n" in field:
            raise ValueError(f"header field {field!r} contains tab or newline")
    lines = [f"#dim={dim}\tencoder={encoder_name}\tpooling={pooling}\n"]
    for obj, vec in rows:
        if len(vec) != dim:
            raise ValueError(
                f"vector for {obj!r} has length {len(vec)}, expected {dim}"
            )
        if not np.all(np.isfinite(vec)):
            raise ValueError(f"vector for {obj!r} has non-finite components")
        comps = " ".join(repr(float(v)) for v in vec)
        lines.append(f"{obj}\t{comps}\n")

    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".emb-", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.writelines(lines)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def extract_to_file(objects: Iterable[str], attribute: str, encoder,
                    pooling: str, out_path,
                    templates: Optional[TemplateSet] = None) -> dict:
    """Full pipeline: embed, write, and return a run summary."""
    rows, omitted = extract_vectors(objects, attribute, encoder, pooling,
                                    templates)
    write_table(out_path, rows, encoder.dim, encoder.name, pooling)
    return {
        "encoder": encoder.name,
        "pooling": pooling,
        "attribute": attribute,
        "dim": encoder.dim,
        "n_written": len(rows),
        "n_omitted": len(omitted),
    }
