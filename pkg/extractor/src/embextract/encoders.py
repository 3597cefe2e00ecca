"""Encoders the extractor can drive.

Real checkpoints are external inputs, never vendored; what ships here is
the loading glue.  ``wordvec:<path>`` reads a word-vector text file, and
``fake:<seed>[:<dim>]`` is a tiny deterministic stand-in with the same
surface, so the whole pipeline is testable without any checkpoint.

Every encoder exposes::

    name                             recorded in the output header
    dim                              vector length
    sentence_vector(sentence, mode)  mode in {"cls", "final_state"}
    lookup_word(word)    -> vector or None
    lookup_phrase(text)  -> vector or None
"""

import hashlib
from pathlib import Path
from typing import Dict, Optional

import numpy as np

POOLING_MODES = ("cls", "final_state", "word_average", "phrase_lookup")

_SENTENCE_MODES = ("cls", "final_state")


class FakeEncoder:
    """Deterministic pseudo-encoder for tests and dry runs.

    Every vector is a pure function of (seed, role, text): the text is
    hashed into an rng seed, so equal inputs give bit-equal vectors in any
    process.  Sentence vectors depend on the whole sentence.  The word
    table is unbounded (no word is ever out of vocabulary) and contains no
    multi-word phrases, which exercises the phrase_lookup fallback.
    """

    def __init__(self, seed: int, dim: int = 32):
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        self.seed = int(seed)
        self.dim = int(dim)
        self.name = f"fake-{self.seed}-{self.dim}d"

    def _vector(self, role: str, text: str) -> np.ndarray:
        key = f"{self.seed}\x1f{role}\x1f{text}".encode("utf-8")
        digest = hashlib.sha256(key).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
        return rng.standard_normal(self.dim)

    def sentence_vector(self, sentence: str, mode: str) -> np.ndarray:
        if mode not in _SENTENCE_MODES:
            raise ValueError(f"bad sentence mode {mode!r}")
        return self._vector(mode, sentence)

    def lookup_word(self, word: str) -> Optional[np.ndarray]:
        return self._vector("word", word)

    def lookup_phrase(self, phrase: str) -> Optional[np.ndarray]:
        if " " in phrase:
            return None
        return self._vector("word", phrase)


class WordVectorDictionary:
    """Word vectors from a text file: one ``token v1 v2 ... vD`` line each.

    An optional leading ``<count> <dim>`` header line is accepted.  Phrase
    entries use underscores for spaces (``wedding_ring``).  There is no
    sentence context, so only the word pooling modes apply.
    """

    def __init__(self, path):
        self.path = str(path)
        self.name = f"wordvec-{Path(path).stem}"
        self.vectors: Dict[str, np.ndarray] = {}
        self.dim = 0
        self._load()

    def _load(self):
        with open(self.path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                parts = line.split()
                if not parts:
                    continue
                if lineno == 1 and len(parts) == 2 and self._is_count_header(parts):
                    continue
                token, comps = parts[0], parts[1:]
                if not comps:
                    raise ValueError(f"{self.path}:{lineno}: token with no vector")
                try:
                    vec = np.array([float(p) for p in comps], dtype=np.float64)
                except ValueError:
                    raise ValueError(
                        f"{self.path}:{lineno}: non-numeric vector component"
                    ) from None
                if not np.all(np.isfinite(vec)):
                    raise ValueError(f"{self.path}:{lineno}: non-finite component")
                if self.dim == 0:
                    self.dim = len(vec)
                elif len(vec) != self.dim:
                    raise ValueError(
                        f"{self.path}:{lineno}: expected {self.dim} components, "
                        f"got {len(vec)}"
                    )
                if token in self.vectors:
                    raise ValueError(f"{self.path}:{lineno}: duplicate token {token!r}")
                self.vectors[token] = vec
        if not self.vectors:
            raise ValueError(f"{self.path}: no vectors found")

    @staticmethod
    def _is_count_header(parts) -> bool:
        try:
            int(parts[0]), int(parts[1])
        except ValueError:
            return False
        return True

    def sentence_vector(self, sentence: str, mode: str) -> np.ndarray:
        raise ValueError(
            f"pooling {mode!r} needs a contextual encoder; "
            f"{self.name} provides word vectors only"
        )

    def lookup_word(self, word: str) -> Optional[np.ndarray]:
        return self.vectors.get(word)

    def lookup_phrase(self, phrase: str) -> Optional[np.ndarray]:
        return self.vectors.get(phrase.replace(" ", "_"))


def load_encoder(spec: str):
    """Instantiate an encoder from a spec string.

    ``fake:<seed>[:<dim>]`` or ``wordvec:<path>``.  Anything the spec
    names but cannot produce (bad syntax, unreadable file) is a load
    failure reported as ValueError.
    """
    kind, sep, rest = spec.partition(":")
    if not sep or not rest:
        raise ValueError(
            f"bad encoder spec {spec!r}: expected 'fake:<seed>[:<dim>]' "
            f"or 'wordvec:<path>'"
        )
    if kind == "fake":
        fields = rest.split(":")
        if len(fields) > 2:
            raise ValueError(f"bad encoder spec {spec!r}: too many fields")
        try:
            seed = int(fields[0])
            dim = int(fields[1]) if len(fields) == 2 else 32
        except ValueError:
            raise ValueError(
                f"bad encoder spec {spec!r}: seed and dim must be integers"
            ) from None
        return FakeEncoder(seed, dim)
    if kind == "wordvec":
        try:
            return WordVectorDictionary(rest)
        except OSError as exc:
            raise ValueError(f"cannot load word vectors from {rest!r}: {exc}") from None
    raise ValueError(f"unknown encoder kind {kind!r}, expected 'fake' or 'wordvec'")
