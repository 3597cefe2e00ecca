"""Turn a list of object names into an embedding table file.

Contextual encoders see each object inside a short carrier sentence
(:mod:`embextract.templates`); word-vector models are pooled over the
object's words (:mod:`embextract.extraction`).  The output file uses the
embedding-table interchange format, so any consumer of that format can
read it directly.
"""

__version__ = "0.1.0"
