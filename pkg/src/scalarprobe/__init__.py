"""Tools for measuring how much scalar-magnitude information survives in
fixed object embeddings.

The package has three layers:

* text preparation: rewriting numeric literals into an exponent-explicit
  form so a tokenizer cannot shred them (:mod:`scalarprobe.canonicalize`);
* data handling: grounded scalar observations, log-scale bucketing and
  empirical distributions over buckets (:mod:`scalarprobe.scalardata`,
  :mod:`scalarprobe.embeddings`);
* probing and evaluation: linear probes trained on frozen embeddings and
  distribution-aware metrics (:mod:`scalarprobe.probes`,
  :mod:`scalarprobe.metrics`, :mod:`scalarprobe.harness`).
"""

__version__ = "0.1.0"
