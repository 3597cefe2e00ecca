"""Carrier sentences that place an object in an attribute-bearing context.

A contextual encoder wants a full sentence, not a bare noun, so each
attribute gets one template with a single ``X`` slot for the object name.
LENGTH uses "big" rather than "long" because length readings can be widths
or heights too; paraphrased variants behave very similarly, which is why
the sentence is overridable per run.
"""

import re
from dataclasses import dataclass
from typing import Dict, Mapping, Optional

ATTRIBUTES = ("MASS", "LENGTH", "PRICE")

_DEFAULT_SENTENCES = {
    "MASS": "The X is heavy.",
    "LENGTH": "The X is big.",
    "PRICE": "The X is expensive.",
}

# the slot is a standalone X token, never part of a longer word
_SLOT = re.compile(r"\bX\b")


@dataclass(frozen=True)
class TemplateSet:
    """One carrier sentence per attribute, each with exactly one slot."""

    sentences: Mapping[str, str]

    def __post_init__(self):
        missing = [a for a in ATTRIBUTES if a not in self.sentences]
        if missing:
            raise ValueError(f"missing template for attribute(s) {missing}")
        extra = sorted(a for a in self.sentences if a not in ATTRIBUTES)
        if extra:
            raise ValueError(
                f"unknown attribute(s) {extra}, expected one of {ATTRIBUTES}"
            )
        for attr, sent in self.sentences.items():
            n = len(_SLOT.findall(sent))
            if n != 1:
                raise ValueError(
                    f"template for {attr} must contain exactly one 'X' slot, "
                    f"got {n} in {sent!r}"
                )

    def sentence(self, attribute: str) -> str:
        if attribute not in self.sentences:
            raise ValueError(
                f"unknown attribute {attribute!r}, expected one of {ATTRIBUTES}"
            )
        return self.sentences[attribute]


def default_templates(overrides: Optional[Dict[str, str]] = None) -> TemplateSet:
    """The stock template set, with optional per-attribute replacements."""
    sentences = dict(_DEFAULT_SENTENCES)
    if overrides:
        sentences.update(overrides)
    return TemplateSet(sentences)


def render_template(obj: str, attribute: str,
                    templates: Optional[TemplateSet] = None) -> str:
    """Drop an object name into the attribute's carrier sentence.

    The slot is substituted once and the result is single-space
    normalized.  The replacement is literal, so object names containing
    'X' (or regex metacharacters) pass through untouched.
    """
    if templates is None:
        templates = default_templates()
    sent = _SLOT.sub(lambda _m: obj, templates.sentence(attribute), count=1)
    return " ".join(sent.split())
