"""The fixed 52-trait personality taxonomy.

Five Big Five dimensions, six facets per dimension, twelve needs and five
values, in a fixed canonical order used by every table and CSV.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class TraitDescriptor:
    key: str
    display_name: str
    group: str  # dimension | facet | need | value
    parent: str | None = None


_BIG_FIVE = [
    ("openness", "Openness", [
        ("adventurousness", "Adventurousness"),
        ("artistic_interests", "Artistic interests"),
        ("emotionality", "Emotionality"),
        ("imagination", "Imagination"),
        ("intellect", "Intellect"),
        ("liberalism", "Liberalism"),
    ]),
    ("conscientiousness", "Conscientiousness", [
        ("achievement_striving", "Achievement striving"),
        ("cautiousness", "Cautiousness"),
        ("dutifulness", "Dutifulness"),
        ("orderliness", "Orderliness"),
        ("self_discipline", "Self-discipline"),
        ("self_efficacy", "Self-efficacy"),
    ]),
    ("extraversion", "Extraversion", [
        ("activity_level", "Activity level"),
        ("assertiveness", "Assertiveness"),
        ("cheerfulness", "Cheerfulness"),
        ("excitement_seeking", "Excitement-seeking"),
        ("friendliness", "Friendliness"),
        ("gregariousness", "Gregariousness"),
    ]),
    ("agreeableness", "Agreeableness", [
        ("altruism", "Altruism"),
        ("cooperation", "Cooperation"),
        ("modesty", "Modesty"),
        ("morality", "Morality"),
        ("sympathy", "Sympathy"),
        ("trust", "Trust"),
    ]),
    ("neuroticism", "Neuroticism", [
        ("anger", "Anger"),
        ("anxiety", "Anxiety"),
        ("depression", "Depression"),
        ("immoderation", "Immoderation"),
        ("self_consciousness", "Self-consciousness"),
        ("vulnerability", "Vulnerability"),
    ]),
]

_NEEDS = [
    ("challenge", "Challenge"), ("closeness", "Closeness"), ("curiosity", "Curiosity"),
    ("excitement", "Excitement"), ("harmony", "Harmony"), ("ideal", "Ideal"),
    ("liberty", "Liberty"), ("love", "Love"), ("practicality", "Practicality"),
    ("self_expression", "Self-expression"), ("stability", "Stability"),
    ("structure", "Structure"),
]

_VALUES = [
    ("conservation", "Conservation"), ("openness_to_change", "Openness to change"),
    ("hedonism", "Hedonism"), ("self_enhancement", "Self-enhancement"),
    ("self_transcendence", "Self-transcendence"),
]


def _build() -> tuple[TraitDescriptor, ...]:
    out = [TraitDescriptor(k, name, "dimension") for k, name, _ in _BIG_FIVE]
    for dim, _, facets in _BIG_FIVE:
        out += [TraitDescriptor(k, name, "facet", dim) for k, name in facets]
    out += [TraitDescriptor(k, name, "need") for k, name in _NEEDS]
    out += [TraitDescriptor(k, name, "value") for k, name in _VALUES]
    return tuple(out)


TAXONOMY = _build()
TRAIT_KEYS = tuple(t.key for t in TAXONOMY)
TRAIT_INDEX = {k: i for i, k in enumerate(TRAIT_KEYS)}
N_TRAITS = len(TAXONOMY)

assert N_TRAITS == 52

# traits singled out when reading per-cluster centroids and the communication graph
RADAR_TRAITS = (
    "extraversion", "conscientiousness", "openness",
    "cooperation", "sympathy", "achievement_striving", "cautiousness", "dutifulness",
    "adventurousness", "imagination", "intellect", "liberalism", "artistic_interests",
    "altruism", "cheerfulness", "gregariousness", "self_discipline",
    "structure", "conservation", "self_enhancement", "self_transcendence",
)


def display_name(key: str) -> str:
    return TAXONOMY[TRAIT_INDEX[key]].display_name
