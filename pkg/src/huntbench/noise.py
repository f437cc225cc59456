"""Noisy input generation for the robustness harness.

Token-level noise is pure and seed-deterministic; semantic-level noise is
a gateway-backed paraphrase with a contextual-shift instruction.
"""

from __future__ import annotations

import enum
import random
import re
from dataclasses import dataclass

from .gateway import Gateway
from .ops.llm import load_prompt


class NoiseKind(enum.Enum):
    TOKEN_LEVEL = "TokenLevel"
    SEMANTIC_LEVEL = "SemanticLevel"


@dataclass(frozen=True)
class NoiseSpec:
    kind: NoiseKind
    ratio: float
    seed: int = 0

    def __post_init__(self) -> None:
        if not (0.0 <= self.ratio <= 1.0):
            raise ValueError(f"ratio {self.ratio} outside [0, 1]")


# Filler tokens injected or substituted in; chosen by seeded randomness.
_NOISE_VOCAB = (
    "xyzzy", "qwerty", "lorem", "asdf", "foo1", "zorp", "blip", "snarf",
)


def _mangle(token: str, rng: random.Random) -> str:
    """Return a token different from the input (character swap or vocab word)."""
    if len(token) >= 2 and rng.random() < 0.5:
        i = rng.randrange(len(token) - 1)
        swapped = token[:i] + token[i + 1] + token[i] + token[i + 2:]
        if swapped != token:
            return swapped
    choice = rng.choice(_NOISE_VOCAB)
    return choice if choice != token else choice + "x"


def token_noise(text: str, spec: NoiseSpec) -> str:
    """Alter exactly floor(ratio * token count) whitespace-delimited tokens."""
    if spec.kind is not NoiseKind.TOKEN_LEVEL:
        raise ValueError("token_noise requires a TokenLevel spec")
    tokens = text.split()
    k = int(spec.ratio * len(tokens))
    if k == 0:
        return text
    rng = random.Random(spec.seed)
    positions = sorted(rng.sample(range(len(tokens)), k))
    out: list[str] = []
    altered = set(positions)
    for i, token in enumerate(tokens):
        if i in altered:
            if rng.random() < 0.5:
                out.append(_mangle(token, rng))           # substitute
            else:
                out.append(rng.choice(_NOISE_VOCAB))      # insert before
                out.append(token)
        else:
            out.append(token)
    return " ".join(out)


_SENT_SPLIT = re.compile(r"(?<=[.!?])\s+")


def semantic_noise(text: str, spec: NoiseSpec, gateway: Gateway) -> str:
    """Paraphrase ~ratio of sentences with subtle contextual shift."""
    if spec.kind is not NoiseKind.SEMANTIC_LEVEL:
        raise ValueError("semantic_noise requires a SemanticLevel spec")
    if not text.strip():
        raise ValueError("empty-input")
    if spec.ratio == 0:
        return text
    sentences = _SENT_SPLIT.split(text)
    n_shift = max(1, int(spec.ratio * len(sentences)))
    reply = gateway.complete(
        load_prompt("paraphrase"),
        f"Rewrite about {n_shift} of the {len(sentences)} sentences "
        f"(fraction {spec.ratio}).\n\nText:\n{text}",
    ).strip()
    if not reply or reply == text:
        raise ValueError("paraphrase did not change the text")
    return reply
