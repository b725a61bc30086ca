"""Instruction language.

A finite grammar of placement productions per task family, a deterministic
word-level tokenizer over a fixed vocabulary, candidate-set enumeration in a
canonical order, and seeded sampling for play and evaluation. (family, slots),
surface string and token sequence are mutually bijective over the enumerated
language.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from . import world
from .errors import EmptyCandidateError, UnsupportedInstructionError, VocabularyError

FAMILIES = (
    "pack-shapes",
    "put-blocks-in-bowls",
    "put-shapes-in-bowls",
    "pack-unseen-objects",
    "move-out",
)
PLACEMENT_FAMILIES = FAMILIES[:4]

_TEMPLATE_WORDS = (
    "put", "pack", "move", "the", "in", "out", "objects",
    "block", "bowl", "box", "brown",
)
VOCAB: tuple[str, ...] = _TEMPLATE_WORDS + world.TASK_COLORS + world.SEEN_SHAPES + world.UNSEEN_SHAPES
WORD_TO_ID = {w: i for i, w in enumerate(VOCAB)}
MAX_TOKENS = 8  # longest production: "put the <color> block in the <color> bowl"


@dataclass(frozen=True)
class Instruction:
    family: str
    shape: Optional[str]
    object_color: Optional[str]  # only put-blocks-in-bowls constrains it
    container_kind: Optional[str]
    container_color: Optional[str]
    surface: str
    tokens: tuple[int, ...]


def tokenize(surface: str) -> tuple[int, ...]:
    """Whitespace-split word lookup. Unknown words raise VocabularyError."""
    ids = []
    for word in surface.split():
        if word not in WORD_TO_ID:
            raise VocabularyError(f"word {word!r} not in vocabulary")
        ids.append(WORD_TO_ID[word])
    return tuple(ids)


def detokenize(tokens: Iterable[int]) -> str:
    words = []
    for t in tokens:
        t = int(t)
        if not 0 <= t < len(VOCAB):
            raise VocabularyError(f"token id {t} out of range")
        words.append(VOCAB[t])
    return " ".join(words)


def _make(family, shape, object_color, kind, color, surface) -> Instruction:
    return Instruction(family, shape, object_color, kind, color, surface, tokenize(surface))


def pack_production(shape: str, family: str = "pack-shapes") -> Instruction:
    if family not in ("pack-shapes", "pack-unseen-objects"):
        raise UnsupportedInstructionError(f"{family} is not a pack family")
    return _make(family, shape, None, "box", world.BOX_COLOR,
                 f"pack the {shape} in the brown box")


def put_block_production(block_color: str, bowl_color: str) -> Instruction:
    return _make("put-blocks-in-bowls", world.BLOCK_SHAPE, block_color, "bowl", bowl_color,
                 f"put the {block_color} block in the {bowl_color} bowl")


def put_shape_production(shape: str, bowl_color: str) -> Instruction:
    return _make("put-shapes-in-bowls", shape, None, "bowl", bowl_color,
                 f"put the {shape} in the {bowl_color} bowl")


def move_out_production() -> Instruction:
    return _make("move-out", None, None, None, None, "move the objects out")


def enumerate_instructions(
    families: Iterable[str],
    splits: world.WorldSplits = world.DEFAULT_SPLITS,
) -> list[Instruction]:
    """Full slot product of each family, in canonical order, no duplicates."""
    wanted = set(families)
    if not wanted:
        raise EmptyCandidateError("no families given")
    unknown = wanted - set(FAMILIES)
    if unknown:
        raise UnsupportedInstructionError(f"unknown families: {sorted(unknown)}")

    out: list[Instruction] = []
    for family in FAMILIES:  # canonical family order
        if family not in wanted:
            continue
        if family == "pack-shapes":
            out.extend(pack_production(s, family) for s in splits.seen_shapes)
        elif family == "pack-unseen-objects":
            out.extend(pack_production(s, family) for s in splits.unseen_shapes)
        elif family == "put-blocks-in-bowls":
            out.extend(
                put_block_production(bc, bw)
                for bc in world.TASK_COLORS
                for bw in splits.bowl_colors
            )
        elif family == "put-shapes-in-bowls":
            out.extend(
                put_shape_production(s, bw)
                for s in splits.seen_shapes
                for bw in splits.bowl_colors
            )
        else:  # move-out
            out.append(move_out_production())
    return out


def is_feasible(scene: world.Scene, instruction: Instruction) -> bool:
    """Executable now: a matching object sits on the table and the container exists."""
    if instruction.family == "move-out":
        return any(o.location[0] == "in" for o in scene.objects)
    if not any(
        c.kind == instruction.container_kind and c.color_id == instruction.container_color
        for c in scene.containers
    ):
        return False
    for obj in scene.objects:
        if obj.location[0] != "table" or obj.shape_id != instruction.shape:
            continue
        if instruction.object_color is not None and obj.color_id != instruction.object_color:
            continue
        return True
    return False


def sample_instruction(
    rng: np.random.Generator,
    family: Union[str, Sequence[str]],
    scene: Optional[world.Scene] = None,
    splits: world.WorldSplits = world.DEFAULT_SPLITS,
) -> Instruction:
    """Uniform draw over the family's productions.

    With a scene, the draw is restricted to productions feasible in it;
    without one, sampling is unfiltered (play-time behavior).
    """
    families = (family,) if isinstance(family, str) else tuple(family)
    if "move-out" in families:
        raise UnsupportedInstructionError("move-out is not sampled; it is issued explicitly")
    candidates = enumerate_instructions(families, splits)
    if scene is not None:
        candidates = [i for i in candidates if is_feasible(scene, i)]
        if not candidates:
            raise EmptyCandidateError(f"no feasible production for {families} in scene")
    return candidates[int(rng.integers(len(candidates)))]


# ---------------------------------------------------------------------------
# Manifests

def candidates_manifest(instructions: Sequence[Instruction]) -> dict:
    """Auditable fingerprint of an ordered candidate set."""
    surfaces = [i.surface for i in instructions]
    digest = hashlib.sha256("\n".join(surfaces).encode()).hexdigest()
    return {
        "schema_version": 1,
        "count": len(surfaces),
        "sha256": digest,
        "surfaces": surfaces,
    }


def grammar_manifest(splits: world.WorldSplits = world.DEFAULT_SPLITS) -> str:
    """Human-readable dump of the vocabulary and every production."""
    lines = ["# vocabulary"]
    lines.extend(f"{i:3d} {w}" for i, w in enumerate(VOCAB))
    lines.append("")
    for family in FAMILIES:
        prods = enumerate_instructions([family], splits)
        lines.append(f"# {family} ({len(prods)} productions)")
        lines.extend(p.surface for p in prods)
        lines.append("")
    return "\n".join(lines)
