"""Deterministic 2D tabletop world.

Symbolic grid scenes with movable objects and containers, pick-and-place
dynamics, sprite rendering under swappable visual themes, oracle event
labeling, and a scripted container reset. Everything here is pure: `step`,
`render`, and `reset_containers` never mutate their inputs, and equal inputs
produce bit-identical outputs.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import (
    BoundsError,
    CapacityError,
    ConfigError,
    UnsupportedInstructionError,
)

CELL_PX = 8

# ---------------------------------------------------------------------------
# Attribute tables

COLOR_TABLE = {
    "red": (0.85, 0.10, 0.10),
    "green": (0.10, 0.70, 0.15),
    "blue": (0.15, 0.25, 0.85),
    "yellow": (0.90, 0.85, 0.10),
    "cyan": (0.10, 0.80, 0.80),
    "magenta": (0.80, 0.15, 0.80),
    "brown": (0.45, 0.28, 0.12),  # reserved for the box
}

TASK_COLORS = ("red", "green", "blue", "yellow", "cyan", "magenta")
BOX_COLOR = "brown"

SEEN_SHAPES = ("star", "ring", "triangle", "cross", "diamond", "heart")
UNSEEN_SHAPES = ("moon", "arrow", "hexagon")
BLOCK_SHAPE = "block"

_SPRITE_ART = {
    "block": (
        "........",
        ".######.",
        ".######.",
        ".######.",
        ".######.",
        ".######.",
        ".######.",
        "........",
    ),
    "star": (
        "...##...",
        "...##...",
        "########",
        ".######.",
        "..####..",
        ".##..##.",
        "##....##",
        "........",
    ),
    "ring": (
        "........",
        "..####..",
        ".##..##.",
        ".#....#.",
        ".#....#.",
        ".##..##.",
        "..####..",
        "........",
    ),
    "triangle": (
        "...##...",
        "...##...",
        "..####..",
        "..####..",
        ".######.",
        ".######.",
        "########",
        "........",
    ),
    "cross": (
        "...##...",
        "...##...",
        "########",
        "########",
        "...##...",
        "...##...",
        "...##...",
        "........",
    ),
    "diamond": (
        "...##...",
        "..####..",
        ".######.",
        "########",
        "########",
        ".######.",
        "..####..",
        "...##...",
    ),
    "heart": (
        ".##..##.",
        "########",
        "########",
        "########",
        ".######.",
        "..####..",
        "...##...",
        "........",
    ),
    "moon": (
        "..####..",
        ".####...",
        "####....",
        "###.....",
        "###.....",
        "####....",
        ".####...",
        "..####..",
    ),
    "arrow": (
        "...##...",
        "...###..",
        "########",
        "########",
        "########",
        "...###..",
        "...##...",
        "........",
    ),
    "hexagon": (
        "..####..",
        ".######.",
        "########",
        "########",
        "########",
        "########",
        ".######.",
        "..####..",
    ),
}

_BOWL_ART = (
    ".######.",
    "########",
    "##....##",
    "##....##",
    "##....##",
    "##....##",
    "########",
    ".######.",
)

_BOX_BORDER_ART = (
    "########",
    "#......#",
    "#......#",
    "#......#",
    "#......#",
    "#......#",
    "#......#",
    "########",
)


def _mask(art: Sequence[str]) -> np.ndarray:
    return np.array([[ch == "#" for ch in row] for row in art], dtype=bool)


SPRITE_MASKS = {name: _mask(art) for name, art in _SPRITE_ART.items()}
_BOWL_MASK = _mask(_BOWL_ART)
_BOX_BORDER_MASK = _mask(_BOX_BORDER_ART)


# ---------------------------------------------------------------------------
# Themes

@dataclass(frozen=True)
class Theme:
    base: tuple[float, float, float]
    stripe: tuple[float, float, float]
    pattern: str  # hstripes | vstripes | checker | diag


# Themes 0-2 are light, low-contrast variants; theme 3 (the held-out one)
# flips to a dark, high-contrast look so it is genuinely out of distribution.
THEMES = {
    0: Theme((0.82, 0.82, 0.80), (0.74, 0.74, 0.72), "hstripes"),
    1: Theme((0.86, 0.81, 0.70), (0.78, 0.72, 0.60), "vstripes"),
    2: Theme((0.74, 0.78, 0.84), (0.67, 0.71, 0.78), "checker"),
    3: Theme((0.16, 0.17, 0.24), (0.42, 0.46, 0.58), "diag"),
}


@dataclass(frozen=True)
class WorldSplits:
    """Seen/unseen attribute partition used by data generation and eval."""

    seen_shapes: tuple[str, ...] = SEEN_SHAPES
    unseen_shapes: tuple[str, ...] = UNSEEN_SHAPES
    bowl_colors: tuple[str, ...] = TASK_COLORS
    seen_themes: tuple[int, ...] = (0, 1, 2)
    unseen_theme: int = 3

    def __post_init__(self):
        overlap = set(self.seen_shapes) & set(self.unseen_shapes)
        if overlap:
            raise ConfigError(f"seen/unseen shape overlap: {sorted(overlap)}")
        if self.unseen_theme in self.seen_themes:
            raise ConfigError("unseen theme listed as seen")


DEFAULT_SPLITS = WorldSplits()


# ---------------------------------------------------------------------------
# Scene state

Cell = tuple[int, int]
# Object location: ("table", r, c) or ("in", container_id, slot).  The slot
# records insertion order inside the container and drives draw order.
Location = tuple


@dataclass(frozen=True)
class ObjectState:
    object_id: int
    shape_id: str
    color_id: str
    location: Location


@dataclass(frozen=True)
class ContainerState:
    container_id: int
    kind: str  # bowl | box
    color_id: str
    cell: Cell


@dataclass(frozen=True)
class Scene:
    grid_size: tuple[int, int]
    objects: tuple[ObjectState, ...]
    containers: tuple[ContainerState, ...]
    seed: int

    def object_at(self, cell: Cell) -> Optional[ObjectState]:
        for obj in self.objects:
            if obj.location[0] == "table" and (obj.location[1], obj.location[2]) == cell:
                return obj
        return None

    def container_at(self, cell: Cell) -> Optional[ContainerState]:
        for cont in self.containers:
            if cont.cell == cell:
                return cont
        return None

    def container_by_id(self, container_id: int) -> ContainerState:
        for cont in self.containers:
            if cont.container_id == container_id:
                return cont
        raise KeyError(container_id)

    def contents(self, container_id: int) -> tuple[ObjectState, ...]:
        held = [o for o in self.objects if o.location[0] == "in" and o.location[1] == container_id]
        held.sort(key=lambda o: o.location[2])
        return tuple(held)

    def free_table_cells(self) -> list[Cell]:
        rows, cols = self.grid_size
        blocked = {c.cell for c in self.containers}
        blocked |= {
            (o.location[1], o.location[2]) for o in self.objects if o.location[0] == "table"
        }
        return [(r, c) for r in range(rows) for c in range(cols) if (r, c) not in blocked]


@dataclass(frozen=True)
class Observation:
    image: np.ndarray  # rows*8 x cols*8 x 3 float32 in [0, 1]
    theme_id: int


@dataclass(frozen=True)
class PickPlaceAction:
    pick_cell: Cell
    place_cell: Cell


@dataclass(frozen=True)
class Event:
    """Oracle description of what a step did.

    kind is "no_op" exactly when post-state equals pre-state. For "moved",
    destination is ("table", (r, c)) or ("container", container_id, kind,
    color_id).
    """

    kind: str
    shape_id: Optional[str] = None
    color_id: Optional[str] = None
    destination: Optional[tuple] = None


NO_OP = Event(kind="no_op")


# ---------------------------------------------------------------------------
# Scene generation

@dataclass(frozen=True)
class SceneSpec:
    """Task-family scene template.

    family selects the content rules; "seen-mix" combines shapes, blocks,
    bowls and the box in one scene (used for chains and theme-shift play).
    """

    family: str
    n_objects: int = 3
    n_bowls: int = 3
    n_blocks: int = 3
    grid_size: tuple[int, int] = (6, 6)

    def canonical(self) -> dict:
        return {
            "family": self.family,
            "n_objects": self.n_objects,
            "n_bowls": self.n_bowls,
            "n_blocks": self.n_blocks,
            "grid_size": list(self.grid_size),
        }


SCENE_FAMILIES = (
    "pack-shapes",
    "put-blocks-in-bowls",
    "put-shapes-in-bowls",
    "pack-unseen-objects",
    "seen-mix",
)


def _spec_entropy(spec: SceneSpec) -> int:
    blob = json.dumps(spec.canonical(), sort_keys=True).encode()
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "little")


def new_scene(seed: int, spec: SceneSpec, splits: WorldSplits = DEFAULT_SPLITS) -> Scene:
    """Generate the scene for (seed, spec). Same inputs, same scene."""
    if spec.family not in SCENE_FAMILIES:
        raise ConfigError(f"unknown scene family: {spec.family!r}")

    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, _spec_entropy(spec)])))

    want_box = spec.family in ("pack-shapes", "pack-unseen-objects", "seen-mix")
    n_bowls = 0 if spec.family in ("pack-shapes", "pack-unseen-objects") else spec.n_bowls
    n_shape_objects = 0 if spec.family == "put-blocks-in-bowls" else spec.n_objects
    n_block_objects = {
        "put-blocks-in-bowls": spec.n_objects,
        "seen-mix": spec.n_blocks,
    }.get(spec.family, 0)

    shape_pool = splits.unseen_shapes if spec.family == "pack-unseen-objects" else splits.seen_shapes
    if n_shape_objects > len(shape_pool):
        raise CapacityError(
            f"{spec.family} wants {n_shape_objects} shapes, pool has {len(shape_pool)}"
        )
    if n_bowls > len(splits.bowl_colors):
        raise CapacityError(f"{n_bowls} bowls requested from {len(splits.bowl_colors)} colors")
    if n_block_objects > len(TASK_COLORS):
        raise CapacityError(f"{n_block_objects} blocks requested from {len(TASK_COLORS)} colors")
    n_movable = n_shape_objects + n_block_objects
    if n_movable > len(TASK_COLORS):
        raise CapacityError(
            f"{n_movable} movable objects need distinct colors, pool has {len(TASK_COLORS)}"
        )

    rows, cols = spec.grid_size
    n_containers = n_bowls + (1 if want_box else 0)
    if n_containers + n_movable > rows * cols:
        raise CapacityError("more objects and containers than grid cells")

    all_cells = [(r, c) for r in range(rows) for c in range(cols)]
    picked = rng.choice(len(all_cells), size=n_containers + n_movable, replace=False)
    cells = [all_cells[i] for i in picked]

    containers = []
    cid = 0
    for color in rng.permutation(np.array(splits.bowl_colors))[:n_bowls]:
        containers.append(ContainerState(cid, "bowl", str(color), cells.pop(0)))
        cid += 1
    if want_box:
        containers.append(ContainerState(cid, "box", BOX_COLOR, cells.pop(0)))
        cid += 1

    shapes = [str(s) for s in rng.permutation(np.array(shape_pool))[:n_shape_objects]]
    object_colors = [str(c) for c in rng.permutation(np.array(TASK_COLORS))[:n_movable]]

    objects = []
    oid = 0
    for shape in shapes:
        r, c = cells.pop(0)
        objects.append(ObjectState(oid, shape, object_colors[oid], ("table", r, c)))
        oid += 1
    for _ in range(n_block_objects):
        r, c = cells.pop(0)
        objects.append(ObjectState(oid, BLOCK_SHAPE, object_colors[oid], ("table", r, c)))
        oid += 1

    return Scene(spec.grid_size, tuple(objects), tuple(containers), seed)


# ---------------------------------------------------------------------------
# Dynamics

def _in_bounds(cell: Cell, grid: tuple[int, int]) -> bool:
    return 0 <= cell[0] < grid[0] and 0 <= cell[1] < grid[1]


def step(scene: Scene, action: PickPlaceAction) -> tuple[Scene, Event]:
    """Apply one pick-and-place action. Pure; returns (new scene, event).

    Picking an empty or container cell, or placing on an occupied table
    cell, is a no-op. Placing on a container cell puts the object inside
    (container capacity is unlimited).
    """
    pick = (int(action.pick_cell[0]), int(action.pick_cell[1]))
    place = (int(action.place_cell[0]), int(action.place_cell[1]))
    for cell in (pick, place):
        if not _in_bounds(cell, scene.grid_size):
            raise BoundsError(f"cell {cell} outside grid {scene.grid_size}")

    picked = scene.object_at(pick)
    if picked is None:
        return scene, NO_OP
    dest_container = scene.container_at(place)
    if dest_container is not None:
        slot = 1 + max(
            (o.location[2] for o in scene.objects
             if o.location[0] == "in" and o.location[1] == dest_container.container_id),
            default=-1,
        )
        new_loc = ("in", dest_container.container_id, slot)
        destination = (
            "container",
            dest_container.container_id,
            dest_container.kind,
            dest_container.color_id,
        )
    else:
        if scene.object_at(place) is not None:  # includes place == pick
            return scene, NO_OP
        new_loc = ("table", place[0], place[1])
        destination = ("table", place)

    objects = tuple(
        replace(o, location=new_loc) if o.object_id == picked.object_id else o
        for o in scene.objects
    )
    event = Event("moved", picked.shape_id, picked.color_id, destination)
    return replace(scene, objects=objects), event


def reset_containers(scene: Scene, rng: np.random.Generator) -> Scene:
    """Move every contained object to a free table cell drawn from rng."""
    objects = list(scene.objects)
    for i, obj in enumerate(objects):
        if obj.location[0] != "in":
            continue
        current = Scene(scene.grid_size, tuple(objects), scene.containers, scene.seed)
        free = current.free_table_cells()
        if not free:
            raise CapacityError("no free table cell for container reset")
        r, c = free[int(rng.integers(len(free)))]
        objects[i] = replace(obj, location=("table", r, c))
    return replace(scene, objects=tuple(objects))


# ---------------------------------------------------------------------------
# Rendering

def _background(rows_px: int, cols_px: int, theme: Theme) -> np.ndarray:
    img = np.empty((rows_px, cols_px, 3), dtype=np.float32)
    img[:] = theme.base
    rr, cc = np.meshgrid(np.arange(rows_px), np.arange(cols_px), indexing="ij")
    if theme.pattern == "hstripes":
        on = (rr // 4) % 2 == 1
    elif theme.pattern == "vstripes":
        on = (cc // 4) % 2 == 1
    elif theme.pattern == "checker":
        on = ((rr // 4) + (cc // 4)) % 2 == 1
    elif theme.pattern == "diag":
        on = ((rr + cc) // 4) % 2 == 1
    else:
        raise ConfigError(f"unknown theme pattern {theme.pattern!r}")
    img[on] = theme.stripe
    return img


def _shift_color(rgb: tuple[float, float, float]) -> tuple[float, float, float]:
    r, g, b = rgb
    return (0.85 * r + 0.15 * g, 0.85 * g + 0.15 * b, 0.85 * b + 0.15 * r)


def _paint(img: np.ndarray, cell: Cell, mask: np.ndarray, color_id: str, shift: bool) -> None:
    rgb = COLOR_TABLE[color_id]
    if shift:
        rgb = _shift_color(rgb)
    r0, c0 = cell[0] * CELL_PX, cell[1] * CELL_PX
    patch = img[r0:r0 + CELL_PX, c0:c0 + CELL_PX]
    patch[mask] = np.asarray(rgb, dtype=np.float32)


def _paint_container(img: np.ndarray, cont: ContainerState, shift: bool) -> None:
    if cont.kind == "bowl":
        _paint(img, cont.cell, _BOWL_MASK, cont.color_id, shift)
    else:
        _paint(img, cont.cell, np.ones((CELL_PX, CELL_PX), dtype=bool), cont.color_id, shift)
        # darker rim so the box reads as a container, not a tile
        rgb = COLOR_TABLE[cont.color_id]
        if shift:
            rgb = _shift_color(rgb)
        rim = tuple(0.6 * v for v in rgb)
        r0, c0 = cont.cell[0] * CELL_PX, cont.cell[1] * CELL_PX
        patch = img[r0:r0 + CELL_PX, c0:c0 + CELL_PX]
        patch[_BOX_BORDER_MASK] = np.asarray(rim, dtype=np.float32)


def render(scene: Scene, theme_id: int, *, strong_shift: bool = False) -> Observation:
    """Render the scene under a theme. Pure function of its inputs.

    The theme controls only background and table-stripe pixels; sprites are
    theme-invariant unless strong_shift is set, which additionally applies a
    fixed hue rotation to all sprite colors.
    """
    if theme_id not in THEMES:
        raise ConfigError(f"unknown theme {theme_id!r}")
    theme = THEMES[theme_id]
    rows, cols = scene.grid_size
    img = _background(rows * CELL_PX, cols * CELL_PX, theme)

    for cont in scene.containers:
        _paint_container(img, cont, strong_shift)
    for obj in scene.objects:
        if obj.location[0] == "table":
            _paint(img, (obj.location[1], obj.location[2]), SPRITE_MASKS[obj.shape_id],
                   obj.color_id, strong_shift)
    for cont in scene.containers:
        for obj in scene.contents(cont.container_id):
            _paint(img, cont.cell, SPRITE_MASKS[obj.shape_id], obj.color_id, strong_shift)

    return Observation(image=img, theme_id=theme_id)


def sprite_mask(scene: Scene) -> np.ndarray:
    """Boolean pixel mask of everything render() draws over the background."""
    rows, cols = scene.grid_size
    mask = np.zeros((rows * CELL_PX, cols * CELL_PX), dtype=bool)

    def stamp(cell: Cell, m: np.ndarray) -> None:
        r0, c0 = cell[0] * CELL_PX, cell[1] * CELL_PX
        mask[r0:r0 + CELL_PX, c0:c0 + CELL_PX] |= m

    for cont in scene.containers:
        if cont.kind == "bowl":
            stamp(cont.cell, _BOWL_MASK)
        else:
            stamp(cont.cell, np.ones((CELL_PX, CELL_PX), dtype=bool))
    for obj in scene.objects:
        if obj.location[0] == "table":
            stamp((obj.location[1], obj.location[2]), SPRITE_MASKS[obj.shape_id])
        else:
            stamp(scene.container_by_id(obj.location[1]).cell, SPRITE_MASKS[obj.shape_id])
    return mask


# ---------------------------------------------------------------------------
# Oracle labeling and satisfaction

def oracle_instruction(event: Event, splits: WorldSplits = DEFAULT_SPLITS):
    """Ground-truth instruction for a moved-to-container event, else None.

    Block-into-box has no production in the grammar and maps to None, like
    table destinations.
    """
    from . import grammar  # late import; grammar depends on world types

    if event.kind != "moved" or event.destination is None or event.destination[0] != "container":
        return None
    _, _, kind, color = event.destination
    if kind == "bowl":
        if event.shape_id == BLOCK_SHAPE:
            return grammar.put_block_production(event.color_id, color)
        return grammar.put_shape_production(event.shape_id, color)
    if event.shape_id == BLOCK_SHAPE:
        return None
    family = "pack-shapes" if event.shape_id in splits.seen_shapes else "pack-unseen-objects"
    return grammar.pack_production(event.shape_id, family)


def is_satisfied(scene: Scene, instruction) -> bool:
    """True iff an object matching the instruction sits in the named container."""
    if instruction.family == "move-out":
        raise UnsupportedInstructionError("move-out has no satisfaction predicate")
    target = None
    for cont in scene.containers:
        if cont.kind == instruction.container_kind and cont.color_id == instruction.container_color:
            target = cont
            break
    if target is None:
        return False
    for obj in scene.objects:
        if obj.location[0] != "in" or obj.location[1] != target.container_id:
            continue
        if obj.shape_id != instruction.shape:
            continue
        if instruction.object_color is not None and obj.color_id != instruction.object_color:
            continue
        return True
    return False


# ---------------------------------------------------------------------------
# Serialization helpers (JSONL codecs live in io.py)

def scene_to_dict(scene: Scene) -> dict:
    return {
        "grid_size": list(scene.grid_size),
        "seed": scene.seed,
        "objects": [
            [o.object_id, o.shape_id, o.color_id, list(o.location)] for o in scene.objects
        ],
        "containers": [
            [c.container_id, c.kind, c.color_id, list(c.cell)] for c in scene.containers
        ],
    }


def scene_from_dict(d: dict) -> Scene:
    objects = tuple(
        ObjectState(oid, shape, color, tuple(loc)) for oid, shape, color, loc in d["objects"]
    )
    containers = tuple(
        ContainerState(cid, kind, color, (cell[0], cell[1]))
        for cid, kind, color, cell in d["containers"]
    )
    return Scene((d["grid_size"][0], d["grid_size"][1]), objects, containers, d["seed"])


def scene_digest(scene: Scene) -> str:
    blob = json.dumps(scene_to_dict(scene), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()
