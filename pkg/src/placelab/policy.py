"""Language-conditioned pick-and-place policy.

A small strided conv stack yields one feature vector per grid cell; the
instruction is embedded, position-gate pooled, and broadcast-concatenated
onto every cell. A pick head scores cells directly; the place head scores
cells given the chosen pick cell as a one-hot plane (teacher-forced with the
expert pick during training, own argmax at inference). Training is plain
behavior cloning: cross-entropy at the expert pick and place cells.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import grammar, world
from .errors import TrainingError
from .nn import layers as L
from .nn.params import ParamStore, init_conv, init_dense, init_embedding, init_gates, make_rng

POLICY_SCHEMA = 1


@dataclass(frozen=True)
class PolicyConfig:
    grid: tuple[int, int] = (6, 6)
    vision_channels: tuple[int, int, int] = (16, 32, 64)
    embed_dim: int = 16
    instr_dim: int = 32
    head_hidden: int = 32
    max_tokens: int = grammar.MAX_TOKENS

    @property
    def n_cells(self) -> int:
        return self.grid[0] * self.grid[1]

    def to_dict(self) -> dict:
        return {
            "grid": list(self.grid),
            "vision_channels": list(self.vision_channels),
            "embed_dim": self.embed_dim,
            "instr_dim": self.instr_dim,
            "head_hidden": self.head_hidden,
            "max_tokens": self.max_tokens,
        }

    @staticmethod
    def from_dict(d: dict) -> "PolicyConfig":
        return PolicyConfig(
            grid=tuple(d["grid"]),
            vision_channels=tuple(d["vision_channels"]),
            embed_dim=d["embed_dim"],
            instr_dim=d["instr_dim"],
            head_hidden=d["head_hidden"],
            max_tokens=d["max_tokens"],
        )


@dataclass
class PolicyModel:
    cfg: PolicyConfig
    params: ParamStore


@dataclass(frozen=True)
class PolicyInput:
    observation: world.Observation
    instruction: grammar.Instruction


def init_policy(cfg: PolicyConfig = PolicyConfig(), seed: int = 0, dtype=np.float32) -> PolicyModel:
    rng = make_rng(seed=seed)
    c1, c2, c3 = cfg.vision_channels
    p = ParamStore(dtype=dtype)
    p.add("vis/c1_w", init_conv(rng, 3, 3, 3, c1))
    p.add("vis/c1_b", np.zeros(c1))
    p.add("vis/c2_w", init_conv(rng, 3, 3, c1, c2))
    p.add("vis/c2_b", np.zeros(c2))
    p.add("vis/c3_w", init_conv(rng, 3, 3, c2, c3))
    p.add("vis/c3_b", np.zeros(c3))
    p.add("txt/embed", init_embedding(rng, len(grammar.VOCAB), cfg.embed_dim))
    p.add("txt/gates", init_gates(rng, cfg.max_tokens, cfg.embed_dim))
    p.add("txt/w", init_dense(rng, cfg.embed_dim, cfg.instr_dim))
    p.add("txt/b", np.zeros(cfg.instr_dim))
    fused = c3 + cfg.instr_dim
    p.add("pick/w1", init_dense(rng, fused, cfg.head_hidden))
    p.add("pick/b1", np.zeros(cfg.head_hidden))
    p.add("pick/w2", init_dense(rng, cfg.head_hidden, 1))
    p.add("pick/b2", np.zeros(1))
    p.add("place/w1", init_dense(rng, fused + 1, cfg.head_hidden))
    p.add("place/b1", np.zeros(cfg.head_hidden))
    p.add("place/w2", init_dense(rng, cfg.head_hidden, 1))
    p.add("place/b2", np.zeros(1))
    return PolicyModel(cfg, p)


# ---------------------------------------------------------------------------
# Batch preparation

def pad_tokens(token_seqs: Sequence[Sequence[int]], max_tokens: int, dtype=np.float32):
    ids = np.zeros((len(token_seqs), max_tokens), dtype=np.int64)
    mask = np.zeros((len(token_seqs), max_tokens), dtype=dtype)
    for i, seq in enumerate(token_seqs):
        ids[i, :len(seq)] = seq
        mask[i, :len(seq)] = 1.0
    return ids, mask


def cell_index(cell: tuple[int, int], grid: tuple[int, int]) -> int:
    return cell[0] * grid[1] + cell[1]


def cell_from_index(idx: int, grid: tuple[int, int]) -> tuple[int, int]:
    return (int(idx) // grid[1], int(idx) % grid[1])


def argmax_cell(logits: np.ndarray, grid: tuple[int, int]) -> tuple[int, int]:
    """Row-major argmax; np.argmax picks the lowest index on ties."""
    return cell_from_index(int(np.argmax(logits)), grid)


# ---------------------------------------------------------------------------
# Forward / backward

def _forward(params, cfg: PolicyConfig, images, ids, mask, pick_onehot=None, want_cache=False):
    """Both heads. pick_onehot None means condition place on own argmax."""
    h1, c1 = L.conv2d_forward(images, params["vis/c1_w"], params["vis/c1_b"], stride=2, pad=1)
    r1, m1 = L.relu_forward(h1)
    h2, c2 = L.conv2d_forward(r1, params["vis/c2_w"], params["vis/c2_b"], stride=2, pad=1)
    r2, m2 = L.relu_forward(h2)
    h3, c3 = L.conv2d_forward(r2, params["vis/c3_w"], params["vis/c3_b"], stride=2, pad=1)
    r3, m3 = L.relu_forward(h3)
    n = images.shape[0]
    cells = r3.reshape(n, cfg.n_cells, cfg.vision_channels[2])

    emb, ce = L.embedding_forward(ids, params["txt/embed"])
    pooled, cp = L.gated_pool_forward(emb, params["txt/gates"], mask)
    upre, cu = L.dense_forward(pooled, params["txt/w"], params["txt/b"])
    u, mu = L.relu_forward(upre)
    ubc = np.broadcast_to(u[:, None, :], (n, cfg.n_cells, cfg.instr_dim))
    fused = np.concatenate([cells, ubc], axis=2)

    ph, cph = L.dense_forward(fused, params["pick/w1"], params["pick/b1"])
    phr, mph = L.relu_forward(ph)
    pl, cpl = L.dense_forward(phr, params["pick/w2"], params["pick/b2"])
    pick_logits = pl[:, :, 0]

    if pick_onehot is None:
        idx = np.argmax(pick_logits, axis=1)
        pick_onehot = np.zeros((n, cfg.n_cells), dtype=images.dtype)
        pick_onehot[np.arange(n), idx] = 1.0

    place_in = np.concatenate([fused, pick_onehot[:, :, None]], axis=2)
    qh, cqh = L.dense_forward(place_in, params["place/w1"], params["place/b1"])
    qhr, mqh = L.relu_forward(qh)
    ql, cql = L.dense_forward(qhr, params["place/w2"], params["place/b2"])
    place_logits = ql[:, :, 0]

    if not want_cache:
        return pick_logits, place_logits, None
    cache = (c1, m1, c2, m2, c3, m3, ce, cp, cu, mu, cph, mph, cpl, cqh, mqh, cql,
             cells.shape, mask)
    return pick_logits, place_logits, cache


def _backward(params, cfg: PolicyConfig, cache, dpick, dplace):
    (c1, m1, c2, m2, c3, m3, ce, cp, cu, mu, cph, mph, cpl, cqh, mqh, cql,
     cells_shape, mask) = cache
    c3dim = cfg.vision_channels[2]
    grads = {}

    dql = dplace[:, :, None]
    dqhr, grads["place/w2"], grads["place/b2"] = L.dense_backward(dql, cql)
    dqh = L.relu_backward(dqhr, mqh)
    dplace_in, grads["place/w1"], grads["place/b1"] = L.dense_backward(dqh, cqh)
    dfused = dplace_in[:, :, :-1]  # one-hot pick plane is an input, not a parameter

    dpl = dpick[:, :, None]
    dphr, grads["pick/w2"], grads["pick/b2"] = L.dense_backward(dpl, cpl)
    dph = L.relu_backward(dphr, mph)
    dfused_pick, grads["pick/w1"], grads["pick/b1"] = L.dense_backward(dph, cph)
    dfused = dfused + dfused_pick

    dcells = dfused[:, :, :c3dim]
    du = dfused[:, :, c3dim:].sum(axis=1)

    dupre = L.relu_backward(du, mu)
    dpooled, grads["txt/w"], grads["txt/b"] = L.dense_backward(dupre, cu)
    demb, grads["txt/gates"] = L.gated_pool_backward(dpooled, cp)
    grads["txt/embed"] = L.embedding_backward(demb, ce)

    n = cells_shape[0]
    rows, cols = cfg.grid
    dr3 = dcells.reshape(n, rows, cols, c3dim)
    dh3 = L.relu_backward(dr3, m3)
    dr2, grads["vis/c3_w"], grads["vis/c3_b"] = L.conv2d_backward(dh3, c3)
    dh2 = L.relu_backward(dr2, m2)
    dr1, grads["vis/c2_w"], grads["vis/c2_b"] = L.conv2d_backward(dh2, c2)
    dh1 = L.relu_backward(dr1, m1)
    _, grads["vis/c1_w"], grads["vis/c1_b"] = L.conv2d_backward(dh1, c1)
    return grads


def loss_and_grads(params, cfg: PolicyConfig, images, ids, mask, pick_targets, place_targets):
    """Imitation loss and gradients with the place head teacher-forced."""
    n = images.shape[0]
    onehot = np.zeros((n, cfg.n_cells), dtype=images.dtype)
    onehot[np.arange(n), pick_targets] = 1.0
    pick_logits, place_logits, cache = _forward(
        params, cfg, images, ids, mask, pick_onehot=onehot, want_cache=True
    )
    pick_loss, pick_cache = L.softmax_ce_forward(pick_logits, pick_targets)
    place_loss, place_cache = L.softmax_ce_forward(place_logits, place_targets)
    dpick = L.softmax_ce_backward(pick_cache)
    dplace = L.softmax_ce_backward(place_cache)
    grads = _backward(params, cfg, cache, dpick, dplace)
    return float(pick_loss + place_loss), grads


# ---------------------------------------------------------------------------
# Public operations

def predict_action(model: PolicyModel, policy_input: PolicyInput) -> world.PickPlaceAction:
    """Argmax pick, then argmax place conditioned on it. Ties break row-major."""
    obs, instr = policy_input.observation, policy_input.instruction
    images = obs.image[None].astype(model.params.dtype, copy=False)
    ids, mask = pad_tokens([instr.tokens], model.cfg.max_tokens, dtype=model.params.dtype)
    pick_logits, place_logits, _ = _forward(model.params, model.cfg, images, ids, mask)
    return world.PickPlaceAction(
        argmax_cell(pick_logits[0], model.cfg.grid),
        argmax_cell(place_logits[0], model.cfg.grid),
    )


def imitation_loss(model: PolicyModel, policy_input: PolicyInput,
                   expert: world.PickPlaceAction) -> float:
    """Cross-entropy at the expert pick cell plus, teacher-forced, place cell."""
    obs, instr = policy_input.observation, policy_input.instruction
    images = obs.image[None].astype(model.params.dtype, copy=False)
    ids, mask = pad_tokens([instr.tokens], model.cfg.max_tokens, dtype=model.params.dtype)
    pick_t = np.array([cell_index(expert.pick_cell, model.cfg.grid)])
    place_t = np.array([cell_index(expert.place_cell, model.cfg.grid)])
    loss, _ = loss_and_grads(model.params, model.cfg, images, ids, mask, pick_t, place_t)
    return loss


def scripted_expert(scene: world.Scene, instruction: grammar.Instruction
                    ) -> Optional[world.PickPlaceAction]:
    """Oracle demonstrator. None when the instruction is infeasible or done.

    Placement: first matching on-table object in row-major cell order to the
    referenced container. move-out: first contained object (container id,
    then slot) to the first free cell in row-major order.
    """
    if instruction.family == "move-out":
        for cont in scene.containers:
            held = scene.contents(cont.container_id)
            if not held:
                continue
            free = scene.free_table_cells()
            if not free:
                return None
            return world.PickPlaceAction(cont.cell, free[0])
        return None

    target = None
    for cont in scene.containers:
        if cont.kind == instruction.container_kind and cont.color_id == instruction.container_color:
            target = cont
            break
    if target is None:
        return None
    matches = []
    for obj in scene.objects:
        if obj.location[0] != "table" or obj.shape_id != instruction.shape:
            continue
        if instruction.object_color is not None and obj.color_id != instruction.object_color:
            continue
        matches.append((obj.location[1], obj.location[2]))
    if not matches:
        return None
    return world.PickPlaceAction(min(matches), target.cell)


# ---------------------------------------------------------------------------
# Training

@dataclass(frozen=True)
class PolicyTrainConfig:
    epochs: int = 200
    batch_size: int = 32
    lr: float = 1e-3


def _to_arrays(samples, cfg: PolicyConfig, dtype):
    images = np.stack([s[0].observation.image for s in samples]).astype(dtype, copy=False)
    ids, mask = pad_tokens([s[0].instruction.tokens for s in samples], cfg.max_tokens, dtype=dtype)
    picks = np.array([cell_index(s[1].pick_cell, cfg.grid) for s in samples])
    places = np.array([cell_index(s[1].place_cell, cfg.grid) for s in samples])
    return images, ids, mask, picks, places


def train_policy(
    samples: Sequence[tuple[PolicyInput, world.PickPlaceAction]],
    train_cfg: PolicyTrainConfig = PolicyTrainConfig(),
    seed: int = 0,
    model: Optional[PolicyModel] = None,
    model_cfg: PolicyConfig = PolicyConfig(),
) -> tuple[PolicyModel, list[float]]:
    """Mini-batch behavior cloning. Returns (model, per-epoch mean loss).

    Pass an existing model to continue training from its weights
    (fine-tuning); otherwise a fresh one is initialized from the seed.
    """
    if not samples:
        raise TrainingError("empty training set")
    if model is None:
        model = init_policy(model_cfg, seed=seed)
    from .nn.optim import adam, optimizer_step

    images, ids, mask, picks, places = _to_arrays(samples, model.cfg, model.params.dtype)
    rng = make_rng(seed_sequence=np.random.SeedSequence([seed, 0x706F6C]))
    opt = adam(train_cfg.lr)
    n = len(samples)
    curve = []
    for epoch in range(train_cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, train_cfg.batch_size):
            sel = order[start:start + train_cfg.batch_size]
            loss, grads = loss_and_grads(
                model.params, model.cfg, images[sel], ids[sel], mask[sel],
                picks[sel], places[sel],
            )
            if not np.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss {loss} at epoch {epoch}, batch start {start}"
                )
            optimizer_step(opt, model.params, grads)
            total += loss * len(sel)
        curve.append(total / n)
    return model, curve


# ---------------------------------------------------------------------------
# Checkpoint glue

def policy_arrays(model: PolicyModel) -> dict[str, np.ndarray]:
    return dict(model.params.items())


def policy_meta(model: PolicyModel, extra: Optional[dict] = None) -> dict:
    meta = {"kind": "policy", "config": model.cfg.to_dict()}
    if extra:
        meta.update(extra)
    return meta


def policy_from_checkpoint(meta: dict, arrays: dict[str, np.ndarray]) -> PolicyModel:
    cfg = PolicyConfig.from_dict(meta["config"])
    template = init_policy(cfg, seed=0)
    for name in template.params.names():
        template.params[name] = arrays[name]
    return template
