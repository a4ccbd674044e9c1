"""Twin-tower cross-attention model over sampled subgraph pairs.

Inputs per subgraph: Y stacks the learnable latent rows of its nodes (feature
0 overwritten by a normalized log-degree, type embeddings added when node
types exist) and C = P_hat Y mixes them with the row-normalized reachability
attention. Two towers of b blocks refine Y and C; each block applies
parameter-free self-attention, multi-head cross-attention (query and key from
the opposite tower), and a feed-forward sublayer, every sublayer wrapped in a
residual sum plus layer norm. Padded rows are re-zeroed after each norm.

Heads: the structure task scores every node pair with a sigmoid of
M_y M_c^T (symmetrized by transpose averaging); the pattern task pools each
tower with attention weights, concatenates, and applies a linear classifier.

Ablation variants: 1 = single tower over Y, 2 = single tower over C,
3 = both towers without cross-attention, 4 = full model.
"""

from __future__ import annotations

import numpy as np

from sgevo import tensor as tc
from sgevo.tensor import Tensor


def make_batch(pairs, snapshot, k, pattern_labels=None):
    """Pack subgraph pairs into padded numpy arrays for the model.

    Returns a dict with node indices, degree features, type indices, the
    row-normalized attention matrix, the real-node mask, and labels (the
    next-step adjacency, plus optional per-pair pattern labels).
    """
    B = len(pairs)
    nodes = np.zeros((B, k), dtype=np.int64)
    deg = np.zeros((B, k), dtype=np.float64)
    types = np.zeros((B, k), dtype=np.int64)
    p_hat = np.zeros((B, k, k), dtype=np.float64)
    mask = np.zeros((B, k), dtype=np.float64)
    labels = np.zeros((B, k, k), dtype=np.float64)
    max_deg = snapshot.max_degree
    for b, pair in enumerate(pairs):
        n = pair.n
        if n > k:
            raise ValueError(f"pair has {n} nodes but k={k}")
        if pair.nodes.max() >= snapshot.num_nodes:
            raise ValueError("pair node id outside the node universe")
        nodes[b, :n] = pair.nodes
        deg[b, :n] = np.log1p(snapshot.degrees[pair.nodes]) / np.log1p(max_deg)
        if snapshot.node_types is not None:
            types[b, :n] = snapshot.node_types[pair.nodes]
        rows = pair.attention / pair.attention.sum(axis=1, keepdims=True)
        p_hat[b, :n, :n] = rows
        mask[b, :n] = 1.0
        labels[b, :n, :n] = pair.after.binary()
    batch = {"nodes": nodes, "deg": deg, "types": types, "p_hat": p_hat,
             "mask": mask, "labels_matrix": labels}
    if pattern_labels is not None:
        batch["labels"] = np.asarray(pattern_labels, dtype=np.float64)
    return batch


def _mask_pieces(mask):
    """Additive key bias (0 / -inf) and multiplicative row mask."""
    mask = np.asarray(mask, dtype=np.float64)
    bias = np.where(mask > 0, 0.0, -np.inf)[..., None, :]
    return bias, Tensor(mask[..., None])


def pair_mask(mask) -> np.ndarray:
    """Upper-triangular mask of real (i < j) node pairs per sample."""
    mask = np.asarray(mask, dtype=np.float64)
    both = mask[..., :, None] * mask[..., None, :]
    return np.triu(both, k=1)


def self_attention(x: Tensor, mask=None) -> Tensor:
    """softmax(X X^T / sqrt(D)) X with padded keys masked out.

    ``mask`` is a binary real-node vector (batched or not); padded rows of
    the output are zero.
    """
    d = x.shape[-1]
    scores = tc.scale(tc.matmul(x, tc.transpose_last2(x)), 1.0 / np.sqrt(d))
    if mask is None:
        return tc.matmul(tc.softmax_rows(scores), x)
    bias, row = _mask_pieces(mask)
    return tc.mul(tc.matmul(tc.softmax_rows(scores, bias), x), row)


def multi_head_attention(q, k, v, wq, wk, wv, wo, mask=None) -> Tensor:
    """Concat of full-width attention heads, then the output projection.

    ``wq``/``wk``/``wv`` are per-head D-by-D weight tensors, ``wo`` is
    (h*D)-by-D. Scores are scaled by 1/sqrt(D) of the full width.
    """
    d = q.shape[-1]
    bias, row = (None, None) if mask is None else _mask_pieces(mask)
    heads = []
    for i in range(len(wq)):
        qi = tc.matmul(q, wq[i])
        ki = tc.matmul(k, wk[i])
        vi = tc.matmul(v, wv[i])
        scores = tc.scale(tc.matmul(qi, tc.transpose_last2(ki)), 1.0 / np.sqrt(d))
        attn = tc.softmax_rows(scores, bias)
        heads.append(tc.matmul(attn, vi))
    out = tc.matmul(tc.concat(heads, axis=-1), wo)
    return out if row is None else tc.mul(out, row)


class TwinTowerModel:
    """Learnable parameters plus the forward passes for both tasks.

    Parameters
    ----------
    num_nodes : size of the node universe (one latent row per node)
    embed_dim : latent width D
    k : maximum subgraph size (padding target)
    blocks : attention blocks per tower
    heads : cross-attention head count
    num_types : node-type vocabulary (0 disables type embeddings)
    task : "structure" (next adjacency) or "pattern" (pattern emergence)
    variant : ablation variant 1-4 (4 = full model)
    """

    def __init__(self, num_nodes, embed_dim=128, k=10, blocks=6, heads=4,
                 num_types=0, task="structure", variant=4, seed=0,
                 dtype=np.float32):
        if task not in ("structure", "pattern"):
            raise ValueError(f"unknown task {task!r}")
        if variant not in (1, 2, 3, 4):
            raise ValueError(f"unknown variant {variant!r}")
        if embed_dim < 1 or blocks < 1 or heads < 1 or k < 3:
            raise ValueError("embed_dim, blocks, heads must be >= 1 and k >= 3")
        self.num_nodes = int(num_nodes)
        self.embed_dim = int(embed_dim)
        self.k = int(k)
        self.blocks = int(blocks)
        self.heads = int(heads)
        self.num_types = int(num_types)
        self.task = task
        self.variant = int(variant)
        self.dtype = dtype
        self.params: dict[str, Tensor] = {}
        rng = np.random.default_rng(seed)
        d, dff = self.embed_dim, 4 * self.embed_dim
        self._add("latent", rng.normal(0.0, 0.02, (num_nodes, d)), rng)
        if num_types:
            self._add("type_table", rng.normal(0.0, 0.02, (num_types, d)), rng)
        sides = ("main",) if variant in (1, 2) else ("left", "right")
        for side in sides:
            for i in range(self.blocks):
                p = f"{side}.b{i}"
                self._add_ln(f"{p}.ln1", d)
                if variant == 4:
                    for j in range(self.heads):
                        self._add(f"{p}.cross.q{j}", rng.normal(0.0, 0.02, (d, d)), rng)
                        self._add(f"{p}.cross.k{j}", rng.normal(0.0, 0.02, (d, d)), rng)
                        self._add(f"{p}.cross.v{j}", rng.normal(0.0, 0.02, (d, d)), rng)
                    self._add(f"{p}.cross.out", rng.normal(0.0, 0.02, (self.heads * d, d)), rng)
                    self._add_ln(f"{p}.ln2", d)
                self._add(f"{p}.ffn.w1", rng.normal(0.0, 0.02, (d, dff)), rng)
                self._add(f"{p}.ffn.b1", np.zeros(dff), rng)
                self._add(f"{p}.ffn.w2", rng.normal(0.0, 0.02, (dff, d)), rng)
                self._add(f"{p}.ffn.b2", np.zeros(d), rng)
                self._add_ln(f"{p}.ln3", d)
        if task == "pattern":
            self._add("classifier", rng.normal(0.0, 0.02, (2 * d, 1)), rng)

    def _add(self, name, arr, rng):
        self.params[name] = Tensor(np.asarray(arr), requires_grad=True, dtype=self.dtype)

    def _add_ln(self, prefix, d):
        self.params[f"{prefix}.gain"] = Tensor(np.ones(d), requires_grad=True, dtype=self.dtype)
        self.params[f"{prefix}.bias"] = Tensor(np.zeros(d), requires_grad=True, dtype=self.dtype)

    # ----- input assembly -------------------------------------------------

    def assemble_inputs(self, batch):
        """Build (Y, C) tensors from a packed batch; differentiable wrt the
        latent matrix and type table."""
        if batch["nodes"].max() >= self.num_nodes:
            raise ValueError("node index outside the latent matrix")
        d = self.embed_dim
        keep = np.ones(d)
        keep[0] = 0.0
        deg_mat = np.zeros(batch["deg"].shape + (d,))
        deg_mat[..., 0] = batch["deg"]
        y = tc.mul(tc.gather_rows(self.params["latent"], batch["nodes"]), Tensor(keep))
        y = tc.add(y, Tensor(deg_mat))
        if self.num_types:
            y = tc.add(y, tc.gather_rows(self.params["type_table"], batch["types"]))
        y = tc.mul(y, Tensor(batch["mask"][..., None]))
        c = tc.matmul(Tensor(batch["p_hat"]), y)
        return y, c

    # ----- towers ---------------------------------------------------------

    def _ln(self, prefix, x):
        return tc.layer_norm(x, self.params[f"{prefix}.gain"], self.params[f"{prefix}.bias"])

    def _ffn(self, prefix, x):
        h = tc.relu(tc.add(tc.matmul(x, self.params[f"{prefix}.w1"]),
                           self.params[f"{prefix}.b1"]))
        return tc.add(tc.matmul(h, self.params[f"{prefix}.w2"]), self.params[f"{prefix}.b2"])

    def _plain_block(self, p, m, mask, row):
        u = tc.mul(self._ln(f"{p}.ln1", tc.add(m, self_attention(m, mask))), row)
        return tc.mul(self._ln(f"{p}.ln3", tc.add(u, self._ffn(f"{p}.ffn", u))), row)

    def _full_block(self, p, m_own, m_other, mask, row):
        u = tc.mul(self._ln(f"{p}.ln1", tc.add(m_own, self_attention(m_own, mask))), row)
        wq = [self.params[f"{p}.cross.q{j}"] for j in range(self.heads)]
        wk = [self.params[f"{p}.cross.k{j}"] for j in range(self.heads)]
        wv = [self.params[f"{p}.cross.v{j}"] for j in range(self.heads)]
        ma = multi_head_attention(m_other, m_other, u, wq, wk, wv,
                                  self.params[f"{p}.cross.out"], mask)
        v = tc.mul(self._ln(f"{p}.ln2", tc.add(u, ma)), row)
        return tc.mul(self._ln(f"{p}.ln3", tc.add(v, self._ffn(f"{p}.ffn", v))), row)

    def forward(self, batch):
        """Run the towers; returns the two head inputs (identical for the
        single-tower variants)."""
        y, c = self.assemble_inputs(batch)
        mask = batch["mask"]
        row = Tensor(np.asarray(mask)[..., None])
        if self.variant in (1, 2):
            m = y if self.variant == 1 else c
            for i in range(self.blocks):
                m = self._plain_block(f"main.b{i}", m, mask, row)
            return m, m
        my, mc = y, c
        for i in range(self.blocks):
            if self.variant == 3:
                my = self._plain_block(f"left.b{i}", my, mask, row)
                mc = self._plain_block(f"right.b{i}", mc, mask, row)
            else:
                my, mc = (self._full_block(f"left.b{i}", my, mc, mask, row),
                          self._full_block(f"right.b{i}", mc, my, mask, row))
        return my, mc

    # ----- structure head ---------------------------------------------------

    @staticmethod
    def edge_probabilities(my: Tensor, mc: Tensor) -> Tensor:
        """sigmoid(M_y M_c^T), symmetrized by averaging with its transpose
        (exactly symmetric)."""
        m = tc.sigmoid(tc.matmul(my, tc.transpose_last2(mc)))
        return tc.scale(tc.add(m, tc.transpose_last2(m)), 0.5)

    def predict_structure(self, batch) -> Tensor:
        my, mc = self.forward(batch)
        return self.edge_probabilities(my, mc)

    @staticmethod
    def structure_loss(probs: Tensor, batch) -> Tensor:
        """Cross entropy summed over real i<j pairs, averaged over the batch."""
        pmask = Tensor(pair_mask(batch["mask"]))
        labels = Tensor(np.asarray(batch["labels_matrix"]))
        p = tc.clip(probs, 1e-7, 1.0 - 1e-7)
        term = tc.add(tc.mul(labels, tc.log(p)),
                      tc.mul(1.0 - labels, tc.log(1.0 - p)))
        total = tc.tsum(tc.mul(term, pmask))
        batch_size = probs.shape[0] if probs.ndim == 3 else 1
        return tc.scale(total, -1.0 / batch_size)

    # ----- pattern head -----------------------------------------------------

    def pool(self, my: Tensor, mc: Tensor, mask):
        """Attention-weighted pooling of both towers over real nodes.

        Returns (wy, wc, alpha, beta); the weight vectors each sum to 1.
        """
        mask = np.asarray(mask, dtype=np.float64)
        if mask.ndim == 1:
            mask = mask[None, :]
        bias = np.where(mask > 0, 0.0, -np.inf)[:, None, :]
        row = Tensor(mask[:, None, :])
        sum_c = tc.matmul(row, mc)
        sum_y = tc.matmul(row, my)
        alpha = tc.softmax_rows(tc.transpose_last2(tc.matmul(my, tc.transpose_last2(sum_c))), bias)
        beta = tc.softmax_rows(tc.transpose_last2(tc.matmul(mc, tc.transpose_last2(sum_y))), bias)
        return tc.matmul(alpha, my), tc.matmul(beta, mc), alpha, beta

    def predict_pattern(self, batch) -> Tensor:
        """Per-pair probability that the pattern emerges; shape (B,)."""
        my, mc = self.forward(batch)
        if my.ndim == 2:
            my = tc.reshape(my, (1,) + tuple(my.shape))
            mc = tc.reshape(mc, (1,) + tuple(mc.shape))
        wy, wc, _, _ = self.pool(my, mc, batch["mask"])
        logits = tc.matmul(tc.concat([wy, wc], axis=-1), self.params["classifier"])
        return tc.reshape(tc.sigmoid(logits), (logits.shape[0],))

    @staticmethod
    def pattern_loss(probs: Tensor, labels) -> Tensor:
        y = Tensor(np.asarray(labels, dtype=np.float64))
        p = tc.clip(probs, 1e-7, 1.0 - 1e-7)
        term = tc.add(tc.mul(y, tc.log(p)), tc.mul(1.0 - y, tc.log(1.0 - p)))
        return tc.scale(tc.tmean(term), -1.0)

    # ----- plumbing ---------------------------------------------------------

    def param_count(self) -> int:
        return int(sum(p.data.size for p in self.params.values()))

    def parameters(self):
        return list(self.params.values())

    def save(self, path) -> None:
        tc.save_checkpoint(self.params, path)

    def load(self, path) -> None:
        state = tc.load_checkpoint(path)
        missing = set(self.params) - set(state)
        if missing:
            raise ValueError(f"checkpoint missing tensors: {sorted(missing)}")
        for name, tensor in self.params.items():
            if state[name].shape != tensor.data.shape:
                raise ValueError(f"{name}: checkpoint shape {state[name].shape} "
                                 f"!= model shape {tensor.data.shape}")
            tensor.data = state[name].astype(tensor.data.dtype)


def build_inputs(pair, model: TwinTowerModel, snapshot):
    """(Y, C, mask) for a single pair, padded to the model's k."""
    batch = make_batch([pair], snapshot, model.k)
    y, c = model.assemble_inputs(batch)
    k, d = model.k, model.embed_dim
    return tc.reshape(y, (k, d)), tc.reshape(c, (k, d)), batch["mask"][0]
