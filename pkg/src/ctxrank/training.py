"""Pair generation, pairwise losses, Adam, the training loop and gradient
checking.

Training minimizes the mean over mini-batch pairs of either

    hinge:    max(0, margin - (s_pos - s_neg))
    logistic: log(1 + exp(-(s_pos - s_neg)))

over all (higher grade, lower grade) document pairs within each query group.
Averaging (rather than summing) keeps the learning rate independent of the
batch size. The whole loop is a pure function of (dataset, embeddings,
config, seed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from . import dcn
from .corpus import Dataset
from .errors import DataError, NumericError
from .features import AblationMask, FeatureExtractor, MASKS, fit_normalizer, mask_name
from .model_io import RankerModel

LOSS_KINDS = ("hinge", "logistic")


@dataclass(frozen=True)
class TrainPair:
    query_id: str
    doc_id_pos: str
    doc_id_neg: str


@dataclass(frozen=True)
class TrainConfig:
    loss: str = "hinge"
    margin: float = 1.0
    learning_rate: float = 0.001
    batch_size: int = 32
    epochs: int = 30
    max_pairs_per_query: int = 100
    seed: int = 0
    mask: AblationMask = MASKS["full"]
    n_cross: int = 2
    hidden_widths: tuple[int, ...] = (64, 64)
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.loss not in LOSS_KINDS:
            raise ValueError(f"loss must be one of {LOSS_KINDS}, got {self.loss!r}")
        if self.margin < 0:
            raise ValueError(f"margin must be >= 0, got {self.margin}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValueError(f"batch size must be >= 1, got {self.batch_size}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")

    def echo(self) -> str:
        """Flat key=value block persisted into the model file."""
        lines = [
            f"loss={self.loss}",
            f"margin={self.margin}",
            f"learning_rate={self.learning_rate}",
            f"batch_size={self.batch_size}",
            f"epochs={self.epochs}",
            f"max_pairs_per_query={self.max_pairs_per_query}",
            f"seed={self.seed}",
            f"ablation={mask_name(self.mask)}",
            f"n_cross={self.n_cross}",
            f"hidden_widths={','.join(str(w) for w in self.hidden_widths)}",
            f"adam_beta1={self.beta1}",
            f"adam_beta2={self.beta2}",
            f"adam_eps={self.eps}",
        ]
        return "\n".join(lines) + "\n"


def make_pairs(query_id: str, labeled_docs, max_pairs: int, seed: int) -> list[TrainPair]:
    """All (i, j) pairs with label_i > label_j, subsampled to max_pairs.

    ``labeled_docs`` is a sequence of (doc_id, label). Enumeration is in
    index order; when more than max_pairs exist a seeded draw keeps a
    deterministic subset (in enumeration order). Ties produce no pair.
    """
    docs = list(labeled_docs)
    pairs = [
        TrainPair(query_id, docs[i][0], docs[j][0])
        for i in range(len(docs))
        for j in range(len(docs))
        if docs[i][1] > docs[j][1]
    ]
    if max_pairs is not None and len(pairs) > max_pairs:
        rng = np.random.default_rng(seed)
        keep = np.sort(rng.choice(len(pairs), size=max_pairs, replace=False))
        pairs = [pairs[i] for i in keep]
    return pairs


def hinge_pair_loss(score_pos: float, score_neg: float, margin: float = 1.0):
    """Pairwise hinge: returns (loss, dloss/ds_pos, dloss/ds_neg).

    At the kink (slack exactly zero) the subgradient is (0, 0).
    """
    slack = margin - (score_pos - score_neg)
    if slack > 0.0:
        return slack, -1.0, 1.0
    return 0.0, 0.0, 0.0


def logistic_pair_loss(score_pos: float, score_neg: float):
    """Pairwise logistic log(1 + exp(-(s_pos - s_neg))), numerically stable."""
    delta = score_pos - score_neg
    loss = float(np.logaddexp(0.0, -delta))
    g = float(expit(-delta))
    return loss, -g, g


def _pair_loss_batch(s_pos: np.ndarray, s_neg: np.ndarray, kind: str, margin: float):
    """Vectorized pair losses; returns (losses, dpos, dneg) arrays."""
    delta = s_pos - s_neg
    if kind == "hinge":
        slack = margin - delta
        active = slack > 0.0
        losses = np.where(active, slack, 0.0)
        dpos = np.where(active, -1.0, 0.0)
        return losses, dpos, -dpos
    losses = np.logaddexp(0.0, -delta)
    g = expit(-delta)
    return losses, -g, g


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def for_params(cls, params: dcn.DcnParams) -> "AdamState":
        arrays = params.as_list()
        return cls(m=[np.zeros_like(a) for a in arrays], v=[np.zeros_like(a) for a in arrays])


def adam_step(
    params: dcn.DcnParams, grads: dcn.DcnGrads, state: AdamState, config: TrainConfig
) -> tuple[dcn.DcnParams, AdamState]:
    """One bias-corrected Adam update; returns fresh params and state."""
    p_list = params.as_list()
    g_list = grads.as_list()
    if len(p_list) != len(g_list):
        raise ValueError("gradient structure does not match parameters")
    t = state.t + 1
    new_p, new_m, new_v = [], [], []
    for p, g, m, v in zip(p_list, g_list, state.m, state.v):
        if p.shape != g.shape:
            raise ValueError(f"shape mismatch: param {p.shape} vs grad {g.shape}")
        m = config.beta1 * m + (1.0 - config.beta1) * g
        v = config.beta2 * v + (1.0 - config.beta2) * g * g
        m_hat = m / (1.0 - config.beta1**t)
        v_hat = v / (1.0 - config.beta2**t)
        new_p.append(p - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.eps))
        new_m.append(m)
        new_v.append(v)
    return dcn.DcnParams.from_list(params, new_p), AdamState(m=new_m, v=new_v, t=t)


@dataclass
class EpochStats:
    epoch: int
    mean_loss: float
    pair_count: int


def _batch_loss_and_grads(params, X_pos, X_neg, kind, margin):
    """Mean pair loss over a batch plus gradients w.r.t. all parameters."""
    n = X_pos.shape[0]
    stacked = np.vstack([X_pos, X_neg])
    scores, cache = dcn.forward_batch(params, stacked)
    losses, dpos, dneg = _pair_loss_batch(scores[:n], scores[n:], kind, margin)
    dscores = np.concatenate([dpos, dneg]) / n
    grads = dcn.backward_batch(params, cache, dscores)
    return float(losses.mean()), grads


def train(
    dataset: Dataset, extractor: FeatureExtractor, config: TrainConfig
) -> tuple[RankerModel, list[EpochStats]]:
    """End-to-end training; returns the persisted-ready model and the
    per-epoch loss trajectory."""
    matrix, rows = extractor.feature_matrix(dataset, config.mask)
    if matrix.shape[0] < 2:
        raise DataError("dataset has fewer than 2 judged (query, doc) pairs")
    normalizer = fit_normalizer(matrix)
    features = normalizer.apply(matrix)
    row_index = {(qid, did): i for i, (qid, did, _) in enumerate(rows)}

    pos_idx: list[int] = []
    neg_idx: list[int] = []
    groups = dataset.judgments_by_query()
    for gi, query in enumerate(dataset.queries):
        labeled = [(j.doc_id, j.label) for j in groups[query.id]]
        for pair in make_pairs(query.id, labeled, config.max_pairs_per_query, config.seed + 9973 * gi):
            pos_idx.append(row_index[(query.id, pair.doc_id_pos)])
            neg_idx.append(row_index[(query.id, pair.doc_id_neg)])
    if not pos_idx:
        raise DataError("no trainable pairs: every query group has uniform labels")
    pos = np.array(pos_idx)
    neg = np.array(neg_idx)

    params = dcn.init(
        extractor.schema.total_dim, config.n_cross, list(config.hidden_widths), seed=config.seed
    )
    state = AdamState.for_params(params)
    shuffle_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 1]))

    history: list[EpochStats] = []
    for epoch in range(config.epochs):
        order = shuffle_rng.permutation(len(pos))
        total = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            loss, grads = _batch_loss_and_grads(
                params, features[pos[batch]], features[neg[batch]], config.loss, config.margin
            )
            if not np.isfinite(loss):
                raise NumericError(f"non-finite loss at epoch {epoch}, batch {start // config.batch_size}")
            total += loss * len(batch)
            params, state = adam_step(params, grads, state, config)
        history.append(EpochStats(epoch=epoch, mean_loss=total / len(pos), pair_count=len(pos)))

    model = RankerModel(
        schema=extractor.schema,
        normalizer=normalizer,
        params=params,
        mask=config.mask,
        config_echo=config.echo(),
    )
    return model, history


def history_tsv(history: list[EpochStats]) -> str:
    lines = ["epoch\tmean_pair_loss\tpair_count"]
    for h in history:
        lines.append(f"{h.epoch}\t{h.mean_loss:.10f}\t{h.pair_count}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Gradient checking
# ---------------------------------------------------------------------------

FD_STEP = 1e-4
# Relative error denominator floor: guards against finite-difference
# truncation noise (~1e-8) dominating components whose true value is ~0.
REL_FLOOR = 1e-3
# Minimum distance of every ReLU preactivation / hinge slack from its kink;
# a 1e-4 parameter probe moves preactivations far less than this.
KINK_MARGIN = 2e-3


def _random_check_setup(seed: int):
    """Draw a tiny model and pair batch whose loss surface is smooth within
    the probe radius (no ReLU or hinge kink within KINK_MARGIN)."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 77]))
    input_dim = int(rng.integers(2, 17))
    n_cross = int(rng.integers(1, 4))
    widths = [int(w) for w in rng.integers(2, 9, size=int(rng.integers(1, 3)))]
    n_pairs = 3
    for _ in range(200):
        sub = int(rng.integers(0, 2**31))
        params = dcn.init(input_dim, n_cross, widths, seed=sub)
        x = rng.uniform(-1.0, 1.0, size=(2 * n_pairs, input_dim))
        scores, cache = dcn.forward_batch(params, x)
        pre_ok = all(np.abs(p).min() > KINK_MARGIN for p in cache.hidden_pre if p.size)
        slack = 1.0 - (scores[:n_pairs] - scores[n_pairs:])
        if pre_ok and np.abs(slack).min() > KINK_MARGIN:
            return params, x[:n_pairs], x[n_pairs:]
    raise RuntimeError(f"could not find a kink-free configuration for seed {seed}")


def grad_check(seed: int, loss: str = "hinge", step: float = FD_STEP) -> float:
    """Compare analytic loss gradients against central finite differences
    over every parameter of a seeded random model; returns the worst
    guarded relative error."""
    if loss not in LOSS_KINDS:
        raise ValueError(f"loss must be one of {LOSS_KINDS}")
    params, x_pos, x_neg = _random_check_setup(seed)
    _, grads = _batch_loss_and_grads(params, x_pos, x_neg, loss, 1.0)

    def loss_at() -> float:
        value, _ = _batch_loss_and_grads(params, x_pos, x_neg, loss, 1.0)
        return value

    def rel_err(analytic: float, numeric: float) -> float:
        denom = max(abs(analytic), abs(numeric), REL_FLOOR)
        return abs(analytic - numeric) / denom

    # all entries except the trailing head bias are live references
    arrays = params.as_list()[:-1]
    grad_arrays = grads.as_list()[:-1]
    worst = 0.0
    for arr, garr in zip(arrays, grad_arrays):
        flat = arr.reshape(-1)
        gflat = garr.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = loss_at()
            flat[i] = orig - step
            down = loss_at()
            flat[i] = orig
            worst = max(worst, rel_err(gflat[i], (up - down) / (2.0 * step)))

    orig_b = params.head_b
    params.head_b = orig_b + step
    up = loss_at()
    params.head_b = orig_b - step
    down = loss_at()
    params.head_b = orig_b
    worst = max(worst, rel_err(grads.head_b, (up - down) / (2.0 * step)))
    return worst
