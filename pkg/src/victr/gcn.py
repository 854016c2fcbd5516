"""Two-layer graph convolutional network over a normalized adjacency.

Node features are one-hot identities, so the first layer weight doubles as
a node-embedding lookup mixed through the graph. Training is full-batch
gradient descent on a cross-entropy restricted to labeled object nodes;
the hidden activations are the node embeddings.
"""

from dataclasses import dataclass, field

import numpy as np

from .binio import EMBED_MAGIC, MODEL_MAGIC, read_container, write_container
from .errors import InvariantError
from .graphstore import OBJECT, Vocabulary


class TrainingDiverged(InvariantError):
    """Loss became non-finite during training."""


@dataclass
class GcnModel:
    w1: np.ndarray  # (n_vocab, hidden)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (hidden, n_classes)
    b2: np.ndarray  # (n_classes,)

    @property
    def n(self) -> int:
        return self.w1.shape[0]

    @property
    def hidden(self) -> int:
        return self.w1.shape[1]

    @property
    def n_classes(self) -> int:
        return self.w2.shape[1]

    def copy(self) -> "GcnModel":
        return GcnModel(self.w1.copy(), self.b1.copy(), self.w2.copy(), self.b2.copy())


@dataclass
class TrainConfig:
    learning_rate: float = 0.02
    epochs: int = 200
    seed: int = 7
    init_scale: float = 1.0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")


@dataclass
class EmbeddingTable:
    n: int
    width: int
    vectors: dict[int, np.ndarray] = field(default_factory=dict)

    def vector(self, idx: int) -> np.ndarray:
        v = self.vectors.get(idx)
        return np.zeros(self.width) if v is None else v

    def dense(self) -> np.ndarray:
        out = np.zeros((self.n, self.width))
        for i, v in self.vectors.items():
            out[i] = v
        return out

    @classmethod
    def from_dense(cls, arr: np.ndarray) -> "EmbeddingTable":
        return cls(n=arr.shape[0], width=arr.shape[1],
                   vectors={i: arr[i].copy() for i in range(arr.shape[0])})

    def restrict(self, indices) -> "EmbeddingTable":
        keep = set(indices)
        return EmbeddingTable(
            n=self.n, width=self.width,
            vectors={i: v for i, v in self.vectors.items() if i in keep},
        )


def init_model(n: int, hidden: int, n_classes: int, cfg: TrainConfig) -> GcnModel:
    """Xavier-uniform weights, zero biases, seeded for reproducibility."""
    rng = np.random.default_rng(cfg.seed)
    lim1 = cfg.init_scale * np.sqrt(6.0 / (n + hidden))
    lim2 = cfg.init_scale * np.sqrt(6.0 / (hidden + n_classes))
    return GcnModel(
        w1=rng.uniform(-lim1, lim1, size=(n, hidden)),
        b1=np.zeros(hidden),
        w2=rng.uniform(-lim2, lim2, size=(hidden, n_classes)),
        b2=np.zeros(n_classes),
    )


def forward(model: GcnModel, a_hat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """H1 = relu(A_hat W1 + b1); logits = A_hat H1 W2 + b2."""
    n = a_hat.shape[0]
    if a_hat.shape != (n, n) or model.n != n:
        raise ValueError(
            f"shape mismatch: adjacency {a_hat.shape} vs model n={model.n}"
        )
    h1 = np.maximum(a_hat @ model.w1 + model.b1, 0.0)
    logits = a_hat @ h1 @ model.w2 + model.b2
    return h1, logits


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def masked_cross_entropy(logits: np.ndarray, labels: dict[int, int]) -> float:
    """Mean negative log-likelihood over the labeled nodes only."""
    if not labels:
        raise ValueError("masked_cross_entropy: no labeled nodes")
    n_classes = logits.shape[1]
    for node, cls in labels.items():
        if not 0 <= cls < n_classes:
            raise ValueError(f"node {node}: label {cls} out of range 0..{n_classes - 1}")
    rows = np.fromiter(labels.keys(), dtype=int)
    cols = np.fromiter(labels.values(), dtype=int)
    logp = _log_softmax(logits[rows])
    return float(-logp[np.arange(len(rows)), cols].mean())


def _loss_and_grads(model: GcnModel, a_hat: np.ndarray, labels: dict[int, int]):
    pre1 = a_hat @ model.w1 + model.b1
    h1 = np.maximum(pre1, 0.0)
    z = a_hat @ h1
    logits = z @ model.w2 + model.b2

    rows = np.fromiter(labels.keys(), dtype=int)
    cols = np.fromiter(labels.values(), dtype=int)
    logp = _log_softmax(logits[rows])
    loss = float(-logp[np.arange(len(rows)), cols].mean())

    g = np.zeros_like(logits)
    probs = np.exp(logp)
    probs[np.arange(len(rows)), cols] -= 1.0
    g[rows] = probs / len(rows)

    dw2 = z.T @ g
    db2 = g.sum(axis=0)
    dz = g @ model.w2.T
    dh1 = a_hat.T @ dz
    dpre1 = dh1 * (pre1 > 0)
    dw1 = a_hat.T @ dpre1
    db1 = dpre1.sum(axis=0)
    return loss, (dw1, db1, dw2, db2)


def train(model: GcnModel, a_hat: np.ndarray, labels: dict[int, int],
          cfg: TrainConfig) -> tuple[GcnModel, list[float]]:
    """Full-batch gradient descent; returns the trained model and loss history."""
    model = model.copy()
    history = []
    for epoch in range(cfg.epochs):
        loss, (dw1, db1, dw2, db2) = _loss_and_grads(model, a_hat, labels)
        if not np.isfinite(loss):
            raise TrainingDiverged(f"non-finite loss at epoch {epoch}: {loss}")
        history.append(loss)
        model.w1 -= cfg.learning_rate * dw1
        model.b1 -= cfg.learning_rate * db1
        model.w2 -= cfg.learning_rate * dw2
        model.b2 -= cfg.learning_rate * db2
    return model, history


def accuracy(model: GcnModel, a_hat: np.ndarray, labels: dict[int, int]) -> float:
    _, logits = forward(model, a_hat)
    rows = np.fromiter(labels.keys(), dtype=int)
    cols = np.fromiter(labels.values(), dtype=int)
    return float((logits[rows].argmax(axis=1) == cols).mean())


def extract_embeddings(model: GcnModel, a_hat: np.ndarray) -> EmbeddingTable:
    h1, _ = forward(model, a_hat)
    return EmbeddingTable.from_dense(h1)


def gradient_check(model: GcnModel, a_hat: np.ndarray, labels: dict[int, int],
                   epsilon: float, n_coords: int = 120, seed: int = 0) -> float:
    """Central finite differences vs analytic gradients on random coordinates.

    Returns the max relative error, floored at 1e-12 in the denominator so
    dead-relu coordinates (both gradients ~0) do not blow up.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    _, grads = _loss_and_grads(model, a_hat, labels)
    params = [model.w1, model.b1, model.w2, model.b2]
    sizes = [p.size for p in params]
    total = sum(sizes)
    rng = np.random.default_rng(seed)
    picks = rng.choice(total, size=min(n_coords, total), replace=False)

    worst = 0.0
    for flat in np.sort(picks):
        pi, offset = 0, int(flat)
        while offset >= sizes[pi]:
            offset -= sizes[pi]
            pi += 1
        p = params[pi]
        orig = p.flat[offset]
        p.flat[offset] = orig + epsilon
        lo_plus = _loss_and_grads(model, a_hat, labels)[0]
        p.flat[offset] = orig - epsilon
        lo_minus = _loss_and_grads(model, a_hat, labels)[0]
        p.flat[offset] = orig
        numeric = (lo_plus - lo_minus) / (2 * epsilon)
        analytic = grads[pi].flat[offset]
        rel = abs(analytic - numeric) / max(abs(analytic) + abs(numeric), 1e-12)
        worst = max(worst, rel)
    return worst


def object_labels(vocab: Vocabulary) -> tuple[dict[int, int], list[str]]:
    """Super-class training labels for the object nodes of a vocabulary."""
    classes = sorted(set(vocab.object_super_class.values()))
    class_idx = {c: i for i, c in enumerate(classes)}
    labels = {
        node: class_idx[sup] for node, sup in sorted(vocab.object_super_class.items())
    }
    return labels, classes


def save_model(model: GcnModel, path, seed: int) -> None:
    header = {"n": model.n, "h": model.hidden, "mu": model.n_classes, "seed": seed}
    payload = b"".join(
        np.ascontiguousarray(p, dtype="<f8").tobytes()
        for p in (model.w1, model.b1, model.w2, model.b2)
    )
    write_container(path, MODEL_MAGIC, header, payload)


def load_model(path) -> tuple[GcnModel, int]:
    header, payload = read_container(path, MODEL_MAGIC)
    n, h, mu = header["n"], header["h"], header["mu"]
    expected = (n * h + h + h * mu + mu) * 8
    if len(payload) != expected:
        raise ValueError(f"{path}: payload size {len(payload)}, expected {expected}")
    flat = np.frombuffer(payload, dtype="<f8")
    off = 0

    def take(shape):
        nonlocal off
        size = int(np.prod(shape))
        out = flat[off : off + size].reshape(shape).copy()
        off += size
        return out

    model = GcnModel(w1=take((n, h)), b1=take((h,)), w2=take((h, mu)), b2=take((mu,)))
    return model, header["seed"]


def save_embeddings(table: EmbeddingTable, path, vocab_hash: str) -> None:
    header = {"n": table.n, "h": table.width, "vocab_hash": vocab_hash}
    dense = np.ascontiguousarray(table.dense(), dtype="<f4")
    write_container(path, EMBED_MAGIC, header, dense.tobytes())


def load_embeddings(path) -> tuple[EmbeddingTable, str]:
    header, payload = read_container(path, EMBED_MAGIC)
    n, h = header["n"], header["h"]
    if len(payload) != n * h * 4:
        raise ValueError(f"{path}: payload size {len(payload)}, expected {n * h * 4}")
    dense = np.frombuffer(payload, dtype="<f4").reshape(n, h).astype(np.float64)
    return EmbeddingTable.from_dense(dense), header.get("vocab_hash", "")
