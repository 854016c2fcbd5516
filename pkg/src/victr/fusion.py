"""Attention fusion of text features with per-object visual semantic vectors.

Word features attend over the scene's visual semantic rows (queries are the
words; keys and values are the visual rows) and the attended result is
concatenated back onto word and sentence features.
"""

import hashlib
from dataclasses import dataclass

import numpy as np

from .binio import EMBED_MAGIC, FUSED_MAGIC, read_container, write_container


@dataclass
class TextFeatures:
    words: np.ndarray  # (length, dim)
    sentence: np.ndarray  # (dim,)

    def __post_init__(self):
        if self.words.ndim != 2 or self.words.shape[0] < 1:
            raise ValueError(f"word matrix must be (L, D) with L >= 1, got {self.words.shape}")
        if self.sentence.shape != (self.words.shape[1],):
            raise ValueError(
                f"sentence width {self.sentence.shape} does not match words {self.words.shape}"
            )

    @property
    def length(self) -> int:
        return self.words.shape[0]

    @property
    def dim(self) -> int:
        return self.words.shape[1]


@dataclass
class FusionParameters:
    w: np.ndarray  # (text_dim, visual_dim)


@dataclass
class FusedRepresentation:
    word_repr: np.ndarray  # (L, D + V)
    sentence_repr: np.ndarray  # (D + V,)
    attention: np.ndarray  # (L, n_objects)


def init_fusion_parameters(text_dim: int, visual_dim: int, seed: int) -> FusionParameters:
    rng = np.random.default_rng(seed)
    lim = np.sqrt(6.0 / (text_dim + visual_dim))
    return FusionParameters(w=rng.uniform(-lim, lim, size=(text_dim, visual_dim)))


def _row_softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def attend(text: TextFeatures, vs_rows: np.ndarray,
           params: FusionParameters) -> tuple[np.ndarray, np.ndarray]:
    """Attention-pool the visual rows per word.

    scores = (words @ W) @ vs_rows.T, row-softmaxed into weights, then
    weights @ vs_rows. With no objects the pooled matrix is zero and the
    attention matrix is empty.
    """
    d = text.dim
    if params.w.shape[0] != d:
        raise ValueError(f"W maps width {params.w.shape[0]}, text width is {d}")
    v = params.w.shape[1]
    if vs_rows.size == 0:
        return np.zeros((text.length, v)), np.zeros((text.length, 0))
    if vs_rows.ndim != 2 or vs_rows.shape[1] != v:
        raise ValueError(f"visual rows width {vs_rows.shape} does not match W width {v}")
    scores = (text.words @ params.w) @ vs_rows.T
    attention = _row_softmax(scores)
    return attention @ vs_rows, attention


def victr_word(text: TextFeatures, attended: np.ndarray) -> np.ndarray:
    """Concatenate each word feature with its attended visual vector."""
    if attended.shape[0] != text.length:
        raise ValueError(
            f"attended rows {attended.shape[0]} != sequence length {text.length}"
        )
    return np.concatenate([text.words, attended], axis=1)


def victr_sentence(text: TextFeatures, attended: np.ndarray) -> np.ndarray:
    """Concatenate the sentence feature with the summed attended vectors."""
    return np.concatenate([text.sentence, attended.sum(axis=0)])


def fuse(text: TextFeatures, vs_rows: np.ndarray,
         params: FusionParameters) -> FusedRepresentation:
    attended, attention = attend(text, vs_rows, params)
    return FusedRepresentation(
        word_repr=victr_word(text, attended),
        sentence_repr=victr_sentence(text, attended),
        attention=attention,
    )


def builtin_text_features(tokens, seed: int, dim: int) -> TextFeatures:
    """Deterministic stand-in encoder: per-token seeded unit vectors.

    The sentence feature is the mean of the word vectors. Same tokens and
    seed always produce identical features (hash-derived, not process-
    dependent).
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    tokens = list(tokens)
    if not tokens:
        raise ValueError("builtin_text_features: empty token list")
    rows = np.zeros((len(tokens), dim))
    for i, tok in enumerate(tokens):
        digest = hashlib.sha256(f"{seed}\x00{tok}".encode("utf-8")).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
        v = rng.standard_normal(dim)
        rows[i] = v / np.linalg.norm(v)
    return TextFeatures(words=rows, sentence=rows.mean(axis=0))


def save_text_features(text: TextFeatures, path) -> None:
    header = {"kind": "text_features", "l": text.length, "d": text.dim}
    payload = (
        np.ascontiguousarray(text.words, dtype="<f4").tobytes()
        + np.ascontiguousarray(text.sentence, dtype="<f4").tobytes()
    )
    write_container(path, EMBED_MAGIC, header, payload)


def load_text_features(path, expect_dim: int | None = None) -> TextFeatures:
    header, payload = read_container(path, EMBED_MAGIC)
    if "l" not in header or "d" not in header:
        raise ValueError(f"{path}: not a text-features file (missing l/d header)")
    length, dim = header["l"], header["d"]
    if expect_dim is not None and dim != expect_dim:
        raise ValueError(f"{path}: file width {dim} != configured width {expect_dim}")
    expected = (length * dim + dim) * 4
    if len(payload) != expected:
        raise ValueError(f"{path}: payload size {len(payload)}, expected {expected}")
    flat = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    return TextFeatures(
        words=flat[: length * dim].reshape(length, dim),
        sentence=flat[length * dim :],
    )


def save_fused(fused: FusedRepresentation, path, caption_id: str,
               text_dim: int, visual_dim: int) -> None:
    length, n_obj = fused.attention.shape
    header = {
        "caption_id": caption_id,
        "l": length,
        "d": text_dim,
        "v": visual_dim,
        "n_obj": n_obj,
    }
    payload = b"".join(
        np.ascontiguousarray(a, dtype="<f4").tobytes()
        for a in (fused.attention, fused.word_repr, fused.sentence_repr)
    )
    write_container(path, FUSED_MAGIC, header, payload)


def load_fused(path) -> tuple[FusedRepresentation, dict]:
    header, payload = read_container(path, FUSED_MAGIC)
    length, d, v, n_obj = header["l"], header["d"], header["v"], header["n_obj"]
    sizes = (length * n_obj, length * (d + v), d + v)
    if len(payload) != sum(sizes) * 4:
        raise ValueError(f"{path}: payload size {len(payload)}, expected {sum(sizes) * 4}")
    flat = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    attention = flat[: sizes[0]].reshape(length, n_obj)
    word_repr = flat[sizes[0] : sizes[0] + sizes[1]].reshape(length, d + v)
    sentence_repr = flat[sizes[0] + sizes[1] :]
    return (
        FusedRepresentation(word_repr=word_repr, sentence_repr=sentence_repr,
                            attention=attention),
        header,
    )
