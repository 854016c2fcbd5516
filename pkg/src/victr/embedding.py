"""Composed visual-semantic vectors and their 2-d principal-component views.

Object and relation words concatenate the basic embedding with six
positional embeddings (fixed order: left_of, right_of, above, below,
inside, surrounding); attribute words use the basic embedding alone. A
scene graph's per-object rows append mean-pooled attribute and relation
segments: object || attributes || relations.
"""

from dataclasses import dataclass

import numpy as np

from .gcn import EmbeddingTable
from .geometry import GEOMETRIC_RELATIONS
from .graphstore import ATTRIBUTE, OBJECT, RELATION, Vocabulary


@dataclass
class ComposedTables:
    basic_width: int  # B
    positional_width: int  # P, summed over the six graphs
    objects: dict[str, np.ndarray]
    relations: dict[str, np.ndarray]
    attributes: dict[str, np.ndarray]

    @property
    def full_width(self) -> int:
        return self.basic_width + self.positional_width

    @property
    def scene_width(self) -> int:
        # object segment + attribute segment + relation segment
        return 2 * self.full_width + self.basic_width

    def object_vector(self, word: str) -> np.ndarray:
        v = self.objects.get(word)
        return np.zeros(self.full_width) if v is None else v

    def relation_vector(self, word: str) -> np.ndarray:
        v = self.relations.get(word)
        return np.zeros(self.full_width) if v is None else v

    def attribute_vector(self, word: str) -> np.ndarray:
        v = self.attributes.get(word)
        return np.zeros(self.basic_width) if v is None else v


@dataclass
class VisualSemanticMatrix:
    rows: np.ndarray  # (n_objects, scene_width)
    object_ids: list[int]


def compose_tables(vocab: Vocabulary, basic: EmbeddingTable,
                   positional) -> ComposedTables:
    """Concatenate per-word basic and positional embeddings.

    positional maps each geometric relation name to its EmbeddingTable;
    entries missing from a positional table contribute zeros.
    """
    tables = [positional[p] for p in GEOMETRIC_RELATIONS]
    widths = {t.width for t in tables}
    if len(widths) != 1:
        raise ValueError(f"positional widths differ: {sorted(widths)}")
    p_each = widths.pop()
    b = basic.width
    for t in tables + [basic]:
        if t.n != len(vocab):
            raise ValueError(f"table size {t.n} does not match vocabulary {len(vocab)}")

    def concat(idx: int) -> np.ndarray:
        return np.concatenate([basic.vector(idx)] + [t.vector(idx) for t in tables])

    objects = {w: concat(i) for i, w in vocab.words_of_kind(OBJECT)}
    relations = {w: concat(i) for i, w in vocab.words_of_kind(RELATION)}
    attributes = {w: np.asarray(basic.vector(i)) for i, w in vocab.words_of_kind(ATTRIBUTE)}
    return ComposedTables(
        basic_width=b,
        positional_width=6 * p_each,
        objects=objects,
        relations=relations,
        attributes=attributes,
    )


def scene_visual_semantics(sg, tables: ComposedTables) -> VisualSemanticMatrix:
    """One row per scene-graph object: E_o || mean E_a || mean E_r.

    Attribute and relation segments are zero when the object has none;
    relations count whether the object is subject or object of the triple.
    """
    fw, bw = tables.full_width, tables.basic_width
    attrs_by_obj: dict[int, list[str]] = {}
    for oid, word in sg.attributes:
        attrs_by_obj.setdefault(oid, []).append(word)
    rels_by_obj: dict[int, list[str]] = {}
    for s, p, o in sg.relations:
        rels_by_obj.setdefault(s, []).append(p)
        rels_by_obj.setdefault(o, []).append(p)

    rows = np.zeros((len(sg.objects), tables.scene_width))
    ids = []
    for i, (oid, word, _) in enumerate(sg.objects):
        rows[i, :fw] = tables.object_vector(word)
        attr_words = attrs_by_obj.get(oid, [])
        if attr_words:
            rows[i, fw : fw + bw] = np.mean(
                [tables.attribute_vector(w) for w in attr_words], axis=0
            )
        rel_words = rels_by_obj.get(oid, [])
        if rel_words:
            rows[i, fw + bw :] = np.mean(
                [tables.relation_vector(w) for w in rel_words], axis=0
            )
        ids.append(oid)
    return VisualSemanticMatrix(rows=rows, object_ids=ids)


def pca_project(vectors, out_dim: int = 2, seed: int = 0) -> np.ndarray:
    """Mean-centered projection onto the top principal components.

    Components are covariance eigenvectors in descending eigenvalue order,
    each sign-fixed so its largest-magnitude coordinate is positive. The
    exact eigensolver is deterministic; seed is accepted for API parity
    with stochastic projectors.
    """
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("pca_project expects a 2-d array of row vectors")
    n = x.shape[0]
    if n < out_dim:
        raise ValueError(f"need at least {out_dim} vectors, got {n}")
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / (n - 1) if n > 1 else np.zeros((x.shape[1],) * 2)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(-eigvals, kind="stable")[:out_dim]
    components = eigvecs[:, order].T
    for k in range(components.shape[0]):
        j = int(np.argmax(np.abs(components[k])))
        if components[k, j] < 0:
            components[k] = -components[k]
    return centered @ components.T


def projection_rows(tables: ComposedTables, kind: str) -> tuple[list[str], np.ndarray]:
    """Word list and matching vector matrix for one composed-table kind.

    kind "joint" zero-pads every kind to the widest vector and pools them;
    per-kind projections are the canonical view.
    """
    groups = {
        OBJECT: tables.objects,
        RELATION: tables.relations,
        ATTRIBUTE: tables.attributes,
    }
    if kind in groups:
        items = sorted(groups[kind].items())
        words = [w for w, _ in items]
        return words, np.array([v for _, v in items])
    if kind == "joint":
        width = tables.full_width
        words, rows = [], []
        for k in (OBJECT, RELATION, ATTRIBUTE):
            for w, v in sorted(groups[k].items()):
                padded = np.zeros(width)
                padded[: v.shape[0]] = v
                words.append(f"{w}/{k}")
                rows.append(padded)
        return words, np.array(rows)
    raise ValueError(f"unknown projection kind {kind!r}")
