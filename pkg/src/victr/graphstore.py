"""Corpus-level relational graphs over the object/relation/attribute vocabulary.

One basic graph plus six positional graphs share a vocabulary. Edge weights
are conditional frequencies: object->relation edges normalize over the
object's relation successors, relation->object edges over the relation's
object successors, and object->attribute edges over the attribute's total
occurrences (attribute-conditioned). Every node carries self-weight 1.
"""

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .binio import GRAPH_MAGIC, read_container, write_container
from .errors import InvariantError
from .geometry import GEOMETRIC_RELATIONS, classify_geometric_relation

OBJECT, RELATION, ATTRIBUTE = "object", "relation", "attribute"
WEIGHT_SUM_TOL = 1e-9

EDGE_DTYPE = np.dtype(
    [("src", "<u4"), ("dst", "<u4"), ("count", "<u8"), ("weight", "<f8")]
)


@dataclass
class Vocabulary:
    nodes: list[tuple[str, str]]  # (word, kind) in first-appearance order
    index: dict[tuple[str, str], int] = field(default_factory=dict)
    object_super_class: dict[int, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.index:
            self.index = {node: i for i, node in enumerate(self.nodes)}

    def __len__(self) -> int:
        return len(self.nodes)

    def lookup(self, word: str, kind: str) -> int | None:
        return self.index.get((word, kind))

    def require(self, word: str, kind: str) -> int:
        idx = self.index.get((word, kind))
        if idx is None:
            raise KeyError(f"out-of-vocabulary {kind} word {word!r}")
        return idx

    def kind_of(self, idx: int) -> str:
        return self.nodes[idx][1]

    def words_of_kind(self, kind: str) -> list[tuple[int, str]]:
        return [(i, w) for i, (w, k) in enumerate(self.nodes) if k == kind]

    def content_hash(self) -> str:
        text = "\n".join(f"{w}\t{k}" for w, k in self.nodes)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


@dataclass
class RelationalGraph:
    vocab: Vocabulary
    kind: str  # "basic" or one of the six geometric relations
    counts: dict[tuple[int, int], int] = field(default_factory=dict)
    weights: dict[tuple[int, int], float] = field(default_factory=dict)

    def bump(self, src: int, dst: int, by: int = 1) -> None:
        self.counts[(src, dst)] = self.counts.get((src, dst), 0) + by

    def participants(self) -> list[int]:
        """Nodes touching at least one counted (non-self) edge, ascending."""
        seen = set()
        for (s, d), c in self.counts.items():
            if c > 0 and s != d:
                seen.add(s)
                seen.add(d)
        return sorted(seen)

    def edge_count(self) -> int:
        return sum(1 for c in self.counts.values() if c > 0)


def build_vocabulary(corpus) -> Vocabulary:
    """One node per distinct (word, kind), ordered by first appearance.

    Relation triples are walked subject, predicate, object, then
    attributes, then any leftover objects; an object node's super-class is
    the majority vote over its occurrences (ties: lexicographically first).
    """
    corpus = list(corpus)
    if not corpus:
        raise ValueError("build_vocabulary: empty corpus")
    nodes: list[tuple[str, str]] = []
    index: dict[tuple[str, str], int] = {}
    votes: dict[int, dict[str, int]] = {}

    def add(word: str, kind: str) -> int:
        key = (word, kind)
        if key not in index:
            index[key] = len(nodes)
            nodes.append(key)
        return index[key]

    for sg in corpus:
        words = {oid: word for oid, word, _ in sg.objects}
        supers = {oid: sup for oid, _, sup in sg.objects}

        def add_object(oid: int) -> None:
            idx = add(words[oid], OBJECT)
            tally = votes.setdefault(idx, {})
            tally[supers[oid]] = tally.get(supers[oid], 0) + 1

        for s, p, o in sg.relations:
            add_object(s)
            add(p, RELATION)
            add_object(o)
        for oid, attr in sg.attributes:
            add_object(oid)
            add(attr, ATTRIBUTE)
        for oid in words:
            add_object(oid)

    super_class = {}
    for idx, tally in votes.items():
        best = max(tally.items(), key=lambda kv: (kv[1], ))
        top = best[1]
        super_class[idx] = min(s for s, c in tally.items() if c == top)
    return Vocabulary(nodes=nodes, index=index, object_super_class=super_class)


def accumulate_counts(corpus, vocab: Vocabulary, kind: str = "basic") -> RelationalGraph:
    """Sum edge occurrences over the whole corpus into one graph.

    Attribute counts live on the display edge object->attribute; the count
    of that edge equals the number of times the attribute modified the
    object, which is exactly the attribute->object occurrence count.
    """
    g = RelationalGraph(vocab=vocab, kind=kind)
    for sg in corpus:
        words = {oid: word for oid, word, _ in sg.objects}
        for s, p, o in sg.relations:
            si = vocab.require(words[s], OBJECT)
            pi = vocab.require(p, RELATION)
            oi = vocab.require(words[o], OBJECT)
            g.bump(si, pi)
            g.bump(pi, oi)
        for oid, attr in sg.attributes:
            oi = vocab.require(words[oid], OBJECT)
            ai = vocab.require(attr, ATTRIBUTE)
            g.bump(oi, ai)
    return g


def merge_graphs(a: RelationalGraph, b: RelationalGraph) -> RelationalGraph:
    """Element-wise sum of counts (weights are left to compute_weights)."""
    if a.vocab is not b.vocab and a.vocab.nodes != b.vocab.nodes:
        raise ValueError("merge_graphs: vocabularies differ")
    if a.kind != b.kind:
        raise ValueError("merge_graphs: graph kinds differ")
    merged = RelationalGraph(vocab=a.vocab, kind=a.kind, counts=dict(a.counts))
    for key, c in b.counts.items():
        merged.counts[key] = merged.counts.get(key, 0) + c
    return merged


def compute_weights(graph: RelationalGraph) -> RelationalGraph:
    """Normalize counts into conditional-frequency weights; self-weights are 1.

    object->relation: by the object's total over relation successors;
    relation->object: by the relation's total over object successors;
    object->attribute: by the attribute's total over the objects it modifies.
    """
    vocab = graph.vocab
    out_totals: dict[int, int] = {}  # per-source totals for o->r and r->o edges
    attr_totals: dict[int, int] = {}  # per-attribute totals for o->a edges
    for (s, d), c in graph.counts.items():
        if c <= 0 or s == d:
            continue
        dk = vocab.kind_of(d)
        if dk == ATTRIBUTE:
            attr_totals[d] = attr_totals.get(d, 0) + c
        else:
            out_totals[s] = out_totals.get(s, 0) + c

    weights: dict[tuple[int, int], float] = {}
    for (s, d), c in graph.counts.items():
        if c <= 0 or s == d:
            continue
        if vocab.kind_of(d) == ATTRIBUTE:
            weights[(s, d)] = c / attr_totals[d]
        else:
            weights[(s, d)] = c / out_totals[s]
    for i in range(len(vocab)):
        weights[(i, i)] = 1.0
    graph.weights = weights
    return graph


def verify_weight_sums(graph: RelationalGraph, tol: float = WEIGHT_SUM_TOL) -> None:
    """Check that every per-node weight family sums to 1; raise InvariantError."""
    vocab = graph.vocab
    out_sums: dict[int, float] = {}
    attr_sums: dict[int, float] = {}
    for (s, d), w in graph.weights.items():
        if s == d:
            continue
        if vocab.kind_of(d) == ATTRIBUTE:
            attr_sums[d] = attr_sums.get(d, 0.0) + w
        else:
            out_sums[s] = out_sums.get(s, 0.0) + w
    for label, sums in (("successor", out_sums), ("attribute", attr_sums)):
        for node, total in sums.items():
            if abs(total - 1.0) > tol:
                word, kind = vocab.nodes[node]
                raise InvariantError(
                    f"{graph.kind} graph: {label} weight family of "
                    f"{kind} node {word!r} sums to {total!r}"
                )


def build_positional_graphs(corpus, vocab: Vocabulary, box_matches
                            ) -> dict[str, RelationalGraph]:
    """Split relation-triple counts across six graphs keyed by box geometry.

    box_matches runs parallel to corpus: per caption, a map object_id ->
    BoundingBox (may be empty). A triple contributes only when both of its
    objects have boxes, and then to exactly one graph.
    """
    graphs = {p: RelationalGraph(vocab=vocab, kind=p) for p in GEOMETRIC_RELATIONS}
    for sg, matches in zip(corpus, box_matches):
        if not matches:
            continue
        words = {oid: word for oid, word, _ in sg.objects}
        for s, p, o in sg.relations:
            if s not in matches or o not in matches:
                continue
            label = classify_geometric_relation(matches[s], matches[o])
            g = graphs[label]
            g.bump(vocab.require(words[s], OBJECT), vocab.require(p, RELATION))
            g.bump(vocab.require(p, RELATION), vocab.require(words[o], OBJECT))
    for g in graphs.values():
        compute_weights(g)
    return graphs


def normalized_adjacency(graph: RelationalGraph,
                         mirror_attribute_edges: bool = False) -> np.ndarray:
    """Degree-normalized adjacency: A_hat[i,j] = A[i,j] / sqrt(d_i * d_j).

    A is the weight matrix (self-loops of weight 1 included); d is the row
    sum. mirror_attribute_edges additionally transposes object->attribute
    edges, for sensitivity checks only.
    """
    if not graph.weights:
        raise ValueError("normalized_adjacency: call compute_weights first")
    n = len(graph.vocab)
    a = np.zeros((n, n))
    for (s, d), w in graph.weights.items():
        a[s, d] = w
    if mirror_attribute_edges:
        for (s, d), w in graph.weights.items():
            if s != d and graph.vocab.kind_of(d) == ATTRIBUTE:
                a[d, s] = max(a[d, s], w)
    deg = a.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(deg)  # deg >= 1 thanks to self-loops
    a_hat = a * inv_sqrt[:, None] * inv_sqrt[None, :]
    if not np.all(np.isfinite(a_hat)):
        raise InvariantError("normalized adjacency has non-finite entries")
    return a_hat


def serialize_graph(graph: RelationalGraph, path) -> None:
    keys = sorted(set(graph.counts) | set(graph.weights))
    records = np.zeros(len(keys), dtype=EDGE_DTYPE)
    for i, (s, d) in enumerate(keys):
        records[i] = (s, d, graph.counts.get((s, d), 0),
                      graph.weights.get((s, d), 0.0))
    vocab = graph.vocab
    header = {
        "kind": graph.kind,
        "n": len(vocab),
        "nnz": len(keys),
        "vocab": {
            "words": [w for w, _ in vocab.nodes],
            "kinds": [k for _, k in vocab.nodes],
            "super": {str(i): s for i, s in sorted(vocab.object_super_class.items())},
        },
    }
    write_container(path, GRAPH_MAGIC, header, records.tobytes())


def deserialize_graph(path) -> RelationalGraph:
    header, payload = read_container(path, GRAPH_MAGIC)
    nodes = list(zip(header["vocab"]["words"], header["vocab"]["kinds"]))
    super_class = {int(i): s for i, s in header["vocab"]["super"].items()}
    vocab = Vocabulary(nodes=nodes, object_super_class=super_class)
    records = np.frombuffer(payload, dtype=EDGE_DTYPE)
    if len(records) != header["nnz"]:
        raise ValueError(f"{path}: expected {header['nnz']} edges, got {len(records)}")
    graph = RelationalGraph(vocab=vocab, kind=header["kind"])
    for rec in records:
        key = (int(rec["src"]), int(rec["dst"]))
        if rec["count"]:
            graph.counts[key] = int(rec["count"])
        if rec["weight"]:
            graph.weights[key] = float(rec["weight"])
    return graph
