"""Corpus loaders: CoNLL-U dependency parses, caption JSON, instance JSON.

Captions arrive already dependency-parsed (CoNLL-U with ``# caption_id`` /
``# image_id`` comments); this module never runs a parser itself.
"""

import json
from dataclasses import dataclass, field


class ConlluError(ValueError):
    """Raised when a CoNLL-U file violates the expected format."""


@dataclass(frozen=True)
class Token:
    index: int  # 1-based position within the sentence
    surface: str
    lemma: str
    upos: str
    head: int  # 0 = sentence root
    deprel: str

    def __post_init__(self):
        if self.index < 1:
            raise ConlluError(f"token index {self.index} < 1")
        if self.head < 0:
            raise ConlluError(f"token {self.index}: negative head {self.head}")
        if self.head == self.index:
            raise ConlluError(f"token {self.index}: head points to itself")
        if not self.deprel:
            raise ConlluError(f"token {self.index}: empty deprel")

    @property
    def base_deprel(self) -> str:
        return self.deprel.split(":", 1)[0]


@dataclass(frozen=True)
class DependencyGraph:
    caption_id: str
    image_id: str
    tokens: tuple[Token, ...]

    def __post_init__(self):
        n = len(self.tokens)
        roots = 0
        for i, tok in enumerate(self.tokens, start=1):
            if tok.index != i:
                raise ConlluError(
                    f"caption {self.caption_id}: token indices not contiguous "
                    f"(expected {i}, got {tok.index})"
                )
            if tok.head > n:
                raise ConlluError(
                    f"caption {self.caption_id}: token {tok.index} head "
                    f"{tok.head} out of range 0..{n}"
                )
            if tok.head == 0:
                roots += 1
        if n and roots == 0:
            raise ConlluError(f"caption {self.caption_id}: no root token")


@dataclass(frozen=True)
class CaptionSet:
    # image_id -> [(caption_id, raw_text)] in annotation order
    captions: dict[str, list[tuple[str, str]]]

    def caption_ids(self):
        for entries in self.captions.values():
            for cid, _ in entries:
                yield cid


@dataclass(frozen=True)
class InstanceSet:
    # image_id -> [(category_name, super_class, (x, y, w, h))]
    boxes: dict[str, list[tuple[str, str, tuple[float, float, float, float]]]]
    categories: dict[str, str] = field(default_factory=dict)


def load_conllu(path) -> list[DependencyGraph]:
    """Read a CoNLL-U file into one DependencyGraph per sentence.

    Requires ``# caption_id = <id>`` and ``# image_id = <id>`` comments per
    sentence. Multi-word token ranges (``1-2``) and empty nodes (``1.1``)
    are skipped.
    """
    graphs = []
    meta: dict[str, str] = {}
    rows: list[tuple[int, list[str]]] = []

    def flush(line_no):
        if not rows and not meta:
            return
        if "caption_id" not in meta:
            raise ConlluError(
                f"{path}:{line_no}: sentence without '# caption_id =' comment"
            )
        if "image_id" not in meta:
            raise ConlluError(
                f"{path}:{line_no}: sentence without '# image_id =' comment"
            )
        tokens = []
        for ln, cols in rows:
            try:
                head = int(cols[6])
            except ValueError:
                raise ConlluError(f"{path}:{ln}: non-integer head {cols[6]!r}")
            try:
                tokens.append(
                    Token(
                        index=int(cols[0]),
                        surface=cols[1],
                        lemma=cols[2],
                        upos=cols[3],
                        head=head,
                        deprel=cols[7],
                    )
                )
            except ConlluError as e:
                raise ConlluError(f"{path}:{ln}: {e}")
        try:
            graphs.append(
                DependencyGraph(
                    caption_id=meta["caption_id"],
                    image_id=meta["image_id"],
                    tokens=tuple(tokens),
                )
            )
        except ConlluError as e:
            raise ConlluError(f"{path}:{line_no}: {e}")
        meta.clear()
        rows.clear()

    with open(path, encoding="utf-8") as f:
        line_no = 0
        for line_no, raw in enumerate(f, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                flush(line_no)
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, value = body.partition("=")
                    meta[key.strip()] = value.strip()
                continue
            cols = line.split("\t")
            if len(cols) != 10:
                raise ConlluError(
                    f"{path}:{line_no}: expected 10 tab-separated columns, got {len(cols)}"
                )
            tid = cols[0]
            if "-" in tid or "." in tid:  # multi-word range / empty node
                continue
            rows.append((line_no, cols))
        flush(line_no + 1)
    return graphs


def to_conllu(graphs) -> str:
    """Serialize DependencyGraphs back to CoNLL-U (unused columns as '_')."""
    chunks = []
    for g in graphs:
        lines = [f"# caption_id = {g.caption_id}", f"# image_id = {g.image_id}"]
        for t in g.tokens:
            lines.append(
                "\t".join(
                    [
                        str(t.index),
                        t.surface,
                        t.lemma,
                        t.upos,
                        "_",
                        "_",
                        str(t.head),
                        t.deprel,
                        "_",
                        "_",
                    ]
                )
            )
        chunks.append("\n".join(lines))
    return "\n\n".join(chunks) + ("\n" if chunks else "")


def load_captions(path) -> CaptionSet:
    """Load a COCO-style captions JSON (``annotations`` with image_id/id/caption)."""
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    if "annotations" not in doc:
        raise ValueError(f"{path}: missing 'annotations' list")
    captions: dict[str, list[tuple[str, str]]] = {}
    seen: set[str] = set()
    for i, ann in enumerate(doc["annotations"]):
        for fieldname in ("image_id", "id", "caption"):
            if fieldname not in ann:
                raise ValueError(f"{path}: annotation {i}: missing field '{fieldname}'")
        cid = str(ann["id"])
        if cid in seen:
            raise ValueError(f"{path}: annotation {i}: duplicate caption_id {cid}")
        seen.add(cid)
        captions.setdefault(str(ann["image_id"]), []).append((cid, ann["caption"]))
    return CaptionSet(captions=captions)


def load_instances(path) -> InstanceSet:
    """Load a COCO-style instances JSON: bounding boxes plus category table."""
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    for key in ("annotations", "categories"):
        if key not in doc:
            raise ValueError(f"{path}: missing '{key}' list")
    cat_name: dict[int, str] = {}
    cat_super: dict[str, str] = {}
    for i, cat in enumerate(doc["categories"]):
        for fieldname in ("id", "name", "supercategory"):
            if fieldname not in cat:
                raise ValueError(f"{path}: category {i}: missing field '{fieldname}'")
        name = cat["name"]
        if name in cat_super and cat_super[name] != cat["supercategory"]:
            raise ValueError(
                f"{path}: category {name!r} mapped to two super-classes"
            )
        cat_name[cat["id"]] = name
        cat_super[name] = cat["supercategory"]
    boxes: dict[str, list] = {}
    for i, ann in enumerate(doc["annotations"]):
        for fieldname in ("image_id", "category_id", "bbox"):
            if fieldname not in ann:
                raise ValueError(f"{path}: annotation {i}: missing field '{fieldname}'")
        if ann["category_id"] not in cat_name:
            raise ValueError(
                f"{path}: annotation {i}: unknown category_id {ann['category_id']}"
            )
        x, y, w, h = ann["bbox"]
        if w <= 0 or h <= 0:
            raise ValueError(
                f"{path}: annotation {i}: non-positive bbox size {w}x{h}"
            )
        name = cat_name[ann["category_id"]]
        boxes.setdefault(str(ann["image_id"]), []).append(
            (name, cat_super[name], (float(x), float(y), float(w), float(h)))
        )
    return InstanceSet(boxes=boxes, categories=cat_super)


def _id_sort_key(cid: str):
    # numeric ids compare numerically so "9" < "10"; mixed ids fall back to text
    s = str(cid)
    return (0, int(s), "") if s.isdigit() else (1, 0, s)


def select_richest_caption(captions) -> str:
    """Pick the caption whose scene graph has the most objects+relations+attributes.

    Ties break toward the lowest caption_id.
    """
    entries = list(captions)
    if not entries:
        raise ValueError("select_richest_caption: empty caption list")
    best_id, best_score = None, -1
    for cid, sg in entries:
        score = len(sg.objects) + len(sg.relations) + len(sg.attributes)
        if score > best_score or (
            score == best_score and _id_sort_key(cid) < _id_sort_key(best_id)
        ):
            best_id, best_score = cid, score
    return best_id
