import numpy as np
import pytest

from victr.embedding import (
    compose_tables,
    pca_project,
    projection_rows,
    scene_visual_semantics,
)
from victr.gcn import EmbeddingTable
from victr.geometry import GEOMETRIC_RELATIONS
from victr.graphstore import build_vocabulary
from victr.sceneparse import SceneGraph


def sg(cid, objects, relations=(), attributes=()):
    return SceneGraph(
        caption_id=str(cid), image_id=str(cid),
        objects=tuple((i, w, "other") for i, w in enumerate(objects)),
        relations=tuple(relations),
        attributes=tuple(attributes),
    )


BASE_SG = sg(1, ["man", "horse"], relations=[(0, "ride", 1)],
             attributes=[(1, "brown")])


def _tables(b=200, p=50, seed=0, restrict_positional_to=None):
    vocab = build_vocabulary([BASE_SG])
    rng = np.random.default_rng(seed)
    basic = EmbeddingTable.from_dense(rng.standard_normal((len(vocab), b)))
    positional = {}
    for name in GEOMETRIC_RELATIONS:
        table = EmbeddingTable.from_dense(rng.standard_normal((len(vocab), p)))
        if restrict_positional_to is not None:
            table = table.restrict(restrict_positional_to)
        positional[name] = table
    return vocab, basic, positional


def test_composed_widths_default_dims():
    vocab, basic, positional = _tables()
    tables = compose_tables(vocab, basic, positional)
    assert tables.full_width == 500
    assert tables.object_vector("man").shape == (500,)
    assert tables.relation_vector("ride").shape == (500,)
    assert tables.attribute_vector("brown").shape == (200,)
    assert tables.scene_width == 1200


def test_missing_positional_entries_zero_filled():
    vocab, basic, positional = _tables(restrict_positional_to=[])
    tables = compose_tables(vocab, basic, positional)
    v = tables.object_vector("man")
    assert v.shape == (500,)
    assert v[:200].any() and not v[200:].any()


def test_unknown_words_map_to_zero_vectors():
    vocab, basic, positional = _tables()
    tables = compose_tables(vocab, basic, positional)
    assert not tables.object_vector("zzyzx").any()
    assert not tables.relation_vector("zzyzx").any()
    assert not tables.attribute_vector("zzyzx").any()


def test_width_mismatch_rejected():
    vocab, basic, positional = _tables()
    positional["above"] = EmbeddingTable.from_dense(
        np.zeros((len(vocab), 49))
    )
    with pytest.raises(ValueError, match="widths"):
        compose_tables(vocab, basic, positional)


def test_positional_segment_order_is_fixed():
    vocab, basic, positional = _tables(b=2, p=1)
    tables = compose_tables(vocab, basic, positional)
    idx = vocab.require("man", "object")
    want = np.concatenate(
        [basic.vector(idx)] + [positional[name].vector(idx) for name in GEOMETRIC_RELATIONS]
    )
    assert np.array_equal(tables.object_vector("man"), want)


def test_scene_row_layout_no_attributes():
    vocab, basic, positional = _tables()
    tables = compose_tables(vocab, basic, positional)
    vs = scene_visual_semantics(BASE_SG, tables)
    assert vs.rows.shape == (2, 1200)
    man_row = vs.rows[0]
    assert np.array_equal(man_row[:500], tables.object_vector("man"))
    assert not man_row[500:700].any()  # man has no attributes
    assert np.array_equal(man_row[700:], tables.relation_vector("ride"))


def test_scene_row_mean_pools_attributes():
    graph = sg(1, ["dog"], attributes=[(0, "brown"), (0, "big")])
    vocab = build_vocabulary([graph])
    rng = np.random.default_rng(1)
    basic = EmbeddingTable.from_dense(rng.standard_normal((len(vocab), 4)))
    positional = {
        name: EmbeddingTable.from_dense(np.zeros((len(vocab), 2)))
        for name in GEOMETRIC_RELATIONS
    }
    tables = compose_tables(vocab, basic, positional)
    vs = scene_visual_semantics(graph, tables)
    want = (tables.attribute_vector("brown") + tables.attribute_vector("big")) / 2
    fw = tables.full_width
    assert np.allclose(vs.rows[0, fw : fw + 4], want)


def test_scene_rows_differ_for_duplicate_words_with_different_attributes():
    graph = SceneGraph(
        caption_id="1", image_id="1",
        objects=((0, "dog", "other"), (1, "dog", "other")),
        attributes=((0, "brown"),),
        relations=(),
    )
    vocab = build_vocabulary([graph])
    rng = np.random.default_rng(2)
    basic = EmbeddingTable.from_dense(rng.standard_normal((len(vocab), 4)))
    positional = {
        name: EmbeddingTable.from_dense(np.zeros((len(vocab), 2)))
        for name in GEOMETRIC_RELATIONS
    }
    tables = compose_tables(vocab, basic, positional)
    vs = scene_visual_semantics(graph, tables)
    assert not np.array_equal(vs.rows[0], vs.rows[1])


def test_scene_relation_segment_pools_both_sides():
    graph = sg(1, ["man", "horse"], relations=[(0, "ride", 1)])
    vocab = build_vocabulary([graph])
    rng = np.random.default_rng(3)
    basic = EmbeddingTable.from_dense(rng.standard_normal((len(vocab), 4)))
    positional = {
        name: EmbeddingTable.from_dense(rng.standard_normal((len(vocab), 2)))
        for name in GEOMETRIC_RELATIONS
    }
    tables = compose_tables(vocab, basic, positional)
    vs = scene_visual_semantics(graph, tables)
    fw, bw = tables.full_width, tables.basic_width
    # horse is the object side of the triple; it still pools "ride"
    assert np.array_equal(vs.rows[1, fw + bw :], tables.relation_vector("ride"))


def test_scene_empty_graph():
    graph = sg(1, [])
    vocab, basic, positional = _tables()
    tables = compose_tables(vocab, basic, positional)
    vs = scene_visual_semantics(graph, tables)
    assert vs.rows.shape == (0, 1200)


def test_scene_permutation_equivariant():
    graph = sg(1, ["man", "horse", "dog"], relations=[(0, "ride", 1)],
               attributes=[(2, "brown")])
    flipped = SceneGraph(
        caption_id="1", image_id="1",
        objects=(graph.objects[2], graph.objects[0], graph.objects[1]),
        relations=graph.relations,
        attributes=graph.attributes,
    )
    vocab = build_vocabulary([graph])
    rng = np.random.default_rng(4)
    basic = EmbeddingTable.from_dense(rng.standard_normal((len(vocab), 4)))
    positional = {
        name: EmbeddingTable.from_dense(rng.standard_normal((len(vocab), 2)))
        for name in GEOMETRIC_RELATIONS
    }
    tables = compose_tables(vocab, basic, positional)
    a = scene_visual_semantics(graph, tables)
    b = scene_visual_semantics(flipped, tables)
    assert np.array_equal(b.rows[1], a.rows[0])
    assert np.array_equal(b.rows[0], a.rows[2])


def test_pca_identical_vectors_project_to_origin():
    coords = pca_project(np.ones((3, 5)), out_dim=2)
    assert np.allclose(coords, 0.0)


def test_pca_rank_one_spread():
    x = np.zeros((4, 2))
    x[:, 0] = [0.0, 1.0, 2.0, 3.0]
    coords = pca_project(x, out_dim=2)
    assert np.allclose(coords[:, 1], 0.0)
    assert not np.allclose(coords[:, 0], 0.0)


def test_pca_matches_svd_oracle():
    rng = np.random.default_rng(5)
    x = rng.standard_normal((10, 6))
    coords = pca_project(x, out_dim=2)
    centered = x - x.mean(axis=0)
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    oracle = centered @ vt[:2].T
    for k in range(2):
        sign = 1.0 if np.allclose(coords[:, k], oracle[:, k], atol=1e-8) else -1.0
        assert np.allclose(coords[:, k], sign * oracle[:, k], atol=1e-8)


def test_pca_retained_variance_matches_top_eigenvalues():
    rng = np.random.default_rng(6)
    x = rng.standard_normal((30, 5))
    coords = pca_project(x, out_dim=2)
    centered = x - x.mean(axis=0)
    eigvals = np.sort(np.linalg.eigvalsh(centered.T @ centered / 29))[::-1]
    got = coords.var(axis=0, ddof=1).sum()
    assert got == pytest.approx(eigvals[:2].sum(), rel=1e-10)


def test_pca_non_expansive_pairwise_distances():
    rng = np.random.default_rng(7)
    x = rng.standard_normal((12, 9))
    coords = pca_project(x, out_dim=2)
    for i in range(12):
        for j in range(i + 1, 12):
            orig = np.linalg.norm(x[i] - x[j])
            proj = np.linalg.norm(coords[i] - coords[j])
            assert proj <= orig + 1e-9


def test_pca_too_few_vectors():
    with pytest.raises(ValueError, match="at least 2"):
        pca_project(np.ones((1, 4)), out_dim=2)


def test_pca_deterministic():
    rng = np.random.default_rng(8)
    x = rng.standard_normal((9, 4))
    assert np.array_equal(pca_project(x), pca_project(x.copy()))


def test_projection_rows_kinds():
    vocab, basic, positional = _tables(b=4, p=2)
    tables = compose_tables(vocab, basic, positional)
    words, rows = projection_rows(tables, "object")
    assert words == ["horse", "man"]
    assert rows.shape == (2, 16)
    words, rows = projection_rows(tables, "joint")
    assert rows.shape == (4, 16)
    assert any(w.endswith("/attribute") for w in words)
    with pytest.raises(ValueError, match="unknown projection kind"):
        projection_rows(tables, "everything")
