"""SLIC partition, region adjacency graph, and graph shortest paths."""

from __future__ import annotations

import numpy as np
import pytest
from skimage.measure import label as cc_label

from geoseg.errors import InvalidParameterError
from geoseg.imagecore import ImageBuffer
from geoseg.superpixel import (
    EDGE_WEIGHT_FLOOR,
    build_graph,
    multi_source_dijkstra,
    slic,
)

from helpers import floyd_warshall, random_connected_graph


def uniform_image(h, w, value=120):
    return ImageBuffer(np.full((h, w, 3), value, dtype=np.uint8))


def test_uniform_image_gives_regular_blocks():
    part = slic(uniform_image(64, 64), k_target=16, compactness=10, max_iters=10)
    assert part.k == 16
    assert (part.pixel_count == 256).all()
    # Every 16x16 tile carries exactly one label, distinct per tile.
    tiles = part.label.reshape(4, 16, 4, 16).transpose(0, 2, 1, 3).reshape(16, -1)
    assert all(np.unique(tile).size == 1 for tile in tiles)
    assert np.unique(tiles[:, 0]).size == 16


def test_single_pixel_image():
    part = slic(uniform_image(1, 1), k_target=1)
    assert part.k == 1
    assert part.pixel_count[0] == 1
    assert part.centroids[0] == pytest.approx([0.0, 0.0])


def test_two_tone_boundary_respected():
    px = np.zeros((32, 32, 3), dtype=np.uint8)
    px[:, 16:] = 255
    part = slic(ImageBuffer(px), k_target=2, compactness=1, max_iters=10)
    # No superpixel spans both colors.
    for k in range(part.k):
        cols = np.nonzero((part.label == k).any(axis=0))[0]
        assert cols.max() < 16 or cols.min() >= 16


def test_invalid_parameters():
    img = uniform_image(4, 4)
    with pytest.raises(InvalidParameterError):
        slic(img, k_target=0)
    with pytest.raises(InvalidParameterError):
        slic(img, k_target=17)
    with pytest.raises(InvalidParameterError):
        slic(img, k_target=4, compactness=0.0)
    with pytest.raises(InvalidParameterError):
        slic(img, k_target=4, max_iters=0)


def test_partition_invariants_random_images():
    rng = np.random.default_rng(11)
    for _ in range(8):
        h = int(rng.integers(9, 40))
        w = int(rng.integers(9, 40))
        k_target = int(rng.integers(1, min(h * w, 24) + 1))
        px = rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
        part = slic(ImageBuffer(px), k_target=k_target)
        assert part.k >= 1
        assert part.label.min() >= 0 and part.label.max() < part.k
        assert (part.pixel_count >= 1).all()
        assert part.pixel_count.sum() == h * w
        # 4-connectivity after the orphan pass.
        comp = cc_label(part.label, background=-1, connectivity=1)
        assert comp.max() == part.k
        # Centroids are the member-coordinate means.
        for k in (0, part.k - 1):
            ys, xs = np.nonzero(part.label == k)
            assert part.centroids[k, 0] == pytest.approx(xs.mean(), abs=1e-6)
            assert part.centroids[k, 1] == pytest.approx(ys.mean(), abs=1e-6)


def test_extreme_aspect_ratios_hit_target_count():
    rng = np.random.default_rng(3)
    for h, w, k_target in ((1, 100, 10), (100, 1, 7), (2, 200, 16), (3, 5, 15)):
        px = rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
        part = slic(ImageBuffer(px), k_target=k_target)
        assert part.pixel_count.sum() == h * w
        assert part.k == k_target


def test_slic_is_deterministic():
    rng = np.random.default_rng(2)
    px = rng.integers(0, 256, size=(25, 31, 3), dtype=np.uint8)
    a = slic(ImageBuffer(px), k_target=12)
    b = slic(ImageBuffer(px), k_target=12)
    assert np.array_equal(a.label, b.label)
    assert np.array_equal(a.centroids, b.centroids)


def test_graph_single_superpixel():
    g = build_graph(slic(uniform_image(5, 5), k_target=1))
    assert g.n_nodes == 1
    assert g.edges.shape == (0, 2)


def test_graph_identical_colors_weight_floor():
    part = slic(uniform_image(16, 8), k_target=2)
    g = build_graph(part)
    assert g.n_nodes == 2
    assert g.edges.shape == (1, 2)
    assert g.weights[0] == pytest.approx(EDGE_WEIGHT_FLOOR)


def test_graph_three_stripes_path_from_slic():
    px = np.zeros((10, 30, 3), dtype=np.uint8)
    px[:, 10:20] = 128
    px[:, 20:] = 255
    part = slic(ImageBuffer(px), k_target=3, compactness=1)
    assert part.k == 3
    g = build_graph(part)
    # Order stripes by centroid x; the edge set must be the path 0-1-2.
    order = np.argsort(part.centroids[:, 0])
    rank = np.empty(3, dtype=int)
    rank[order] = np.arange(3)
    ranked_edges = {tuple(sorted((rank[a], rank[b]))) for a, b in g.edges}
    assert ranked_edges == {(0, 1), (1, 2)}


def test_graph_three_stripes_path_handbuilt():
    # Brute-force oracle: enumerate pixel adjacencies of a known partition.
    from geoseg.superpixel import SuperpixelPartition

    label = np.repeat(np.arange(3, dtype=np.int32), 4)[None, :].repeat(6, axis=0)
    counts = np.bincount(label.ravel(), minlength=3).astype(np.int64)
    centroids = np.zeros((3, 2))
    colors = np.array([[0.0, 0, 0], [50.0, 0, 0], [100.0, 0, 0]])
    for k in range(3):
        ys, xs = np.nonzero(label == k)
        centroids[k] = (xs.mean(), ys.mean())
    part = SuperpixelPartition(
        label=label, centroids=centroids, mean_color=colors, pixel_count=counts
    )
    g = build_graph(part)
    assert {tuple(e) for e in g.edges.tolist()} == {(0, 1), (1, 2)}
    assert g.weights == pytest.approx([50.0 + EDGE_WEIGHT_FLOOR, 50.0 + EDGE_WEIGHT_FLOOR])


def test_graph_connected_on_random_images():
    rng = np.random.default_rng(9)
    for _ in range(5):
        px = rng.integers(0, 256, size=(20, 26, 3), dtype=np.uint8)
        part = slic(ImageBuffer(px), k_target=9)
        g = build_graph(part)
        # Union-find connectivity.
        parent = list(range(g.n_nodes))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for a, b in g.edges:
            parent[find(int(a))] = find(int(b))
        assert len({find(i) for i in range(g.n_nodes)}) == 1


def test_dijkstra_matches_floyd_warshall():
    rng = np.random.default_rng(17)
    for _ in range(25):
        g = random_connected_graph(rng, max_nodes=18)
        dense = floyd_warshall(g.n_nodes, g.edges, g.weights)
        n_src = int(rng.integers(1, g.n_nodes + 1))
        sources = rng.choice(g.n_nodes, size=n_src, replace=False)
        expect = dense[:, sources].min(axis=1)
        got = multi_source_dijkstra(g, sources)
        assert np.allclose(got, expect, atol=1e-12)


def test_dijkstra_monotone_under_seed_growth():
    rng = np.random.default_rng(23)
    for _ in range(10):
        g = random_connected_graph(rng, max_nodes=15)
        base = rng.choice(g.n_nodes, size=1)
        more = np.unique(np.concatenate([base, rng.choice(g.n_nodes, size=2)]))
        d_base = multi_source_dijkstra(g, base)
        d_more = multi_source_dijkstra(g, more)
        assert (d_more <= d_base + 1e-12).all()


def test_dijkstra_empty_sources_rejected():
    g = random_connected_graph(np.random.default_rng(0), max_nodes=5)
    with pytest.raises(InvalidParameterError):
        multi_source_dijkstra(g, np.array([], dtype=int))
