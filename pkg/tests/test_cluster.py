from __future__ import annotations

import collections

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from aham.cluster import Assignment, ClustererConfig, cluster_hdbscan, core_distances


def labels_agree(la, lb) -> bool:
    """Same outlier set and a label bijection between the two clusterings."""
    la = np.asarray(la)
    lb = np.asarray(lb)
    if la.shape != lb.shape or not ((la == -1) == (lb == -1)).all():
        return False
    fwd = {}
    for a, b in zip(la, lb):
        if a == -1:
            continue
        if a in fwd and fwd[a] != b:
            return False
        fwd[a] = b
    return len(set(fwd.values())) == len(fwd)


def blobs(rng, centers, spread, sizes):
    pts = [c + rng.normal(0, spread, size=(m, len(c))) for c, m in zip(centers, sizes)]
    return np.vstack(pts)


# -------------------------------------------------------------- core distances


def test_core_distances_collinear():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    assert core_distances(pts, 1).tolist() == [1.0, 1.0, 1.0]


def test_core_distances_duplicates():
    pts = np.array([[1.0, 1.0], [1.0, 1.0], [3.0, 3.0]])
    assert core_distances(pts, 1).tolist()[:2] == [0.0, 0.0]


def test_core_distances_too_few_points():
    pts = np.zeros((5, 2))
    with pytest.raises(ValueError):
        core_distances(pts, 5)


def test_core_distances_second_neighbor():
    pts = np.array([[0.0], [1.0], [3.0]])
    assert core_distances(pts, 2).tolist() == [3.0, 2.0, 3.0]


# ------------------------------------------------------------------ clustering


def test_three_blobs_recovered():
    rng = np.random.default_rng(0)
    centers = [np.array([0.0, 0.0]), np.array([20.0, 0.0]), np.array([0.0, 20.0])]
    pts = blobs(rng, centers, 0.5, [30, 30, 30])
    asn = cluster_hdbscan(pts, ClustererConfig(min_cluster_size=5))
    assert asn.topic_count == 3
    assert asn.outlier_count <= 5
    planted = [i // 30 for i in range(90)]
    for topic in range(3):
        members = {planted[i] for i in asn.members(topic)}
        assert len(members) == 1


def test_small_corpus_all_outliers_degenerate():
    pts = np.random.default_rng(1).uniform(size=(3, 2))
    asn = cluster_hdbscan(pts, ClustererConfig(min_cluster_size=5))
    assert asn.topic_count == 0
    assert asn.outlier_count == 3
    assert asn.degenerate
    assert list(asn.labels) == [-1, -1, -1]


def test_uniform_spread_can_be_all_noise():
    rng = np.random.default_rng(2)
    pts = rng.uniform(-100, 100, size=(20, 3))
    asn = cluster_hdbscan(pts, ClustererConfig(min_cluster_size=5))
    # structureless data: every point may end up an outlier
    assert asn.topic_count * 5 + asn.outlier_count <= 20 or asn.outlier_count == 20


def test_duplicate_blob_appended_same_structure():
    rng = np.random.default_rng(3)
    centers = [np.array([0.0, 0.0]), np.array([15.0, 0.0]), np.array([0.0, 15.0])]
    pts = blobs(rng, centers, 0.4, [30, 30, 30])
    base = cluster_hdbscan(pts, ClustererConfig(min_cluster_size=5))
    doubled = np.vstack([pts, pts[:30]])
    again = cluster_hdbscan(doubled, ClustererConfig(min_cluster_size=5))
    assert again.topic_count == base.topic_count == 3
    assert labels_agree(base.labels, again.labels[:90])


def test_every_cluster_meets_min_size():
    rng = np.random.default_rng(4)
    for _ in range(10):
        pts = rng.normal(size=(rng.integers(12, 80), 3)) * rng.uniform(0.5, 3)
        mcs = int(rng.integers(3, 8))
        asn = cluster_hdbscan(pts, ClustererConfig(min_cluster_size=mcs))
        sizes = collections.Counter(l for l in asn.labels if l >= 0)
        assert all(n >= mcs for n in sizes.values())
        assert sorted(sizes) == list(range(asn.topic_count))


def test_permutation_equivariance_tie_free():
    # min_samples=1 keeps mutual reachability equal to plain distance, so
    # random continuous data has no ties and permutation is exact
    rng = np.random.default_rng(5)
    pts = blobs(rng, [np.zeros(3), np.full(3, 12.0)], 0.6, [20, 25])
    cfg = ClustererConfig(min_cluster_size=5, min_samples=1)
    base = cluster_hdbscan(pts, cfg)
    for _ in range(5):
        perm = rng.permutation(len(pts))
        back = np.empty(len(pts), dtype=int)
        back[perm] = np.arange(len(pts))
        permuted = cluster_hdbscan(pts[perm], cfg)
        assert labels_agree(base.labels, np.asarray(permuted.labels)[back])


def test_deterministic_repeat():
    rng = np.random.default_rng(6)
    pts = rng.normal(size=(60, 4))
    a = cluster_hdbscan(pts, ClustererConfig(min_cluster_size=4))
    b = cluster_hdbscan(pts, ClustererConfig(min_cluster_size=4))
    assert a.labels == b.labels


def test_leaf_selection_matches_reference():
    from sklearn.cluster import HDBSCAN as SkHDBSCAN

    rng = np.random.default_rng(7)
    pts = blobs(rng, [np.zeros(2), np.full(2, 10.0), np.array([10.0, -10.0])], 0.5, [20, 20, 20])
    eom = cluster_hdbscan(pts, ClustererConfig(min_cluster_size=5, selection="eom"))
    leaf = cluster_hdbscan(pts, ClustererConfig(min_cluster_size=5, selection="leaf"))
    assert leaf.topic_count >= eom.topic_count
    sk = SkHDBSCAN(min_cluster_size=5, cluster_selection_method="leaf").fit(pts)
    assert labels_agree(leaf.labels, sk.labels_)


def test_config_validation():
    with pytest.raises(ValueError):
        ClustererConfig(min_cluster_size=1)
    with pytest.raises(ValueError):
        ClustererConfig(metric="cosine")
    with pytest.raises(ValueError):
        ClustererConfig(selection="flat")
    assert ClustererConfig(min_cluster_size=7).min_samples == 7


def test_assignment_invariants_enforced():
    with pytest.raises(ValueError):
        Assignment(labels=(0, 2), topic_count=2, outlier_count=0)  # gap in labels
    with pytest.raises(ValueError):
        Assignment(labels=(0, -1), topic_count=1, outlier_count=0)  # wrong outlier count


def test_assignment_json_roundtrip(tmp_path):
    asn = Assignment(labels=(0, 0, 1, -1, 1), topic_count=2, outlier_count=1)
    path = tmp_path / "assignment.json"
    asn.save(path)
    again = Assignment.load(path)
    assert again == asn
    payload = path.read_text()
    assert '"T": 2' in payload and '"outliers": 1' in payload


@settings(max_examples=25, deadline=None)
@given(
    arrays(
        dtype=np.float64,
        shape=st.tuples(st.integers(10, 40), st.integers(2, 4)),
        elements=st.floats(-50, 50, allow_nan=False, allow_infinity=False),
    )
)
def test_label_contiguity_and_counts_hold(pts):
    asn = cluster_hdbscan(pts, ClustererConfig(min_cluster_size=4))
    seen = sorted({l for l in asn.labels if l >= 0})
    assert seen == list(range(asn.topic_count))
    assert asn.outlier_count == sum(1 for l in asn.labels if l == -1)
    sizes = collections.Counter(l for l in asn.labels if l >= 0)
    assert all(n >= 4 for n in sizes.values())
