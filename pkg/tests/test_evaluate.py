"""Precision protocol, synthetic generators, and 2-D projections."""
import math

import numpy as np
import pytest

from accountsim.errors import ConfigError, EvaluationError
from accountsim.evaluate import (LabelSet, conditional_affinities, gen_planted_graph,
                                 gen_topic_corpus, precision_at_k, project_2d,
                                 projection_csv, report_table, tsne_project)
from accountsim.spaces import EmbeddingSpace


def line_space(values, ids=None):
    values = np.asarray(values, dtype=np.float64).reshape(-1, 1)
    if ids is None:
        ids = [chr(ord("a") + i) for i in range(len(values))]
    return EmbeddingSpace(name="fixture", account_ids=tuple(ids), vectors=values,
                          metric="euclidean", kind="content", seed=0)


class TestPrecisionAtK:
    def fixture(self):
        # Hand-built 6 points on a line. Positives: a, b, c, d.
        #   a=0.0, b=0.1, c=0.2 cluster; d=1.0 sits next to the negatives
        #   e=1.1, f=1.2.
        # Hand enumeration of each positive seed's 2 nearest neighbors:
        #   a -> b(0.1), c(0.2)   precision 1.0
        #   b -> a(0.1), c(0.1)   precision 1.0
        #   c -> b(0.1), a(0.2)   precision 1.0
        #   d -> e(0.1), f(0.2)   precision 0.0
        # mean p@2 = 3/4.
        space = line_space([0.0, 0.1, 0.2, 1.0, 1.1, 1.2])
        labels = LabelSet(labels={"a": 1, "b": 1, "c": 1, "d": 1, "e": 0, "f": 0})
        return space, labels

    def test_hand_fixture_is_exactly_three_quarters(self):
        space, labels = self.fixture()
        report = precision_at_k(space, labels, ks=(2,))
        assert report.p_at[2] == 0.75
        assert report.per_seed[2] == {"a": 1.0, "b": 1.0, "c": 1.0, "d": 0.0}

    def test_all_positive_gives_one(self):
        space = line_space(np.arange(5.0))
        labels = LabelSet(labels={a: 1 for a in space.account_ids})
        report = precision_at_k(space, labels, ks=(2, 4))
        assert report.p_at[2] == 1.0 and report.p_at[4] == 1.0

    def test_random_baseline_is_prevalence_of_candidates(self):
        # 101 nodes, 22 positive: baseline 22/100 = 0.22 exactly.
        space = line_space(np.arange(101.0), ids=[f"n{i:03d}" for i in range(101)])
        labels = LabelSet(labels={f"n{i:03d}": int(i < 22) for i in range(101)})
        report = precision_at_k(space, labels, ks=(10,))
        assert report.random_baseline == pytest.approx(0.22, abs=1e-9)

    def test_no_positives_is_error(self):
        space = line_space(np.arange(4.0))
        labels = LabelSet(labels={a: 0 for a in space.account_ids})
        with pytest.raises(EvaluationError):
            precision_at_k(space, labels, ks=(2,))

    def test_unknown_account_is_error(self):
        space, _ = self.fixture()
        with pytest.raises(EvaluationError):
            precision_at_k(space, LabelSet(labels={"zz": 1}), ks=(2,))

    def test_per_seed_values_are_multiples_of_one_over_k(self):
        space, labels = self.fixture()
        report = precision_at_k(space, labels, ks=(2, 3))
        for k in (2, 3):
            for value in report.per_seed[k].values():
                assert value in {i / k for i in range(k + 1)}

    def test_mean_invariant_to_label_iteration_order(self):
        space, labels = self.fixture()
        shuffled = LabelSet(labels=dict(reversed(list(labels.labels.items()))))
        assert precision_at_k(space, labels, ks=(2,)).p_at[2] == \
            precision_at_k(space, shuffled, ks=(2,)).p_at[2]

    def test_report_table_layout(self):
        space, labels = self.fixture()
        text = report_table([precision_at_k(space, labels, ks=(2,))])
        assert "Random Baseline" in text
        assert "p@2" in text and "0.750" in text


class TestPlantedGraph:
    def test_no_cross_block_edges_when_inter_zero(self):
        g, labels = gen_planted_graph([5, 5], intra_p=0.9, inter_p=0.0, seed=1)
        block = {a: labels.labels[a] for a in g.ids}
        for s, t in zip(g.sources, g.targets):
            assert block[g.ids[s]] == block[g.ids[t]]

    def test_full_intra_probability_gives_complete_blocks(self):
        g, _ = gen_planted_graph([5], intra_p=1.0, inter_p=0.0, seed=0)
        assert g.edge_count == 20  # 5*4 ordered pairs

    def test_expected_edge_count_within_three_sigma(self):
        sizes, intra, inter = [40, 40], 0.12, 0.02
        g, _ = gen_planted_graph(sizes, intra, inter, seed=3)
        intra_pairs = sum(b * (b - 1) for b in sizes)
        inter_pairs = 2 * sizes[0] * sizes[1]
        mean = intra_pairs * intra + inter_pairs * inter
        var = intra_pairs * intra * (1 - intra) + inter_pairs * inter * (1 - inter)
        assert abs(g.edge_count - mean) <= 3 * math.sqrt(var)

    def test_block_zero_labeled_positive(self):
        g, labels = gen_planted_graph([3, 4], intra_p=0.9, inter_p=0.1, seed=0)
        assert labels.positive_count == 3

    def test_reproducible_per_seed(self):
        g1, _ = gen_planted_graph([10, 10], 0.3, 0.05, seed=9)
        g2, _ = gen_planted_graph([10, 10], 0.3, 0.05, seed=9)
        assert g1.snapshot_bytes() == g2.snapshot_bytes()

    def test_requires_assortative_blocks(self):
        with pytest.raises(ConfigError):
            gen_planted_graph([5, 5], intra_p=0.1, inter_p=0.1)


class TestTopicCorpus:
    def labels(self, n=20):
        return LabelSet(labels={f"n{i:02d}": int(i < n // 2) for i in range(n)})

    def test_zero_noise_means_disjoint_class_vocabularies(self):
        docs = gen_topic_corpus(self.labels(), vocab_per_class=10, doc_len=50,
                                noise_frac=0.0, seed=0)
        class0 = set()
        class1 = set()
        for node, tokens in docs.items():
            (class0 if node < "n10" else class1).update(tokens)
        assert not class0 & class1

    def test_zero_length_documents(self):
        docs = gen_topic_corpus(self.labels(), doc_len=0, seed=0)
        assert all(tokens == [] for tokens in docs.values())

    def test_class_purity_tracks_noise_fraction(self):
        noise = 0.3
        labels = self.labels()
        docs = gen_topic_corpus(labels, vocab_per_class=20, doc_len=500,
                                noise_frac=noise, seed=2)
        own = 0
        total = 0
        for node, tokens in docs.items():
            c = labels.labels[node]
            own += sum(1 for t in tokens if t.startswith(f"c{c}w"))
            total += len(tokens)
        assert abs(own / total - (1 - noise)) < 0.02

    def test_bad_noise_fraction(self):
        with pytest.raises(ConfigError):
            gen_topic_corpus(self.labels(), noise_frac=1.0)


class TestPca2d:
    def test_collinear_second_component_vanishes(self):
        t = np.linspace(-1, 1, 12)
        space = EmbeddingSpace(name="s", account_ids=tuple(f"p{i}" for i in range(12)),
                               vectors=np.stack([t, 2 * t, 3 * t], axis=1),
                               metric="euclidean", kind="content")
        points = project_2d(space, method="pca")
        assert np.all(np.abs(points[:, 1]) < 1e-8)

    def test_csv_dump_format(self):
        space = EmbeddingSpace(name="s", account_ids=("a", "b"),
                               vectors=np.array([[0.0, 1.0], [1.0, 0.0]]),
                               metric="euclidean", kind="content")
        points = project_2d(space, method="pca")
        text = projection_csv(space, points, labels=LabelSet(labels={"a": 1, "b": 0}))
        lines = text.strip().splitlines()
        assert lines[0] == "account_id,x,y,label"
        assert lines[1].startswith("a,") and lines[1].endswith(",1")


def two_gaussians(n, seed, spread=8.0):
    rng = np.random.default_rng(seed)
    half = n // 2
    a = rng.standard_normal((half, 4)) + spread
    b = rng.standard_normal((n - half, 4)) - spread
    return np.vstack([a, b]), np.array([0] * half + [1] * (n - half))


def two_means(points, seed=0, iters=50):
    """Tiny Lloyd's algorithm used as the cluster-recovery oracle."""
    rng = np.random.default_rng(seed)
    centers = points[rng.choice(len(points), 2, replace=False)]
    labels = np.zeros(len(points), dtype=int)
    for _ in range(iters):
        d0 = np.linalg.norm(points - centers[0], axis=1)
        d1 = np.linalg.norm(points - centers[1], axis=1)
        labels = (d1 < d0).astype(int)
        for c in (0, 1):
            if np.any(labels == c):
                centers[c] = points[labels == c].mean(axis=0)
    return labels


class TestTsne:
    def test_conditional_entropy_matches_log_perplexity(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((60, 5))
        perplexity = 12.0
        p, betas = conditional_affinities(x, perplexity)
        # Independent entropy recomputation per row.
        for i in range(60):
            row = p[i, np.arange(60) != i]
            nz = row[row > 0]
            entropy = -float((nz * np.log(nz)).sum())
            assert abs(entropy - math.log(perplexity)) < 1e-4

    def test_conditional_rows_sum_to_one(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((40, 3))
        p, _ = conditional_affinities(x, 10.0)
        np.testing.assert_allclose(p.sum(axis=1), np.ones(40), atol=1e-9)

    def test_symmetrized_matrix_sums_to_one(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((30, 3))
        p, _ = conditional_affinities(x, 8.0)
        sym = (p + p.T) / (2 * 30)
        assert abs(sym.sum() - 1.0) < 1e-9

    def test_infeasible_perplexity_rejected(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((12, 2))
        with pytest.raises(ConfigError):
            tsne_project(x, perplexity=5.0)  # not < N/3

    def test_two_cluster_recovery_over_five_seeds(self):
        agreements = []
        for seed in range(5):
            x, truth = two_gaussians(100, seed)
            y = tsne_project(x, perplexity=15.0, iters=400, seed=seed)
            labels = two_means(y, seed=seed)
            agree = max(np.mean(labels == truth), np.mean(labels != truth))
            agreements.append(agree)
        assert np.median(agreements) >= 0.95

    def test_deterministic_per_seed(self):
        x, _ = two_gaussians(40, 0)
        y1 = tsne_project(x, perplexity=8.0, iters=260, seed=4)
        y2 = tsne_project(x, perplexity=8.0, iters=260, seed=4)
        np.testing.assert_array_equal(y1, y2)
