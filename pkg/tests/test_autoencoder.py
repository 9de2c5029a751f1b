import numpy as np
import pytest
import scipy.sparse as sp

from embedder.autoencoder import (
    AutoencoderModel,
    AutoencoderTrainer,
    PairSet,
    RandomWalkConfig,
    ae_loss,
    build_pairs,
    decode,
    empirical_similarity,
    laplacian_eigenmaps_solve,
    loss_dims,
    pair_loss,
    positive_pairs,
    random_walk_corpus,
    reconstruction_auc,
    train_autoencoder,
)
from embedder.complex_core import build_complex
from embedder.errors import ComplexError, ConfigError, ShapeError
from embedder.numerics import finite_difference_check, make_rng


# ----- configuration -----

def test_mixed_triple_rejected():
    with pytest.raises(ConfigError):
        AutoencoderModel(method="inner_product", decoder="softmax_rw")


def test_laplacian_requires_shallow_encoder():
    with pytest.raises(ConfigError, match="shallow"):
        AutoencoderModel(method="laplacian", encoder="cxn")


def test_table_rows_fill_in():
    model = AutoencoderModel(method="random_walk")
    assert (model.decoder, model.similarity, model.loss) == ("softmax_rw", "random_walk", "neg_log_likelihood")


def test_cmps_loss_dims(two_triangles):
    model = AutoencoderModel(encoder="cxn", scheme="cmps")
    assert loss_dims(model, two_triangles) == [1]


# ----- random walks -----

def test_corpus_shape_and_determinism(triangle):
    cfg = RandomWalkConfig(walks_per_simplex=4, walk_length=5, window=2, seed=3)
    corpus = random_walk_corpus(triangle, 1, cfg)
    again = random_walk_corpus(triangle, 1, cfg)
    assert len(corpus) == 3 * 4
    assert all(len(w) == 5 for w in corpus)
    assert all(np.array_equal(a, b) for a, b in zip(corpus, again))
    # K3: every step moves to a different edge
    assert all(np.all(np.diff(w) != 0) for w in corpus)


def test_isolated_vertices_give_length_one_walks():
    X = build_complex([[0], [1], [2]])
    corpus = random_walk_corpus(X, 0, RandomWalkConfig(walks_per_simplex=3, walk_length=6))
    assert all(len(w) == 1 for w in corpus)


def test_k3_similarity_converges_to_half(triangle):
    cfg = RandomWalkConfig(walks_per_simplex=10_000, walk_length=2, window=1, seed=0)
    sim = empirical_similarity(random_walk_corpus(triangle, 1, cfg), cfg.window, 3)
    off_diagonal = sim.probs[~np.eye(3, dtype=bool)]
    assert np.all(np.abs(off_diagonal - 0.5) < 0.02)
    np.testing.assert_allclose(sim.probs.sum(axis=1), 1.0, atol=1e-9)


def test_populated_rows_sum_to_one(fifty_simplex_complex):
    cfg = RandomWalkConfig(walks_per_simplex=5, walk_length=6, window=2, seed=1)
    sim = empirical_similarity(random_walk_corpus(fifty_simplex_complex, 0, cfg), cfg.window, fifty_simplex_complex.counts[0])
    np.testing.assert_allclose(sim.probs[sim.populated].sum(axis=1), 1.0, atol=1e-9)
    # the isolated vertex never co-occurs with anything
    assert not sim.populated[10]


def test_single_simplex_corpus_row_absent():
    sim = empirical_similarity([np.array([0])], window=1, size=1)
    assert not sim.populated[0]


# ----- decoders -----

def test_decoders():
    assert decode("laplacian", [1.0, 2.0], [1.0, 2.0]) == 0.0
    assert decode("inner_product", [1.0, 0.0], [0.0, 1.0]) == 0.0
    context = make_rng(0, "ctx").normal(size=(4, 3))
    total = sum(decode("softmax_rw", context[1], c, context) for c in context)
    assert total == pytest.approx(1.0, abs=1e-9)


def test_softmax_needs_context():
    with pytest.raises(ShapeError):
        decode("softmax_rw", [1.0], [1.0], np.zeros((0, 1)))


# ----- losses -----

def test_perfect_reconstruction_has_zero_loss(triangle):
    model = AutoencoderModel(method="inner_product", negative_ratio=0)
    loss, grad = pair_loss(model, np.ones((3, 1)), positive_pairs(triangle, 0))
    assert loss == 0.0
    assert not grad.any()


def test_lap_product_collapse(two_triangles):
    model = AutoencoderModel(method="laplacian")
    loss, _ = pair_loss(model, np.full((5, 2), 0.3), positive_pairs(two_triangles, 1))
    assert loss == 0.0


def test_empty_pairs():
    loss, grad = pair_loss(AutoencoderModel(), np.ones((2, 2)), PairSet.empty())
    assert loss == 0.0 and not grad.any()


@pytest.mark.parametrize("method", ["inner_product", "laplacian"])
def test_dimension_without_adjacent_pairs(two_triangles, method):
    Z = np.ones((two_triangles.counts[2], 2))
    with pytest.warns(RuntimeWarning, match="no adjacent pairs at dimension 2"):
        loss, grad = ae_loss(AutoencoderModel(method=method), two_triangles, 2, Z)
    assert loss == 0.0
    assert not grad.any()


@pytest.mark.parametrize("method", ["laplacian", "inner_product", "random_walk"])
def test_pair_loss_gradients(fifty_simplex_complex, method):
    X = fifty_simplex_complex
    model = AutoencoderModel(method=method, embed_dim=4, negative_ratio=3)
    similarity = None
    if method == "random_walk":
        cfg = RandomWalkConfig(walks_per_simplex=5, walk_length=5, window=2)
        similarity = empirical_similarity(random_walk_corpus(X, 1, cfg), 2, X.counts[1])
    pairs = build_pairs(model, X, 1, rng=make_rng(0, "neg"), similarity=similarity)
    Z = make_rng(1, "Z").normal(0.0, 0.5, size=(X.counts[1], 4))
    _, grad = pair_loss(model, Z, pairs)
    error = finite_difference_check(lambda p: pair_loss(model, p["Z"], pairs)[0], {"Z": Z}, {"Z": grad})
    assert error < 1e-4


@pytest.mark.parametrize("scheme", ["amps", "hcmps"])
def test_cxn_objective_gradients(two_triangles, scheme):
    model = AutoencoderModel(method="inner_product", encoder="cxn", scheme=scheme, layers=2, embed_dim=3)
    trainer = AutoencoderTrainer(model, seed=4)
    X = two_triangles
    params = trainer.encoder.init_params(X, make_rng(4, "init"))
    pairs = {k: build_pairs(model, X, k, rng=make_rng(4, "pairs", k)) for k in loss_dims(model, X)}
    _, _, grads = trainer.objective(X, params, pairs)
    error = finite_difference_check(lambda p: trainer.objective(X, p, pairs)[0], params, grads)
    assert error < 1e-4


def test_disconnected_components_share_no_gradient():
    X = build_complex([[0, 1, 2], [3, 4, 5]])
    model = AutoencoderModel(method="inner_product", negative_ratio=0)
    pairs = positive_pairs(X, 0)
    Z = make_rng(0, "Z").normal(size=(6, 3))
    _, before = pair_loss(model, Z, pairs)
    Z[3:] += 1.0
    _, after = pair_loss(model, Z, pairs)
    np.testing.assert_array_equal(before[:3], after[:3])


# ----- Laplacian eigenmaps -----

def test_path_fiedler_vector():
    A = sp.csr_matrix(np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float))
    z = laplacian_eigenmaps_solve(A, 1).embedding[:, 0]
    assert z[0] > 0
    assert abs(z[1]) < 1e-9
    assert z[2] < 0


def check_eigen_solution(A, d):
    A = np.asarray(A, dtype=float)
    result = laplacian_eigenmaps_solve(sp.csr_matrix(A), d)
    Z = result.embedding
    D = np.diag(A.sum(axis=1))
    L = D - A
    Lam = np.diag(result.eigenvalues[0])
    np.testing.assert_allclose(Z.T @ D @ Z, np.eye(d), atol=1e-6)
    assert np.max(np.abs(L @ Z - D @ Z @ Lam)) < 1e-8


def test_k3_eigenmaps():
    check_eigen_solution(np.ones((3, 3)) - np.eye(3), 2)


def test_random_graph_eigenmaps(random_complexes):
    checked = 0
    for X in random_complexes(200, seed=21, vertices=10, max_dim=2, count=12):
        A = X.per_dim_adjacency(0).toarray()
        if X.counts[0] < 4 or laplacian_eigenmaps_solve(sp.csr_matrix(A), 1).labels.max() > 0:
            continue
        check_eigen_solution(A, 3)
        checked += 1
        if checked == 10:
            break
    assert checked == 10


def test_disconnected_eigenmaps_per_component():
    A = np.zeros((4, 4))
    A[0, 1] = A[1, 0] = A[2, 3] = A[3, 2] = 1.0
    result = laplacian_eigenmaps_solve(sp.csr_matrix(A), 1)
    assert list(result.labels) == [0, 0, 1, 1]
    for idx in ([0, 1], [2, 3]):
        z = result.embedding[idx, 0]
        assert z[0] == pytest.approx(-z[1])
        assert z @ z == pytest.approx(1.0)


def test_eigenmaps_dimension_too_large():
    A = sp.csr_matrix(np.ones((3, 3)) - np.eye(3))
    with pytest.raises(ConfigError, match="maximum is 2"):
        laplacian_eigenmaps_solve(A, 3)


def test_eigenmaps_empty():
    with pytest.raises(ComplexError):
        laplacian_eigenmaps_solve(sp.csr_matrix((0, 0)), 1)


# ----- training -----

def test_inner_product_training_decreases_loss(two_triangles):
    model = AutoencoderModel(method="inner_product", embed_dim=8)
    trained = train_autoencoder(two_triangles, model, epochs=500, seed=0)
    assert trained.log[-1]["total"] < trained.log[0]["total"]
    assert trained.embedding.shape == (two_triangles.n_hat, 8)
    assert set(trained.log[0]) == {"epoch", "loss_k", "total"}


def test_training_is_deterministic(two_triangles):
    model = AutoencoderModel(method="inner_product", encoder="cxn", embed_dim=4)
    a = train_autoencoder(two_triangles, model, epochs=30, seed=5).embedding
    b = train_autoencoder(two_triangles, model, epochs=30, seed=5).embedding
    assert a.tobytes() == b.tobytes()


def test_isomorphic_complexes_share_a_frame():
    model = AutoencoderModel(method="inner_product", encoder="cxn", embed_dim=4)
    first = build_complex([[0, 1, 2], [0, 2, 3]], name="fan_a", label="disk")
    second = build_complex([[0, 1, 2], [0, 2, 3]], name="fan_b", label="disk")
    a = train_autoencoder(first, model, epochs=30, seed=5).embedding
    b = train_autoencoder(second, model, epochs=30, seed=5).embedding
    np.testing.assert_array_equal(a, b)


def test_reconstruction_auc(fifty_simplex_complex):
    model = AutoencoderModel(method="inner_product", embed_dim=8)
    trained = train_autoencoder(fifty_simplex_complex, model, epochs=2000, learning_rate=0.01, seed=0)
    assert reconstruction_auc(model, fifty_simplex_complex, trained.embedding, dims=[0, 1]) >= 0.9


def test_laplacian_route(two_triangles):
    model = AutoencoderModel(method="laplacian", embed_dim=2)
    trained = train_autoencoder(two_triangles, model, epochs=10)
    assert trained.embedding.shape == (two_triangles.n_hat, 2)
    assert len(trained.log) == 1


def test_random_walk_training(two_triangles):
    model = AutoencoderModel(
        method="random_walk", encoder="cxn", embed_dim=4,
        walk=RandomWalkConfig(walks_per_simplex=5, walk_length=4, window=1),
    )
    trained = train_autoencoder(two_triangles, model, epochs=100, seed=2)
    assert np.all(np.isfinite(trained.embedding))
    assert trained.log[-1]["total"] < trained.log[0]["total"]


def test_progress_events(two_triangles):
    events = []
    trainer = AutoencoderTrainer(AutoencoderModel(embed_dim=2), epochs=3, progress_callback=lambda t, d: events.append(t))
    trainer.train(two_triangles)
    assert events == ["ae_started", "epoch", "epoch", "epoch"]


def test_zero_dimensional_complex_rejected():
    with pytest.raises(ComplexError):
        train_autoencoder(build_complex([[0]]), AutoencoderModel())
