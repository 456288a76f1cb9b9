"""
Tests for autoencoder training, gradient checks, latent optimization and generation.
"""

import numpy as np
import pytest

from src.errors import ModelError
from src.genvae import (
    FeatureSpace,
    QuadraticScoreHead,
    TrainingHyperparams,
    VaeArchitecture,
    VaeModel,
    generate,
    gradient_check,
    latent_optimize,
    train,
)


def _small_model(seed: int, activation: str = "tanh", n_counts: int = 2) -> VaeModel:
    architecture = VaeArchitecture(
        input_dim=5, n_counts=n_counts, latent_dim=2, hidden_dim=4, property_hidden_dim=3,
        activation=activation,
    )
    return VaeModel.initialize(architecture, seed)


def _params_equal(a: VaeModel, b: VaeModel) -> bool:
    return all(np.array_equal(a.params[k], b.params[k]) for k in a.params)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_gradient_check_random_models(seed):
    """Analytic gradients agree with central differences, noise and targets included."""
    rng = np.random.default_rng(seed)
    model = _small_model(seed)
    x = rng.normal(size=(4, 5))
    noise = rng.normal(size=(4, 2))
    targets = rng.uniform(0.0, 0.1, size=4)

    error = gradient_check(model, x, noise=noise, targets=targets, beta=0.7, property_weight=2.0)

    assert error < 1e-4


def test_gradient_check_linear_model_is_exact():
    """With linear layers and zero noise the loss is quadratic in each weight."""
    model = _small_model(4, activation="linear", n_counts=0)
    x = np.random.default_rng(4).normal(size=(3, 5))

    error = gradient_check(model, x, epsilon=1e-2, beta=0.0, property_weight=0.0)

    assert error < 1e-8


def test_gradient_check_detects_wrong_gradients():
    model = _small_model(5)
    x = np.random.default_rng(5).normal(size=(3, 5))
    _, grads = model.loss_and_grads(x, np.zeros((3, 2)))
    grads["dec_w2"] = grads["dec_w2"] + 0.1

    assert gradient_check(model, x, analytic=grads) > 1e-2


def test_gradient_check_epsilon_range():
    with pytest.raises(ModelError):
        gradient_check(_small_model(0), np.zeros((1, 5)), epsilon=0.1)


def test_overfits_single_sample():
    """One sample is reconstructed almost exactly."""
    model = _small_model(6)
    x = np.array([[0.5, 0.25, 0.3, -0.2, 0.1]])
    hyper = TrainingHyperparams(epochs=2000, batch_size=1, learning_rate=0.05, beta=0.0)

    trained, history = train(model, x, x, hyper, seed=6)

    assert not history.diverged
    assert trained.loss(x, np.zeros((1, 2)), beta=0.0).mse < 1e-3
    assert history.val_mse[-1] < history.val_mse[0]


def test_zero_learning_rate_keeps_weights():
    model = _small_model(7)
    x = np.random.default_rng(7).normal(size=(6, 5))
    hyper = TrainingHyperparams(epochs=3, batch_size=2, learning_rate=0.0)

    trained, history = train(model, x, x, hyper, seed=7)

    assert _params_equal(trained, model)
    assert len(history.rows()) == 3
    assert history.best_epoch == 1


def test_training_is_deterministic():
    """Same seed gives identical weights and history; the input model is untouched."""
    model = _small_model(8)
    original = model.copy()
    rng = np.random.default_rng(8)
    x, val = rng.normal(size=(10, 5)), rng.normal(size=(4, 5))
    targets, val_targets = rng.uniform(0, 0.1, 10), rng.uniform(0, 0.1, 4)
    hyper = TrainingHyperparams(epochs=5, batch_size=3)

    a, history_a = train(model, x, val, hyper, 8, targets, val_targets)
    b, history_b = train(model, x, val, hyper, 8, targets, val_targets)

    assert _params_equal(a, b)
    assert history_a == history_b
    assert _params_equal(model, original)


def test_training_divergence_keeps_finite_weights():
    model = _small_model(9, activation="linear")
    x = np.random.default_rng(9).normal(size=(8, 5)) * 10.0
    hyper = TrainingHyperparams(epochs=50, batch_size=8, learning_rate=1e6, momentum=0.0)

    with np.errstate(all="ignore"):
        trained, history = train(model, x, x, hyper, seed=9)

    assert history.diverged
    assert "non-finite" in history.message
    assert trained.is_finite()


def test_training_input_errors():
    model = _small_model(0)
    with pytest.raises(ModelError):
        train(model, np.zeros((0, 5)), np.zeros((1, 5)), TrainingHyperparams(epochs=1), 0)
    with pytest.raises(ModelError):
        train(model, np.zeros((2, 5)), np.zeros((1, 5)), TrainingHyperparams(epochs=1), 0, np.zeros(2))


def test_latent_optimize_zero_steps():
    z0 = np.array([[0.3, -0.2]])
    trajectory = latent_optimize(_small_model(0), z0, steps=0)

    assert np.array_equal(trajectory.z_final, z0)
    assert len(trajectory.objective) == 1
    assert trajectory.snapshots[0][0] == 0


def test_latent_optimize_zero_step_size():
    z0 = np.array([0.3, -0.2])
    trajectory = latent_optimize(_small_model(1), z0, steps=20, step_size=0.0)

    assert trajectory.z_final.shape == (2,)
    assert np.array_equal(trajectory.z_final, z0)


def test_quadratic_head_descends():
    """The inverse-score objective falls toward the head's optimum."""
    z0 = np.array([[3.0, -4.0], [0.5, 0.5]])
    trajectory = latent_optimize(None, z0, head=QuadraticScoreHead([0.0, 0.0]), trajectory_every=500)

    assert np.all(np.linalg.norm(trajectory.z_final, axis=1) < np.linalg.norm(z0, axis=1))
    steps = np.diff(trajectory.objective)
    assert np.mean(steps <= 1e-12) >= 0.95
    assert len(trajectory.snapshots) == 11
    assert not trajectory.frozen.any()


def test_max_step_norm_caps_updates():
    z0 = np.array([[30.0, 40.0]])
    head = QuadraticScoreHead([0.0, 0.0])
    trajectory = latent_optimize(None, z0, steps=1, step_size=1e9, head=head, max_step_norm=0.1)

    assert np.linalg.norm(trajectory.z_final - z0) == pytest.approx(0.1)


def test_latent_optimize_needs_a_score():
    with pytest.raises(ModelError):
        latent_optimize(None, np.zeros((1, 2)))


@pytest.fixture
def generator(tih2_record):
    """A model whose count outputs are biased well above zero."""
    space = FeatureSpace.fit([tih2_record])
    architecture = VaeArchitecture(
        input_dim=space.dim, n_counts=space.n_counts, latent_dim=2, hidden_dim=4, property_hidden_dim=3
    )
    model = VaeModel.initialize(architecture, seed=2)
    model.params["dec_b2"][: space.n_counts] = 3.0
    return model, space


def test_generate_returns_exactly_n(generator, tih2_record):
    model, space = generator
    candidates = generate(model, space, n=6, seed=3, templates=[tih2_record], steps=5)

    assert [c.id for c in candidates] == [f"gen-{i:04d}" for i in range(1, 7)]
    for candidate in candidates:
        assert candidate.composition.total_atoms > 0
        assert candidate.template_id == "tih2"
        assert candidate.structure.provenance == "template-derived:tih2"
        assert len(candidate.structure.sites) == candidate.composition.total_atoms
        assert candidate.predicted_score > 0.0


def test_generate_is_deterministic(generator):
    model, space = generator
    first = generate(model, space, n=4, seed=10, steps=5)
    second = generate(model, space, n=4, seed=10, steps=5)

    assert [c.formula_text for c in first] == [c.formula_text for c in second]
    assert [c.predicted_score for c in first] == [c.predicted_score for c in second]
    assert all(c.structure is None for c in first)


def test_generate_edge_cases(generator):
    model, space = generator
    assert generate(model, space, n=0, seed=1) == []
    with pytest.raises(ModelError):
        generate(model, space, n=-1, seed=1)


def test_generate_gives_up_on_empty_decodes(generator):
    """A decoder that only emits empty compositions stops at the draw limit."""
    model, space = generator
    model.params["dec_b2"][: space.n_counts] = -30.0
    model.params["dec_w2"][:, : space.n_counts] = 0.0

    assert generate(model, space, n=3, seed=1, steps=1, max_attempts=9) == []
