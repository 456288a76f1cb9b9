"""
Tests for candidate descriptors, the autoencoder network and checkpoints.
"""

import json

import numpy as np
import pytest

from src.errors import CheckpointError, MissingInputError, ModelError
from src.genvae import (
    CandidateVector,
    FeatureSpace,
    VaeArchitecture,
    VaeModel,
    featurize,
    kl_divergence,
    load_checkpoint,
    reparameterize,
    save_checkpoint,
)
from src.models.material import MaterialRecord


@pytest.fixture
def small_architecture():
    return VaeArchitecture(input_dim=8, n_counts=2, latent_dim=3, hidden_dim=5, property_hidden_dim=4)


def test_featurize_orders_vocab_by_atomic_number(tih2_record):
    """TiH2 over vocabulary [H, Ti] has counts [2, 1]."""
    space = FeatureSpace.fit([tih2_record])
    vector = featurize(tih2_record, space)

    assert space.vocab == ("H", "Ti")
    assert vector.element_counts == (2.0, 1.0)
    assert vector.lattice == (3.0, 3.0, 4.4, 90.0, 90.0, 90.0)
    assert space.count_scale == 2.0
    assert space.dim == 8


def test_featurize_outside_vocabulary(tih2_record):
    space = FeatureSpace(vocab=("H", "Mg"))
    with pytest.raises(ModelError, match="not in the vocabulary"):
        featurize(tih2_record, space)


def test_featurize_without_structure_uses_mean_lattice(tih2_record):
    space = FeatureSpace.fit([tih2_record])
    bare = MaterialRecord(id="bare", formula="TiH4", e_form=-0.1)

    assert featurize(bare, space).lattice == space.lattice_mean


def test_feature_space_encode_decode(tih2_record):
    """Decoding an encoded vector gives the vector back."""
    space = FeatureSpace.fit([tih2_record])
    vector = featurize(tih2_record, space)
    x = space.encode([vector])

    assert x.shape == (1, 8)
    assert x[0, :2] == pytest.approx([1.0, 0.5])
    decoded = space.decode(x)[0]
    assert decoded.element_counts == pytest.approx(vector.element_counts)
    assert decoded.lattice == pytest.approx(vector.lattice)


def test_decode_clips_negative_counts(tih2_record):
    space = FeatureSpace.fit([tih2_record])
    decoded = space.decode(np.array([[-0.4, 0.6, 0, 0, 0, 0, 0, 0]]))[0]

    assert decoded.element_counts[0] == 0.0
    assert decoded.rounded().composition().counts == {"Ti": 1}


def test_candidate_vector_rounding():
    vector = CandidateVector(vocab=("H", "Mg"), element_counts=(1.6, 0.4))
    rounded = vector.rounded()

    assert rounded.element_counts == (2.0, 0.0)
    assert rounded.composition().counts == {"H": 2}
    assert CandidateVector(vocab=("H", "Mg"), element_counts=(0.3, 0.2)).is_empty
    with pytest.raises(ModelError):
        CandidateVector(vocab=("H",), element_counts=(0.1,)).composition()
    with pytest.raises(ValueError):
        CandidateVector(vocab=("H",), element_counts=(-1.0,))


def test_zero_model_encodes_biases(small_architecture):
    """With zero weights, mu and log_var equal the output biases."""
    model = VaeModel.zeros(small_architecture)
    model.params["enc_b2"] = np.arange(6, dtype=float)
    mu, log_var = model.encode(np.ones((2, 8)))

    assert mu.tolist() == [[0.0, 1.0, 2.0]] * 2
    assert log_var.tolist() == [[3.0, 4.0, 5.0]] * 2


def test_hand_computed_encode():
    """A 2-2-1 tanh encoder matches a worked example."""
    architecture = VaeArchitecture(input_dim=2, n_counts=0, latent_dim=1, hidden_dim=2)
    model = VaeModel.zeros(architecture)
    model.params["enc_w1"] = np.eye(2)
    model.params["enc_w2"] = np.array([[1.0, 0.0], [0.0, 2.0]])
    model.params["enc_b2"] = np.array([0.5, -1.0])

    mu, log_var = model.encode(np.array([1.0, 2.0]))

    assert mu[0, 0] == pytest.approx(np.tanh(1.0) + 0.5)
    assert log_var[0, 0] == pytest.approx(2.0 * np.tanh(2.0) - 1.0)


@pytest.mark.parametrize(
    "mu,log_var,noise,expected",
    [
        ([0.0], [0.0], [1.0], [1.0]),
        ([1.0], [np.log(4.0)], [0.5], [2.0]),
        ([2.0, -1.0], [0.0, 0.0], [0.0, 0.0], [2.0, -1.0]),
    ],
)
def test_reparameterize(mu, log_var, noise, expected):
    assert reparameterize(mu, log_var, noise) == pytest.approx(expected)


def test_reparameterize_shape_mismatch():
    with pytest.raises(ModelError):
        reparameterize([0.0, 0.0], [0.0], [1.0, 1.0])


def test_kl_divergence():
    """KL is zero at the prior and 0.5 for a unit mean shift."""
    assert kl_divergence(np.zeros((1, 2)), np.zeros((1, 2))) == pytest.approx(0.0)
    assert kl_divergence(np.array([[1.0]]), np.array([[0.0]])) == pytest.approx(0.5)
    assert kl_divergence(np.array([[0.0], [1.0]]), np.zeros((2, 1))) == pytest.approx(0.25)


def test_decoded_counts_are_non_negative(small_architecture, rng):
    model = VaeModel.initialize(small_architecture, seed=3)
    out = model.decode(rng.normal(scale=5.0, size=(50, 3)))

    assert out.shape == (50, 8)
    assert np.all(out[:, :2] >= 0.0)
    assert np.all(model.predict_score(rng.normal(size=(10, 3))) > 0.0)


def test_initialize_is_seeded(small_architecture):
    a = VaeModel.initialize(small_architecture, seed=5)
    b = VaeModel.initialize(small_architecture, seed=5)

    assert all(np.array_equal(a.params[k], b.params[k]) for k in a.params)
    assert not np.array_equal(a.params["enc_w1"], VaeModel.initialize(small_architecture, 6).params["enc_w1"])


def test_model_rejects_bad_weights(small_architecture):
    params = VaeModel.zeros(small_architecture).params
    with pytest.raises(ModelError, match="shape"):
        VaeModel(small_architecture, {**params, "dec_b2": np.zeros(3)})
    with pytest.raises(ModelError, match="non-finite"):
        VaeModel(small_architecture, {**params, "dec_b2": np.full(8, np.nan)})


def test_input_dimension_mismatch(small_architecture):
    model = VaeModel.zeros(small_architecture)
    with pytest.raises(ModelError):
        model.encode(np.zeros((1, 7)))


def test_checkpoint_round_trip(tmp_path, tih2_record, small_architecture):
    """Save then load reproduces weights, architecture and feature space."""
    space = FeatureSpace.fit([tih2_record])
    model = VaeModel.initialize(small_architecture, seed=9)
    path = save_checkpoint(model, space, tmp_path / "model" / "checkpoint.json")

    loaded, loaded_space = load_checkpoint(path)

    assert loaded.architecture == model.architecture
    assert loaded.seed == 9
    assert loaded_space == space
    assert all(np.array_equal(loaded.params[k], model.params[k]) for k in model.params)


def test_checkpoint_with_nan_is_rejected(tmp_path, tih2_record, small_architecture):
    space = FeatureSpace.fit([tih2_record])
    path = save_checkpoint(VaeModel.initialize(small_architecture, 1), space, tmp_path / "ckpt.json")
    payload = json.loads(path.read_text(encoding="utf-8"))
    payload["weights"]["enc_b1"][0] = float("nan")
    path.write_text(json.dumps(payload), encoding="utf-8")

    with pytest.raises(CheckpointError, match="non-finite"):
        load_checkpoint(path)


def test_checkpoint_version_and_missing(tmp_path, tih2_record, small_architecture):
    space = FeatureSpace.fit([tih2_record])
    path = save_checkpoint(VaeModel.zeros(small_architecture), space, tmp_path / "ckpt.json")
    payload = json.loads(path.read_text(encoding="utf-8"))
    payload["version"] = 99
    path.write_text(json.dumps(payload), encoding="utf-8")

    with pytest.raises(CheckpointError, match="version"):
        load_checkpoint(path)
    with pytest.raises(MissingInputError):
        load_checkpoint(tmp_path / "absent.json")


def test_checkpoint_space_mismatch(tmp_path, tih2_record):
    space = FeatureSpace.fit([tih2_record])
    model = VaeModel.zeros(VaeArchitecture(input_dim=5, n_counts=1))
    with pytest.raises(CheckpointError):
        save_checkpoint(model, space, tmp_path / "ckpt.json")
