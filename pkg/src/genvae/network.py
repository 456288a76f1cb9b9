"""
Variational autoencoder with a property head, written against numpy.

The encoder maps x to [mu | log_var] through one hidden layer. The decoder maps z
back through one hidden layer; its count block goes through softplus so decoded
counts are non-negative, its lattice block stays linear. The property head maps
z to a positive predicted storage score. Gradients are derived by hand.
"""

from typing import Dict, Literal, NamedTuple, Optional, Tuple
import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.special import expit

from src.errors import ModelError

logger = logging.getLogger(__name__)

Activation = Literal["tanh", "linear"]
PARAMETER_NAMES = (
    "enc_w1", "enc_b1", "enc_w2", "enc_b2",
    "dec_w1", "dec_b1", "dec_w2", "dec_b2",
    "prop_w1", "prop_b1", "prop_w2", "prop_b2",
)


class VaeArchitecture(BaseModel):
    """Layer sizes and activation of a VaeModel."""

    model_config = ConfigDict(frozen=True)

    input_dim: int = Field(ge=1)
    n_counts: int = Field(ge=0)
    latent_dim: int = Field(8, ge=1)
    hidden_dim: int = Field(64, ge=1)
    property_hidden_dim: int = Field(16, ge=1)
    activation: Activation = "tanh"

    @model_validator(mode="after")
    def check_blocks(self) -> "VaeArchitecture":
        if self.n_counts > self.input_dim:
            raise ValueError("count block larger than the input")
        return self

    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        d, h, l, hp = self.input_dim, self.hidden_dim, self.latent_dim, self.property_hidden_dim
        return {
            "enc_w1": (d, h), "enc_b1": (h,), "enc_w2": (h, 2 * l), "enc_b2": (2 * l,),
            "dec_w1": (l, h), "dec_b1": (h,), "dec_w2": (h, d), "dec_b2": (d,),
            "prop_w1": (l, hp), "prop_b1": (hp,), "prop_w2": (hp, 1), "prop_b2": (1,),
        }


class LossTerms(NamedTuple):
    total: float
    mse: float
    kl: float
    property_mse: float


def softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def reparameterize(mu: np.ndarray, log_var: np.ndarray, noise: np.ndarray) -> np.ndarray:
    """z = mu + exp(log_var / 2) * noise."""
    mu, log_var, noise = (np.asarray(a, dtype=float) for a in (mu, log_var, noise))
    if not mu.shape == log_var.shape == noise.shape:
        raise ModelError(f"Shape mismatch: {mu.shape}, {log_var.shape}, {noise.shape}")
    return mu + np.exp(0.5 * log_var) * noise


def kl_divergence(mu: np.ndarray, log_var: np.ndarray) -> float:
    """Closed-form KL(q(z|x) || N(0, I)), averaged over rows."""
    mu, log_var = np.atleast_2d(mu), np.atleast_2d(log_var)
    per_row = -0.5 * np.sum(1.0 + log_var - mu**2 - np.exp(log_var), axis=1)
    return float(np.mean(per_row))


class VaeModel:
    """Encoder, decoder and property head sharing one parameter dictionary."""

    def __init__(self, architecture: VaeArchitecture, params: Dict[str, np.ndarray], seed: int = 0):
        self.architecture = architecture
        self.seed = seed
        shapes = architecture.shapes()
        missing = set(shapes) - set(params)
        if missing:
            raise ModelError(f"Missing parameters: {sorted(missing)}")
        self.params: Dict[str, np.ndarray] = {}
        for name, shape in shapes.items():
            value = np.array(params[name], dtype=np.float64)
            if value.shape != shape:
                raise ModelError(f"{name}: expected shape {shape}, got {value.shape}")
            if not np.all(np.isfinite(value)):
                raise ModelError(f"{name}: non-finite weights")
            self.params[name] = value

    @classmethod
    def initialize(cls, architecture: VaeArchitecture, seed: int) -> "VaeModel":
        """Scaled-normal weights, zero biases."""
        rng = np.random.default_rng(seed)
        params = {}
        for name, shape in architecture.shapes().items():
            if len(shape) == 2:
                params[name] = rng.standard_normal(shape) / np.sqrt(shape[0])
            else:
                params[name] = np.zeros(shape)
        return cls(architecture, params, seed=seed)

    @classmethod
    def zeros(cls, architecture: VaeArchitecture) -> "VaeModel":
        return cls(architecture, {k: np.zeros(s) for k, s in architecture.shapes().items()})

    @property
    def latent_dim(self) -> int:
        return self.architecture.latent_dim

    def copy(self) -> "VaeModel":
        return VaeModel(self.architecture, {k: v.copy() for k, v in self.params.items()}, self.seed)

    def _act(self, a: np.ndarray) -> np.ndarray:
        return np.tanh(a) if self.architecture.activation == "tanh" else a

    def _act_grad(self, h: np.ndarray) -> np.ndarray:
        # derivative expressed through the activation output
        return 1.0 - h**2 if self.architecture.activation == "tanh" else np.ones_like(h)

    def _check(self, x: np.ndarray, width: int, what: str) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != width:
            raise ModelError(f"{what} dimension {x.shape[1]} does not match model ({width})")
        return x

    def encode(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Posterior mean and log-variance for each row of x."""
        p = self.params
        x = self._check(x, self.architecture.input_dim, "Input")
        h = self._act(x @ p["enc_w1"] + p["enc_b1"])
        out = h @ p["enc_w2"] + p["enc_b2"]
        return out[:, : self.latent_dim], out[:, self.latent_dim :]

    def _decode_pre(self, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        p = self.params
        h = self._act(z @ p["dec_w1"] + p["dec_b1"])
        return h, h @ p["dec_w2"] + p["dec_b2"]

    def _output(self, pre: np.ndarray) -> np.ndarray:
        n = self.architecture.n_counts
        out = pre.copy()
        out[:, :n] = softplus(pre[:, :n])
        return out

    def decode(self, z: np.ndarray) -> np.ndarray:
        z = self._check(z, self.latent_dim, "Latent")
        _, pre = self._decode_pre(z)
        return self._output(pre)

    def _property_pre(self, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        p = self.params
        h = self._act(z @ p["prop_w1"] + p["prop_b1"])
        return h, (h @ p["prop_w2"] + p["prop_b2"])[:, 0]

    def predict_score(self, z: np.ndarray) -> np.ndarray:
        z = self._check(z, self.latent_dim, "Latent")
        _, pre = self._property_pre(z)
        return softplus(pre)

    def score_and_grad(self, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Predicted score per row and its gradient with respect to z."""
        p = self.params
        z = self._check(z, self.latent_dim, "Latent")
        h, pre = self._property_pre(z)
        ds_dpre = expit(pre)
        dh = ds_dpre[:, None] * p["prop_w2"][:, 0][None, :]
        grad = (dh * self._act_grad(h)) @ p["prop_w1"].T
        return softplus(pre), grad

    def loss(
        self,
        x: np.ndarray,
        noise: np.ndarray,
        targets: Optional[np.ndarray] = None,
        beta: float = 1.0,
        property_weight: float = 1.0,
    ) -> LossTerms:
        terms, _ = self.loss_and_grads(x, noise, targets, beta, property_weight, with_grads=False)
        return terms

    def loss_and_grads(
        self,
        x: np.ndarray,
        noise: np.ndarray,
        targets: Optional[np.ndarray] = None,
        beta: float = 1.0,
        property_weight: float = 1.0,
        with_grads: bool = True,
    ) -> Tuple[LossTerms, Dict[str, np.ndarray]]:
        """
        Total loss = reconstruction MSE + beta * KL + property_weight * score MSE.

        Args:
            x: Batch of normalized inputs, one row per sample
            noise: Standard-normal draws, shape (rows, latent_dim)
            targets: Storage scores for the property head; skipped when None
            beta: KL weight
            property_weight: Weight of the property head's squared error

        Returns:
            Loss terms and, when requested, gradients keyed like ``params``
        """
        p = self.params
        x = self._check(x, self.architecture.input_dim, "Input")
        if len(x) == 0:
            raise ModelError("Loss needs a non-empty batch")
        noise = self._check(noise, self.latent_dim, "Noise")
        if len(noise) != len(x):
            raise ModelError(f"{len(noise)} noise rows for {len(x)} samples")
        n, d, l = len(x), x.shape[1], self.latent_dim

        h1 = self._act(x @ p["enc_w1"] + p["enc_b1"])
        enc = h1 @ p["enc_w2"] + p["enc_b2"]
        mu, log_var = enc[:, :l], enc[:, l:]
        std = np.exp(0.5 * log_var)
        z = mu + std * noise
        h3, pre = self._decode_pre(z)
        x_hat = self._output(pre)

        mse = float(np.sum((x_hat - x) ** 2) / (n * d))
        kl = kl_divergence(mu, log_var)
        use_property = targets is not None and property_weight > 0.0
        property_mse = 0.0
        if use_property:
            targets = np.asarray(targets, dtype=float).reshape(-1)
            h5, s_pre = self._property_pre(z)
            s = softplus(s_pre)
            property_mse = float(np.mean((s - targets) ** 2))
        total = mse + beta * kl + property_weight * property_mse
        terms = LossTerms(total=total, mse=mse, kl=kl, property_mse=property_mse)
        if not with_grads:
            return terms, {}

        g: Dict[str, np.ndarray] = {}
        d_pre = 2.0 * (x_hat - x) / (n * d)
        nc = self.architecture.n_counts
        d_pre[:, :nc] *= expit(pre[:, :nc])
        g["dec_w2"] = h3.T @ d_pre
        g["dec_b2"] = d_pre.sum(axis=0)
        da3 = (d_pre @ p["dec_w2"].T) * self._act_grad(h3)
        g["dec_w1"] = z.T @ da3
        g["dec_b1"] = da3.sum(axis=0)
        dz = da3 @ p["dec_w1"].T

        if use_property:
            ds_pre = (2.0 * property_weight * (s - targets) / n) * expit(s_pre)
            g["prop_w2"] = h5.T @ ds_pre[:, None]
            g["prop_b2"] = np.array([ds_pre.sum()])
            da5 = (ds_pre[:, None] @ p["prop_w2"].T) * self._act_grad(h5)
            g["prop_w1"] = z.T @ da5
            g["prop_b1"] = da5.sum(axis=0)
            dz = dz + da5 @ p["prop_w1"].T
        else:
            for name in ("prop_w1", "prop_b1", "prop_w2", "prop_b2"):
                g[name] = np.zeros_like(p[name])

        d_mu = dz + beta * mu / n
        d_log_var = dz * noise * 0.5 * std + beta * 0.5 * (np.exp(log_var) - 1.0) / n
        d_enc = np.hstack([d_mu, d_log_var])
        g["enc_w2"] = h1.T @ d_enc
        g["enc_b2"] = d_enc.sum(axis=0)
        da1 = (d_enc @ p["enc_w2"].T) * self._act_grad(h1)
        g["enc_w1"] = x.T @ da1
        g["enc_b1"] = da1.sum(axis=0)
        return terms, g

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self.params.values())
