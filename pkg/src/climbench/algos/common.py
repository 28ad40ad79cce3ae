"""Shared pieces for the eight trainers: policies, critics, seed streams."""

from __future__ import annotations

import numpy as np

from ..envs.core import (BoxSpace, RngStream, STREAM_BUFFER, STREAM_ENV,
                         STREAM_EXPLORE, STREAM_INIT, STREAM_SHUFFLE)
from ..nn import Head, Mlp, Tensor, concat

__all__ = ["SeedStreams", "DeterministicPolicy", "GaussianPolicy",
           "SquashedGaussianPolicy", "QNet", "LOG_2PI", "hidden_layers"]

LOG_2PI = float(np.log(2.0 * np.pi))


class SeedStreams:
    """The independent random streams of one training run."""

    def __init__(self, seed: int):
        self.seed = seed
        self.init = RngStream(seed, STREAM_INIT)
        self.explore = RngStream(seed, STREAM_EXPLORE)
        self.buffer = RngStream(seed, STREAM_BUFFER)
        self.shuffle = RngStream(seed, STREAM_SHUFFLE)


def hidden_layers(in_dim: int, layer_size: int, out_dim: int) -> list[int]:
    # Two hidden layers of the shared width knob.
    return [in_dim, layer_size, layer_size, out_dim]


class DeterministicPolicy:
    """tanh-squashed actor emitting actions inside the env box."""

    def __init__(self, obs_dim: int, action_space: BoxSpace, layer_size: int,
                 rng: np.random.Generator):
        head = Head("tanh_scaled", low=action_space.low, high=action_space.high)
        self.net = Mlp(hidden_layers(obs_dim, layer_size, action_space.dim),
                       head=head, rng=rng, final_scale=1e-2)
        self.action_space = action_space

    def act_np(self, obs: np.ndarray) -> np.ndarray:
        return self.net.forward_np(obs)

    def forward(self, obs: Tensor) -> Tensor:
        return self.net.forward(obs)

    def parameters(self):
        return self.net.parameters()


class GaussianPolicy:
    """Diagonal-Gaussian policy: affine mean net, free per-dim log-std.

    The distribution lives in a normalized action space; samples map affinely
    onto the env box (identity for a [-1, 1] box), so a freshly built policy
    explores around the box center whatever the bounds. Log-probs, ratios, and
    KLs are computed on the stored normalized samples.
    """

    def __init__(self, obs_dim: int, action_space: BoxSpace, layer_size: int,
                 rng: np.random.Generator):
        act_dim = action_space.dim
        self.net = Mlp(hidden_layers(obs_dim, layer_size, act_dim),
                       head=Head("gaussian"), rng=rng, final_scale=1e-2)
        self.act_dim = act_dim
        self.action_space = action_space
        self.center = (action_space.high + action_space.low) / 2.0
        self.half = (action_space.high - action_space.low) / 2.0

    def parameters(self):
        return self.net.parameters()

    @property
    def log_std(self) -> Tensor:
        return self.net.log_std

    def std_np(self) -> np.ndarray:
        return np.exp(self.net.log_std.data)

    def mean_np(self, obs: np.ndarray) -> np.ndarray:
        return self.net.forward_np(obs)

    def to_env(self, raw: np.ndarray) -> np.ndarray:
        return self.action_space.clip(self.center + self.half * raw)

    def greedy_np(self, obs: np.ndarray) -> np.ndarray:
        return self.to_env(self.net.forward_np(obs))

    def sample_np(self, obs: np.ndarray, rng: RngStream):
        """One step's sample: (env action, raw action, log_prob, raw mean)."""
        mean = self.net.forward_np(obs)
        std = self.std_np()
        raw = mean + std * rng.normal(size=self.act_dim)
        logp = self.log_prob_np(mean[None, :], raw[None, :])[0]
        return self.to_env(raw), raw, float(logp), mean

    def log_prob_np(self, means: np.ndarray, actions: np.ndarray) -> np.ndarray:
        std = self.std_np()
        z = (actions - means) / std
        return (-0.5 * z * z - np.log(std) - 0.5 * LOG_2PI).sum(axis=1)

    def log_prob_tensor(self, obs: Tensor, actions: np.ndarray) -> Tensor:
        mean = self.net.forward(obs)
        log_std = self.net.log_std
        inv_std = (-log_std).exp()
        z = (Tensor(actions) - mean) * inv_std
        per_dim = z * z * (-0.5) - log_std - 0.5 * LOG_2PI
        return per_dim.sum(axis=1)

    def entropy(self) -> Tensor:
        # Per-action entropy of the diagonal Gaussian, constant across states.
        return (self.net.log_std + 0.5 * (LOG_2PI + 1.0)).sum()

    def kl_old_new_np(self, old_means: np.ndarray, old_log_std: np.ndarray,
                      new_means: np.ndarray,
                      new_log_std: np.ndarray | None = None) -> float:
        """Mean analytic KL(old || new) over a batch of states."""
        if new_log_std is None:
            new_log_std = self.net.log_std.data
        var_old = np.exp(2.0 * old_log_std)
        var_new = np.exp(2.0 * new_log_std)
        per_dim = (new_log_std - old_log_std
                   + (var_old + (old_means - new_means) ** 2) / (2.0 * var_new) - 0.5)
        return float(per_dim.sum(axis=1).mean())


class SquashedGaussianPolicy:
    """tanh-squashed Gaussian with the change-of-variables log-prob correction."""

    def __init__(self, obs_dim: int, action_space: BoxSpace, layer_size: int,
                 rng: np.random.Generator):
        self.net = Mlp(hidden_layers(obs_dim, layer_size, action_space.dim),
                       head=Head("gaussian"), rng=rng, final_scale=1e-2)
        self.action_space = action_space
        self.center = (action_space.high + action_space.low) / 2.0
        self.half = (action_space.high - action_space.low) / 2.0

    def parameters(self):
        return self.net.parameters()

    def sample_np(self, obs: np.ndarray, rng: RngStream | None = None,
                  deterministic: bool = False) -> np.ndarray:
        mean = self.net.forward_np(obs)
        if deterministic or rng is None:
            u = mean
        else:
            u = mean + np.exp(self.net.log_std.data) * rng.normal(size=mean.shape)
        return self.center + self.half * np.tanh(u)

    def sample_with_log_prob_np(self, obs_batch: np.ndarray, rng: RngStream):
        """Batch sample + log-prob without a graph (for critic targets)."""
        mean = self.net.forward_np(obs_batch)
        log_std = self.net.log_std.data
        std = np.exp(log_std)
        xi = rng.normal(size=mean.shape)
        u = mean + std * xi
        t = np.tanh(u)
        action = self.center + self.half * t
        logp = (-0.5 * xi * xi - log_std - 0.5 * LOG_2PI
                - np.log(self.half * (1.0 - t * t) + 1e-6)).sum(axis=1)
        return action, logp

    def rsample_tensor(self, obs: Tensor, xi: np.ndarray):
        """Reparameterized sample as a graph node: (action, log_prob)."""
        mean = self.net.forward(obs)
        log_std = self.net.log_std
        std = log_std.exp()
        u = mean + std * Tensor(xi)
        t = u.tanh()
        action = t * self.half + self.center
        correction = (t * t * (-1.0) + 1.0) * self.half + 1e-6
        per_dim = Tensor(xi * xi) * (-0.5) - log_std - 0.5 * LOG_2PI - correction.log()
        return action, per_dim.sum(axis=1)


class QNet:
    """State-action value network (scalar or quantile outputs)."""

    def __init__(self, obs_dim: int, act_dim: int, layer_size: int,
                 rng: np.random.Generator, out_dim: int = 1):
        self.net = Mlp(hidden_layers(obs_dim + act_dim, layer_size, out_dim), rng=rng)

    def parameters(self):
        return self.net.parameters()

    def q_np(self, s: np.ndarray, a: np.ndarray) -> np.ndarray:
        return self.net.forward_np(np.concatenate([s, a], axis=-1))

    def q_tensor(self, s: Tensor, a: Tensor) -> Tensor:
        return self.net.forward(concat([s, a], axis=1))
