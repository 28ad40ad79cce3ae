"""On-policy actor-critic trainers: PPO and TRPO.

Both collect one full episode per iteration, estimate advantages with GAE, and
sweep shuffled minibatches for several epochs, breaking out early once the
analytic Gaussian KL against the collection policy exceeds the limit.

PPO minimizes  -L_clip + c1 * L_value - c2 * entropy  with Adam and a global
gradient-norm clip. TRPO takes natural-gradient steps: conjugate gradient on
Fisher-vector products (computed exactly for diagonal-Gaussian policies via a
forward-tangent JVP and a reverse VJP), step length sqrt(2*delta / xHx), and
backtracking by halving that accepts only surrogate-improving steps inside the
KL region.
"""

from __future__ import annotations

import numpy as np

from ..nn import Mlp, Optimizer, Tensor, clip_grad_norm, minimum
from ..rollout import TrajectoryBatch
from .base import Trainer
from .common import GaussianPolicy, LOG_2PI, hidden_layers

__all__ = ["PpoTrainer", "TrpoTrainer", "conjugate_gradient", "flat_params",
           "set_flat_params", "flat_grads"]


# -- flat parameter-vector utilities ------------------------------------------------


def flat_params(params) -> np.ndarray:
    return np.concatenate([p.data.ravel() for p in params])


def set_flat_params(params, vector: np.ndarray) -> None:
    offset = 0
    for p in params:
        n = p.data.size
        p.data = vector[offset:offset + n].reshape(p.data.shape).copy()
        offset += n


def flat_grads(params) -> np.ndarray:
    return np.concatenate([
        (p.grad if p.grad is not None else np.zeros_like(p.data)).ravel()
        for p in params])


def split_like(params, vector: np.ndarray) -> list[np.ndarray]:
    out, offset = [], 0
    for p in params:
        n = p.data.size
        out.append(vector[offset:offset + n].reshape(p.data.shape))
        offset += n
    return out


def conjugate_gradient(matvec, b: np.ndarray, iterations: int = 10,
                       tol: float = 1e-10) -> np.ndarray:
    """Solve A x = b for symmetric positive-definite A given x -> A x."""
    x = np.zeros_like(b)
    r = b.copy()
    p = b.copy()
    rs = float(r @ r)
    if rs < tol:
        return x
    for _ in range(iterations):
        ap = matvec(p)
        alpha = rs / float(p @ ap)
        x += alpha * p
        r -= alpha * ap
        rs_new = float(r @ r)
        if rs_new < tol:
            break
        p = r + (rs_new / rs) * p
        rs = rs_new
    return x


# -- rollout collection shared by PPO and TRPO ---------------------------------------


class _OnPolicyBase(Trainer):
    def _build_policy_value(self) -> None:
        cfg = self.cfg
        obs_dim = self.env.observation_space.dim
        init = self.streams.init.generator
        self.policy = GaussianPolicy(obs_dim, self.env.action_space,
                                     cfg.actor_critic_layer_size, init)
        self.value_net = Mlp(hidden_layers(obs_dim, cfg.actor_critic_layer_size, 1),
                             rng=init)

    def select_action(self, obs: np.ndarray, explore: bool = True) -> np.ndarray:
        if explore:
            action, _, _, _ = self.policy.sample_np(np.asarray(obs),
                                                    self.streams.explore)
            return action
        return self.policy.greedy_np(np.asarray(obs))

    def collect_episode(self) -> TrajectoryBatch:
        batch = TrajectoryBatch()
        obs = self.env.reset(seed=self.seed if self.global_step == 0 else None)
        episode_return = 0.0
        while True:
            obs_arr = np.asarray(obs, dtype=np.float64)
            env_action, raw_action, logp, mean = self.policy.sample_np(
                obs_arr, self.streams.explore)
            value = float(self.value_net.forward_np(obs_arr)[0])
            res = self.env.step(env_action)
            self.global_step += 1
            episode_return += res.reward
            # terminated is always False here, so GAE bootstraps through the cap
            batch.add(obs_arr, raw_action, res.reward, res.terminated, value, logp,
                      mean)
            obs = res.observation
            if res.truncated:
                batch.bootstrap_value = float(self.value_net.forward_np(
                    np.asarray(obs, dtype=np.float64))[0])
                break
        self.record.add(self.global_step, episode_return)
        batch.estimate_advantages(self.cfg.gamma, self.cfg.gae_lambda)
        return batch

    def _prepared_arrays(self, batch: TrajectoryBatch):
        arrays = batch.arrays()
        adv = batch.advantages
        if self.cfg.normalize_advantages:
            adv = (adv - adv.mean()) / (adv.std() + 1e-8)
        return arrays, adv, batch.returns

    def _minibatch_indices(self, n: int) -> list[np.ndarray]:
        order = self.streams.shuffle.shuffled_indices(n)
        return [idx for idx in np.array_split(order, self.cfg.num_minibatches)
                if idx.size > 0]

    def _kl_from_collection(self, arrays) -> float:
        new_means = self.policy.mean_np(arrays["obs"])
        return self.policy.kl_old_new_np(arrays["means"], self._log_std_at_collect,
                                         new_means)

    def _remember_collection_policy(self) -> None:
        self._log_std_at_collect = self.policy.net.log_std.data.copy()


class PpoTrainer(_OnPolicyBase):
    algorithm = "ppo"

    def _build(self) -> None:
        self._build_policy_value()
        self.optimizer = Optimizer(
            self.policy.parameters() + self.value_net.parameters(),
            self.cfg.learning_rate)
        self.n_updates = 0

    def minibatch_loss(self, obs, actions, old_logp, adv, returns) -> Tensor:
        cfg = self.cfg
        logp = self.policy.log_prob_tensor(Tensor(obs), actions)
        ratio = (logp - Tensor(old_logp)).exp()
        adv_t = Tensor(adv)
        surrogate = minimum(ratio * adv_t,
                            ratio.clip(1.0 - cfg.clip_coef, 1.0 + cfg.clip_coef) * adv_t)
        value = self.value_net.forward(Tensor(obs)).reshape(-1)
        value_loss = ((value - Tensor(returns)) ** 2).mean()
        loss = -surrogate.mean() + cfg.vf_coef * value_loss
        if cfg.entropy_coef:
            loss = loss - cfg.entropy_coef * self.policy.entropy()
        return loss

    def update_from_batch(self, batch: TrajectoryBatch) -> None:
        cfg = self.cfg
        arrays, adv, returns = self._prepared_arrays(batch)
        self._remember_collection_policy()
        params = self.policy.parameters() + self.value_net.parameters()
        for _epoch in range(cfg.update_epochs):
            for idx in self._minibatch_indices(len(batch)):
                loss = self.minibatch_loss(arrays["obs"][idx], arrays["actions"][idx],
                                           arrays["log_probs"][idx], adv[idx],
                                           returns[idx])
                self._check_finite_loss(float(loss.data), "ppo loss")
                loss.backward()
                clip_grad_norm(params, cfg.max_grad_norm)
                self.optimizer.step()
                self.optimizer.zero_grad()
                self.policy.net.clamp_log_std()
                self.n_updates += 1
            if self._kl_from_collection(arrays) > cfg.kl_limit:
                break

    def _run(self, total_steps: int) -> None:
        while self.global_step < total_steps:
            self.update_from_batch(self.collect_episode())


class TrpoTrainer(_OnPolicyBase):
    algorithm = "trpo"

    def _build(self) -> None:
        self._build_policy_value()
        self.value_opt = Optimizer(self.value_net.parameters(), self.cfg.learning_rate)
        self.n_natural_steps = 0
        self.n_rejected_steps = 0

    # -- Fisher-vector product over a state minibatch --------------------------------

    def fisher_vector_product(self, obs: np.ndarray, vector: np.ndarray) -> np.ndarray:
        """F v for the diagonal-Gaussian policy Fisher (Gauss-Newton KL Hessian).

        Mean block: (1/B) sum_s J(s)^T diag(1/sigma^2) J(s) v via JVP + VJP.
        Log-std block: the per-dimension Fisher is the constant 2.
        """
        mean_params = [p for p in self.policy.parameters()
                       if p is not self.policy.net.log_std]
        n_mean = sum(p.data.size for p in mean_params)
        v_mean, v_logstd = vector[:n_mean], vector[n_mean:]
        tangents = split_like(mean_params, v_mean)
        jv = self.policy.net.jvp(obs, tangents)          # (B, act_dim)
        inv_var = np.exp(-2.0 * self.policy.net.log_std.data)
        weighted = jv * inv_var / obs.shape[0]
        mu = self.policy.net.forward(Tensor(obs))
        mu.backward(weighted)
        fv_mean = flat_grads(mean_params)
        for p in self.policy.parameters():
            p.grad = None
        return np.concatenate([fv_mean, 2.0 * v_logstd]) \
            + self.cfg.cg_damping * vector

    # -- surrogate objective ------------------------------------------------------

    def surrogate_np(self, obs, actions, old_logp, adv) -> float:
        means = self.policy.mean_np(obs)
        logp = self.policy.log_prob_np(means, actions)
        return float(np.mean(np.exp(logp - old_logp) * adv))

    def surrogate_grad(self, obs, actions, old_logp, adv) -> np.ndarray:
        logp = self.policy.log_prob_tensor(Tensor(obs), actions)
        ratio = (logp - Tensor(old_logp)).exp()
        (ratio * Tensor(adv)).mean().backward()
        g = flat_grads(self.policy.parameters())
        for p in self.policy.parameters():
            p.grad = None
        return g

    def natural_step(self, obs, actions, old_logp, old_means, adv) -> bool:
        """One trust-region update on a minibatch; returns True if accepted."""
        cfg = self.cfg
        params = self.policy.parameters()
        g = self.surrogate_grad(obs, actions, old_logp, adv)
        if not np.all(np.isfinite(g)):
            return False
        fvp = lambda v: self.fisher_vector_product(obs, v)
        x = conjugate_gradient(fvp, g, cfg.cg_iterations)
        xhx = float(x @ fvp(x))
        if xhx <= 0 or not np.isfinite(xhx):
            self.n_rejected_steps += 1
            return False
        step = np.sqrt(2.0 * cfg.kl_limit / xhx) * x
        old_vector = flat_params(params)
        base_surrogate = self.surrogate_np(obs, actions, old_logp, adv)
        scale = 1.0
        for _ in range(cfg.backtrack_steps):
            set_flat_params(params, old_vector + scale * step)
            self.policy.net.clamp_log_std()
            new_means = self.policy.mean_np(obs)
            kl = self.policy.kl_old_new_np(old_means, self._log_std_at_collect,
                                           new_means)
            improved = self.surrogate_np(obs, actions, old_logp, adv) > base_surrogate
            if improved and kl <= cfg.kl_limit:
                self.n_natural_steps += 1
                return True
            scale *= 0.5
        set_flat_params(params, old_vector)  # no acceptable step: no-op update
        self.n_rejected_steps += 1
        return False

    def update_from_batch(self, batch: TrajectoryBatch) -> None:
        cfg = self.cfg
        arrays, adv, returns = self._prepared_arrays(batch)
        self._remember_collection_policy()
        for _epoch in range(cfg.update_epochs):
            for idx in self._minibatch_indices(len(batch)):
                obs = arrays["obs"][idx]
                value = self.value_net.forward(Tensor(obs)).reshape(-1)
                value_loss = ((value - Tensor(returns[idx])) ** 2).mean() * 0.5
                self._check_finite_loss(float(value_loss.data), "trpo value loss")
                value_loss.backward()
                clip_grad_norm(self.value_net.parameters(), cfg.max_grad_norm)
                self.value_opt.step()
                self.value_opt.zero_grad()
                self.natural_step(obs, arrays["actions"][idx],
                                  arrays["log_probs"][idx],
                                  arrays["means"][idx], adv[idx])
            if self._kl_from_collection(arrays) > cfg.kl_limit:
                break

    def _run(self, total_steps: int) -> None:
        while self.global_step < total_steps:
            self.update_from_batch(self.collect_episode())
