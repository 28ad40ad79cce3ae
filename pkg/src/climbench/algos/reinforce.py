"""Episode-level policy gradient with discounted returns (no critic)."""

from __future__ import annotations

import numpy as np

from ..nn import Optimizer, Tensor
from ..rollout import discounted_returns
from .base import Trainer
from .common import GaussianPolicy

__all__ = ["ReinforceTrainer"]


class ReinforceTrainer(Trainer):
    algorithm = "reinforce"

    def _build(self) -> None:
        cfg = self.cfg
        self.policy = GaussianPolicy(self.env.observation_space.dim,
                                     self.env.action_space,
                                     cfg.actor_critic_layer_size,
                                     self.streams.init.generator)
        self.optimizer = Optimizer(self.policy.parameters(), cfg.learning_rate)
        self.n_updates = 0

    def select_action(self, obs: np.ndarray, explore: bool = True) -> np.ndarray:
        if explore:
            action, _, _, _ = self.policy.sample_np(np.asarray(obs),
                                                    self.streams.explore)
            return action
        return self.policy.greedy_np(np.asarray(obs))

    def episode_loss(self, obs: np.ndarray, actions: np.ndarray,
                     rewards: np.ndarray) -> Tensor:
        """-mean_t G_t log pi(a_t | s_t); minimizing it ascends the return."""
        returns = discounted_returns(rewards, self.cfg.gamma)
        logp = self.policy.log_prob_tensor(Tensor(obs), actions)
        return -(logp * Tensor(returns)).mean()

    def update_from_episode(self, obs, actions, rewards) -> float:
        loss = self.episode_loss(np.asarray(obs), np.asarray(actions),
                                 np.asarray(rewards))
        value = self._check_finite_loss(float(loss.data), "reinforce loss")
        loss.backward()
        self.optimizer.step()
        self.optimizer.zero_grad()
        self.policy.net.clamp_log_std()
        self.n_updates += 1
        return value

    def _run(self, total_steps: int) -> None:
        while self.global_step < total_steps:
            obs = self.env.reset(seed=self.seed if self.global_step == 0 else None)
            observations, actions, rewards = [], [], []
            episode_return = 0.0
            while True:
                env_action, raw_action, _, _ = self.policy.sample_np(
                    np.asarray(obs), self.streams.explore)
                res = self.env.step(env_action)
                observations.append(np.asarray(obs, dtype=np.float64))
                actions.append(raw_action)
                rewards.append(res.reward)
                episode_return += res.reward
                self.global_step += 1
                obs = res.observation
                if res.truncated:
                    break
            self.record.add(self.global_step, episode_return)
            self.update_from_episode(np.stack(observations), np.stack(actions),
                                     np.asarray(rewards))
