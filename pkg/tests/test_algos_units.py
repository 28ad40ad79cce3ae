"""Per-algorithm update math against hand oracles on synthetic data."""

import numpy as np
import pytest

from climbench.algos import make_config, make_trainer
from climbench.algos.common import GaussianPolicy, SquashedGaussianPolicy
from climbench.algos.deterministic import deterministic_actor_step
from climbench.algos.onpolicy import (conjugate_gradient, flat_grads, flat_params,
                                      set_flat_params)
from climbench.algos.tqc import (quantile_fractions, quantile_huber_loss,
                                 truncated_quantile_loss)
from climbench.envs import BiasCorrectionEnv, BoxSpace, ClimateEnv, RngStream
from climbench.nn import Optimizer, Tensor
from climbench.rollout import discounted_returns


class BanditEnv(ClimateEnv):
    """Single-step episodes; reward +1 for positive actions, -1 otherwise."""

    def __init__(self):
        super().__init__()
        self.max_steps = 1
        self.action_space = BoxSpace(low=[-1.0], high=[1.0])
        self.observation_space = BoxSpace(low=[0.0], high=[1.0])

    def _reset_state(self):
        return np.array([0.5])

    def _dynamics(self, action):
        return np.array([0.5]), 1.0 if action[0] > 0 else -1.0, {}


def make(tag, env=None, **overrides):
    env = env or BiasCorrectionEnv("v0")
    cfg = make_config(tag, **overrides)
    return make_trainer(tag, env, cfg, seed=1)


# -- REINFORCE ---------------------------------------------------------------------


def test_reinforce_gamma_zero_returns_equal_rewards():
    r = np.array([0.5, -1.0, 2.0])
    assert np.array_equal(discounted_returns(r, 0.0), r)


def test_reinforce_bandit_drifts_positive():
    trainer = make("reinforce", env=BanditEnv(), total_timesteps=2000,
                   learning_rate=3e-2)
    trainer.train()
    mean_action = trainer.policy.mean_np(np.array([0.5]))[0]
    assert mean_action > 0.05


def test_reinforce_loss_gradient_matches_finite_differences():
    trainer = make("reinforce")
    rng = np.random.default_rng(0)
    obs = rng.uniform(0, 1, size=(6, 1))
    actions = rng.uniform(-1, 1, size=(6, 1))
    rewards = rng.normal(size=6)

    def loss_value():
        returns = discounted_returns(rewards, trainer.cfg.gamma)
        means = trainer.policy.mean_np(obs)
        logp = trainer.policy.log_prob_np(means, actions)
        return float(-(logp * returns).mean())

    loss = trainer.episode_loss(obs, actions, rewards)
    loss.backward()
    h = 1e-6
    for p in trainer.policy.parameters():
        flat = p.data.ravel()
        gflat = p.grad.ravel()
        for i in range(min(flat.size, 5)):
            orig = flat[i]
            flat[i] = orig + h
            up = loss_value()
            flat[i] = orig - h
            down = loss_value()
            flat[i] = orig
            fd = (up - down) / (2 * h)
            assert gflat[i] == pytest.approx(fd, rel=1e-4, abs=1e-7)


# -- DPG ------------------------------------------------------------------------


def test_dpg_has_no_target_networks():
    trainer = make("dpg")
    assert not hasattr(trainer, "target_actor")
    assert not hasattr(trainer, "target_critic")


def test_dpg_target_is_reward_when_done():
    trainer = make("dpg")
    batch = {"s": np.array([[0.4]]), "a": np.array([[0.1]]),
             "r": np.array([3.0]), "s_next": np.array([[0.5]]),
             "d": np.array([1.0])}
    assert trainer.compute_target(batch)[0] == 3.0


def test_actor_ascends_frozen_quadratic_critic():
    # Q(s, a) = -(a - 0.3)^2 has its maximum at a = 0.3.
    trainer = make("dpg")
    opt = Optimizer(trainer.actor.parameters(), 3e-3)
    states = np.full((16, 1), 0.5)

    def q_fn(s, a):
        return -((a - 0.3) ** 2)

    for _ in range(500):
        deterministic_actor_step(trainer.actor, q_fn, states, opt)
    assert trainer.actor.act_np(np.array([0.5]))[0] == pytest.approx(0.3, abs=0.02)


def test_zero_noise_trajectories_replay_identically():
    outs = []
    for _ in range(2):
        trainer = make("dpg", total_timesteps=200, exploration_noise=0.0)
        rec = trainer.train()
        outs.append(rec.entries)
    assert outs[0] == outs[1]


# -- DDPG -----------------------------------------------------------------------


def test_ddpg_tau_one_makes_targets_track_online():
    trainer = make("ddpg", total_timesteps=1200, tau=1.0, learning_starts=100)
    trainer.train()
    for t, o in zip(trainer.target_actor.parameters(), trainer.actor.parameters()):
        assert np.array_equal(t.data, o.data)


def test_ddpg_target_uses_target_networks():
    trainer = make("ddpg")
    batch = {"s": np.array([[0.4]]), "a": np.array([[0.1]]),
             "r": np.array([0.5]), "s_next": np.array([[0.5]]),
             "d": np.array([0.0])}
    y_before = trainer.compute_target(batch)
    for p in trainer.actor.parameters() + trainer.critic.parameters():
        p.data = p.data + 0.37  # perturb online nets only
    y_after = trainer.compute_target(batch)
    assert np.array_equal(y_before, y_after)


# -- TD3 ------------------------------------------------------------------------


def test_td3_target_noise_never_exceeds_clip():
    trainer = make("td3", policy_noise=0.8, noise_clip=0.3)
    s_next = np.random.default_rng(0).uniform(0, 1, size=(4000, 1))
    base = trainer.target_actor.act_np(s_next)
    smoothed = trainer.smoothed_target_actions(s_next)
    raw_gap = smoothed - trainer.env.action_space.clip(base)
    # Before the box clamp the noise is within +-clip; after it, never larger.
    assert np.max(np.abs(raw_gap)) <= 0.3 + 1e-12


def test_td3_min_critic_target_not_above_individual():
    trainer = make("td3")
    rng = np.random.default_rng(1)
    s_next = rng.uniform(0, 1, size=(64, 1))
    a_next = trainer.smoothed_target_actions(s_next)
    q1 = trainer.target_critics[0].q_np(s_next, a_next)[:, 0]
    q2 = trainer.target_critics[1].q_np(s_next, a_next)[:, 0]
    m = np.minimum(q1, q2)
    assert np.all(m <= q1 + 1e-15) and np.all(m <= q2 + 1e-15)


def test_td3_delayed_actor_update_ratio():
    trainer = make("td3", total_timesteps=2000, learning_starts=200,
                   policy_frequency=2)
    trainer.train()
    # updates run from step t = learning_starts through t = T inclusive
    assert trainer.n_critic_updates == 2000 - 200 + 1
    assert abs(trainer.n_actor_updates - trainer.n_critic_updates // 2) <= 1


def test_td3_holds_exactly_two_critics():
    trainer = make("td3")
    assert len(trainer.critics) == 2 and len(trainer.target_critics) == 2


# -- TRPO -----------------------------------------------------------------------


def test_cg_identity_matrix_returns_gradient():
    g = np.array([1.0, -2.0, 3.0])
    x = conjugate_gradient(lambda v: v, g, iterations=1)
    assert np.allclose(x, g, atol=1e-12)


def test_cg_matches_direct_solve_on_random_spd():
    rng = np.random.default_rng(2)
    m = rng.normal(size=(8, 8))
    a = m @ m.T + 8 * np.eye(8)
    b = rng.normal(size=8)
    x = conjugate_gradient(lambda v: a @ v, b, iterations=50)
    assert np.allclose(x, np.linalg.solve(a, b), atol=1e-6)


def test_trpo_ratio_one_gives_zero_kl_and_mean_advantage():
    trainer = make("trpo")
    rng = np.random.default_rng(3)
    obs = rng.uniform(0, 1, size=(32, 1))
    actions = trainer.policy.mean_np(obs) + rng.normal(size=(32, 1)) * 0.1
    means = trainer.policy.mean_np(obs)
    logp = trainer.policy.log_prob_np(means, actions)
    adv = rng.normal(size=32)
    trainer._log_std_at_collect = trainer.policy.net.log_std.data.copy()
    assert trainer.surrogate_np(obs, actions, logp, adv) == pytest.approx(
        float(adv.mean()), rel=1e-12)
    kl = trainer.policy.kl_old_new_np(means, trainer._log_std_at_collect,
                                      trainer.policy.mean_np(obs))
    assert kl == pytest.approx(0.0, abs=1e-15)


def test_analytic_gaussian_kl_closed_form():
    # Equal sigmas: KL(N(mu1, s) || N(mu2, s)) = (mu1 - mu2)^2 / (2 s^2).
    trainer = make("trpo")
    sigma = float(np.exp(trainer.policy.net.log_std.data[0]))
    old_means = np.array([[0.3], [0.1]])
    new_means = np.array([[0.5], [0.4]])
    expected = float(np.mean((old_means - new_means) ** 2 / (2 * sigma ** 2)))
    got = trainer.policy.kl_old_new_np(old_means, trainer.policy.net.log_std.data,
                                       new_means)
    assert got == pytest.approx(expected, abs=1e-10)


def test_fisher_vector_product_matches_kl_gradient_differences():
    # FVP(v) ~= (grad KL(theta + h v) - grad KL(theta - h v)) / 2h at theta_old.
    trainer = make("trpo", actor_critic_layer_size=8)
    rng = np.random.default_rng(4)
    obs = rng.uniform(0, 1, size=(16, 1))
    params = trainer.policy.parameters()
    old_means = trainer.policy.mean_np(obs)
    old_log_std = trainer.policy.net.log_std.data.copy()
    trainer.cfg.cg_damping = 0.0

    def kl_grad(vector):
        saved = flat_params(params)
        set_flat_params(params, vector)
        mean = trainer.policy.net.forward(Tensor(obs))
        log_std = trainer.policy.net.log_std
        var_old = np.exp(2.0 * old_log_std)
        diff = Tensor(old_means) - mean
        inv_var_new = (log_std * (-2.0)).exp()
        per_dim = (log_std - Tensor(old_log_std)
                   + (diff * diff + var_old) * inv_var_new * 0.5 - 0.5)
        per_dim.sum(axis=1).mean().backward()
        g = flat_grads(params)
        for p in params:
            p.grad = None
        set_flat_params(params, saved)
        return g

    theta = flat_params(params)
    v = rng.normal(size=theta.size)
    h = 1e-5
    fd = (kl_grad(theta + h * v) - kl_grad(theta - h * v)) / (2 * h)
    fvp = trainer.fisher_vector_product(obs, v)
    assert np.max(np.abs(fvp - fd)) < 1e-4


def test_trpo_no_op_on_unimprovable_surrogate():
    trainer = make("trpo")
    rng = np.random.default_rng(5)
    obs = rng.uniform(0, 1, size=(16, 1))
    means = trainer.policy.mean_np(obs)
    actions = means + 0.05 * rng.normal(size=(16, 1))
    logp = trainer.policy.log_prob_np(means, actions)
    trainer._log_std_at_collect = trainer.policy.net.log_std.data.copy()
    before = flat_params(trainer.policy.parameters())
    accepted = trainer.natural_step(obs, actions, logp, means, np.zeros(16))
    after = flat_params(trainer.policy.parameters())
    assert not accepted
    assert np.array_equal(before, after)


# -- PPO ------------------------------------------------------------------------


def test_ppo_clip_algebra_single_sample():
    eps = 0.2
    adv = 1.7
    ratio = 1.0 + 2 * eps
    clipped = np.clip(ratio, 1 - eps, 1 + eps)
    assert min(ratio * adv, clipped * adv) == pytest.approx((1 + eps) * adv)


def test_ppo_ratio_one_surrogate_is_mean_advantage():
    trainer = make("ppo")
    rng = np.random.default_rng(6)
    obs = rng.uniform(0, 1, size=(32, 1))
    actions = trainer.policy.mean_np(obs) + 0.1 * rng.normal(size=(32, 1))
    logp_old = trainer.policy.log_prob_np(trainer.policy.mean_np(obs), actions)
    adv = rng.normal(size=32)
    returns = rng.normal(size=32)
    loss = trainer.minibatch_loss(obs, actions, logp_old, adv, returns)
    value = trainer.value_net.forward_np(obs)[:, 0]
    expected = -float(adv.mean()) + trainer.cfg.vf_coef * float(
        np.mean((value - returns) ** 2))
    assert float(loss.data) == pytest.approx(expected, rel=1e-10)


def test_gaussian_entropy_closed_form():
    trainer = make("ppo")
    trainer.policy.net.log_std.data[:] = 0.0  # sigma = 1, one action dim
    expected = 0.5 * np.log(2 * np.pi * np.e)
    assert float(trainer.policy.entropy().data) == pytest.approx(expected, abs=1e-10)


# -- SAC ------------------------------------------------------------------------


def test_sac_alpha_zero_reduces_to_min_critic_target():
    trainer = make("sac")
    batch = {"s": np.array([[0.4]]), "a": np.array([[0.1]]),
             "r": np.array([0.7]), "s_next": np.array([[0.6]]),
             "d": np.array([0.0])}
    rng_state = trainer.streams.explore.generator.bit_generator.state
    y0 = trainer.compute_target(batch, alpha=0.0)
    trainer.streams.explore.generator.bit_generator.state = rng_state
    a_next, _ = trainer.actor.sample_with_log_prob_np(batch["s_next"],
                                                      trainer.streams.explore)
    q = min(trainer.target_critics[0].q_np(batch["s_next"], a_next)[0, 0],
            trainer.target_critics[1].q_np(batch["s_next"], a_next)[0, 0])
    assert y0[0] == pytest.approx(0.7 + trainer.cfg.gamma * q, rel=1e-12)


def test_sac_actions_always_inside_box():
    trainer = make("sac")
    rng = RngStream(3, 9)
    for _ in range(2000):
        a = trainer.select_action(np.array([rng.uniform(0, 1)]), explore=True)
        assert -1.0 <= a[0] <= 1.0


def test_squashed_log_prob_normalizes_by_quadrature():
    # Integrate exp(log pi(a)) over the action interval on a fine grid.
    policy = SquashedGaussianPolicy(1, BoxSpace(low=[-1.0], high=[1.0]), 16,
                                    np.random.default_rng(0))
    policy.net.log_std.data[:] = np.log(0.7)
    obs = np.array([[0.3]])
    mean = policy.net.forward_np(obs)[0, 0]
    std = 0.7
    a_grid = np.linspace(-1 + 1e-9, 1 - 1e-9, 200_001)
    u = np.arctanh(a_grid)
    logp = (-0.5 * ((u - mean) / std) ** 2 - np.log(std) - 0.5 * np.log(2 * np.pi)
            - np.log(1.0 * (1 - np.tanh(u) ** 2) + 1e-6))
    mass = np.trapezoid(np.exp(logp), a_grid)
    assert mass == pytest.approx(1.0, abs=1e-3)


def test_sac_holds_exactly_two_critics():
    trainer = make("sac")
    assert len(trainer.critics) == 2 and len(trainer.target_critics) == 2


# -- TQC ------------------------------------------------------------------------


def test_quantile_huber_hand_cases():
    tau = np.array([0.25])
    # u = 1, kappa = 1: |tau - 0| * 0.5 = tau / 2.
    loss = quantile_huber_loss(Tensor(np.array([1.0])), tau)
    assert float(loss.data[0]) == pytest.approx(0.125, abs=1e-12)
    # u = -1: weight flips to 1 - tau.
    loss = quantile_huber_loss(Tensor(np.array([-1.0])), tau)
    assert float(loss.data[0]) == pytest.approx(0.75 * 0.5, abs=1e-12)
    # u = 2, linear branch: L = kappa * (|u| - kappa / 2) = 1.5.
    loss = quantile_huber_loss(Tensor(np.array([2.0])), np.array([0.5]))
    assert float(loss.data[0]) == pytest.approx(0.75, abs=1e-12)
    # zero error -> zero loss
    loss = quantile_huber_loss(Tensor(np.array([0.0])), tau)
    assert float(loss.data[0]) == 0.0


def test_fused_loss_equals_composed_path():
    rng = np.random.default_rng(7)
    b, nq, k = 5, 7, 9
    tau = quantile_fractions(nq)[None, :, None]
    q_data = rng.normal(size=(b, nq))
    y = rng.normal(size=(b, k))
    q1 = Tensor(q_data.copy(), requires_grad=True)
    fused = truncated_quantile_loss(q1, y, tau)
    fused.backward()
    q2 = Tensor(q_data.copy(), requires_grad=True)
    u = Tensor(y[:, None, :]) - q2.reshape(b, nq, 1)
    composed = quantile_huber_loss(u, tau).mean()
    composed.backward()
    assert float(fused.data) == pytest.approx(float(composed.data), rel=1e-12)
    assert np.max(np.abs(q1.grad - q2.grad.reshape(b, nq))) < 1e-12


def test_tqc_degenerates_to_sac_scalar_target():
    # One quantile, nothing dropped: the pooled target is the per-critic value;
    # with a single critic it equals SAC's scalar target with min over one.
    trainer = make("tqc", n_quantiles=1, n_critics=1, n_drop_per_critic=0)
    batch = {"s": np.array([[0.4]]), "a": np.array([[0.1]]),
             "r": np.array([0.7]), "s_next": np.array([[0.6]]),
             "d": np.array([0.0])}
    state = trainer.streams.explore.generator.bit_generator.state
    y = trainer.truncated_target_quantiles(batch, alpha=0.2)
    trainer.streams.explore.generator.bit_generator.state = state
    a_next, logp = trainer.actor.sample_with_log_prob_np(batch["s_next"],
                                                         trainer.streams.explore)
    q = trainer.target_critics[0].q_np(batch["s_next"], a_next)[0, 0]
    expected = 0.7 + trainer.cfg.gamma * (q - 0.2 * logp[0])
    assert y.shape == (1, 1)
    assert y[0, 0] == pytest.approx(expected, rel=1e-12)


def test_tqc_truncation_drops_largest_quantiles():
    trainer = make("tqc", n_quantiles=3, n_critics=2, n_drop_per_critic=1)
    batch = {"s": np.zeros((4, 1)), "a": np.zeros((4, 1)),
             "r": np.zeros(4), "s_next": np.random.default_rng(0).uniform(0, 1, (4, 1)),
             "d": np.zeros(4)}
    y = trainer.truncated_target_quantiles(batch, alpha=0.0)
    assert y.shape == (4, 4)  # 6 pooled - 2 dropped
    rows_sorted = np.all(np.diff(y, axis=1) >= 0)
    assert rows_sorted


def test_tqc_holds_configured_critic_count():
    trainer = make("tqc", n_critics=3)
    assert len(trainer.critics) == 3 and len(trainer.target_critics) == 3


# -- select_action contract ----------------------------------------------------------


def test_select_action_deterministic_repeatable():
    trainer = make("ddpg")
    obs = np.array([0.42])
    a1 = trainer.select_action(obs, explore=False)
    a2 = trainer.select_action(obs, explore=False)
    assert np.array_equal(a1, a2)


def test_exploration_noise_std_measured():
    trainer = make("ddpg", exploration_noise=0.2)
    obs = np.array([0.42])
    base = trainer.select_action(obs, explore=False)[0]
    draws = np.array([trainer.actor.act_np(obs)[0]
                      + trainer.streams.explore.normal(0.0, 0.2) for _ in range(100_000)])
    assert np.std(draws - base) == pytest.approx(0.2, rel=0.02)


def test_select_action_always_in_box():
    for tag in ("dpg", "ddpg", "td3", "sac", "tqc", "reinforce", "ppo", "trpo"):
        trainer = make(tag, exploration_noise=2.0) if tag in ("dpg", "ddpg", "td3") \
            else make(tag)
        for _ in range(200):
            a = trainer.select_action(np.array([0.5]), explore=True)
            assert -1.0 <= a[0] <= 1.0
