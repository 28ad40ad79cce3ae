"""Temperature bias-correction environment, versions v0/v1/v2.

One scalar state (the current temperature) relaxed each step toward a biased
physics value and toward observations, plus a learned heating increment u in
[-1, 1]. The new temperature appears on both sides of the update relation, so
the implicit linear equation is solved in closed form:

    with D = T_physics - T_observed and
         X = T_current + u + a * (T_physics - T_current) / D,
    T_new = (X + b * T_observed / D) / (1 + b / D).

Reward variants:
  v0  -[ (T_observed - T_new) / D * b ]^2
  v1  -((T_observed - T_current) / (norm_high - norm_low))^2, i.e. the squared
      error of the pre-update temperature in normalized units
  v2  the v1 value emitted ``lag`` steps later; anything still pending when the
      episode truncates is flushed into the final step, so episode totals match
      v1 exactly.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .core import BoxSpace, ClimateEnv

__all__ = ["BiasCorrParams", "BiasCorrectionEnv", "update_temperature",
           "biascorr_reward", "BIASCORR_VERSIONS"]

BIASCORR_VERSIONS = ("v0", "v1", "v2")


@dataclass
class BiasCorrParams:
    t_observed: float = 321.75
    t_physics: float = 323.75       # 2 K warm bias; the source of the drift
    relax_a: float = 0.2
    relax_b: float = 0.1
    norm_low: float = 310.0
    norm_high: float = 330.0
    initial_temperature: float = 320.0
    lag: int = 5                    # v2 reward delay, steps
    max_steps: int = 200

    def __post_init__(self):
        if self.t_physics == self.t_observed:
            raise ValueError("t_physics must differ from t_observed")
        if not self.norm_low < self.norm_high:
            raise ValueError("norm_low must be below norm_high")
        if self.lag < 1:
            raise ValueError("lag must be >= 1")
        d = self.t_physics - self.t_observed
        if abs(1.0 + self.relax_b / d) < 1e-12:
            raise ValueError("degenerate relaxation: 1 + relax_b/D is zero")

    @property
    def bias_denominator(self) -> float:
        return self.t_physics - self.t_observed


def update_temperature(t_current: float, u: float, p: BiasCorrParams) -> float:
    """Exact solution of the implicit temperature update (u already clipped)."""
    d = p.bias_denominator
    x = t_current + u + p.relax_a * (p.t_physics - t_current) / d
    return (x + p.relax_b * p.t_observed / d) / (1.0 + p.relax_b / d)


def biascorr_reward(version: str, t_new: float, t_current: float,
                    p: BiasCorrParams) -> float:
    """The per-step reward value for a version (before any v2 lag shift)."""
    if version == "v0":
        err = (p.t_observed - t_new) / p.bias_denominator * p.relax_b
        return -(err * err)
    if version in ("v1", "v2"):
        err = (p.t_observed - t_current) / (p.norm_high - p.norm_low)
        return -(err * err)
    raise ValueError(f"unknown version {version!r}")


class BiasCorrectionEnv(ClimateEnv):
    """Scalar temperature control; observation is the normalized temperature."""

    def __init__(self, version: str = "v0", params: BiasCorrParams | None = None):
        super().__init__()
        if version not in BIASCORR_VERSIONS:
            raise ValueError(f"unknown version {version!r}")
        self.version = version
        self.params = params or BiasCorrParams()
        self.max_steps = self.params.max_steps
        self.action_space = BoxSpace(low=[-1.0], high=[1.0])
        self.observation_space = BoxSpace(low=[0.0], high=[1.0])
        self.t_current = self.params.initial_temperature
        self._pending: deque[tuple[int, float]] = deque()

    def _normalize(self, t: float) -> float:
        p = self.params
        return (t - p.norm_low) / (p.norm_high - p.norm_low)

    def _observe(self) -> np.ndarray:
        return np.array([self._normalize(self.t_current)])

    def _reset_state(self) -> np.ndarray:
        self.t_current = self.params.initial_temperature
        self._pending.clear()
        return self._observe()

    def _dynamics(self, action: np.ndarray):
        p = self.params
        t_old = self.t_current
        t_new = update_temperature(t_old, float(action[0]), p)
        self.t_current = t_new
        value = biascorr_reward(self.version, t_new, t_old, p)
        step = self._step_index  # index of the step being taken, 0-based
        if self.version == "v2":
            self._pending.append((step + p.lag, value))
            reward = 0.0
            while self._pending and self._pending[0][0] <= step:
                reward += self._pending.popleft()[1]
            if step + 1 >= self.max_steps:
                # Truncation: flush everything still pending into this step.
                while self._pending:
                    reward += self._pending.popleft()[1]
        else:
            reward = value
        info = {"temperature": t_new, "raw_reward": value}
        return self._observe(), reward, info
