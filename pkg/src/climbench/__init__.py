"""climbench: continuous-action RL algorithms benchmarked on idealised climate tasks."""

__version__ = "0.1.0"
