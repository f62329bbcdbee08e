from .dppo import (
    DPPOConfig,
    DPPOState,
    ReturnSummary,
    Trajectory,
    TrainingResult,
    dppo_iteration,
    evaluate_policy,
    is_ratio,
    random_policy_returns,
    rollout,
    train,
)
from .env import EchelonParams, InventoryState, env_step, simulate_orders
from .policy import PolicySpec

__all__ = [
    "DPPOConfig",
    "DPPOState",
    "EchelonParams",
    "InventoryState",
    "PolicySpec",
    "ReturnSummary",
    "Trajectory",
    "TrainingResult",
    "dppo_iteration",
    "env_step",
    "evaluate_policy",
    "is_ratio",
    "random_policy_returns",
    "rollout",
    "simulate_orders",
    "train",
]
