from .hybrid import HybridController, hybrid_next
from .optimistic import OptimisticController, optimistic_next, optimistic_path, simulate_optimistic
from .tree import PolicyBuildParams, PolicyNode, PolicyTree, build_policy, expected_cost, trace_cost
from .uct import EdgeCountModel, UCTController, rollout_scores, uct_next

__all__ = [
    "HybridController", "hybrid_next", "OptimisticController", "optimistic_next", "optimistic_path",
    "simulate_optimistic", "PolicyBuildParams", "PolicyNode", "PolicyTree", "build_policy",
    "expected_cost", "trace_cost", "EdgeCountModel", "UCTController", "rollout_scores", "uct_next",
]
