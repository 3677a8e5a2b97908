"""Numeric tolerances used throughout the package.

All geometric comparisons are scale-aware: a tolerance ``t`` applied to a
quantity of magnitude ``s`` uses ``t * max(1, s)``.
"""

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    zero: float = 1e-12        # below this a vector counts as zero
    feas: float = 1e-8         # halfspace feasibility slack
    dup: float = 1e-9          # merge radius for duplicate points / halfspaces
    support: float = 1e-7      # tight-at-generator threshold
    kkt: float = 1e-6          # KKT residual bound for reported optima
    opt_smooth: float = 1e-8   # target accuracy, smooth interior-point path
    opt_nonsmooth: float = 1e-6  # target accuracy after epigraph transcription
    vertical: float = 1e-7     # normalized last coordinate below which a
                               # dual-space hyperplane counts as vertical
    drift: float = 1e7         # image magnitude that flags a scalar optimum
                               # as "not attained" (iterates drifted away)
    solver_max_iter: int = 200
    unbounded_value: float = 1e12

    def with_(self, **kw) -> "Tolerances":
        return replace(self, **kw)


DEFAULT_TOLERANCES = Tolerances()
