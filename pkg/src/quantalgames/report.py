"""Result container shared by all solvers.

Solvers fill in strategies and run bookkeeping; evaluation fields (gain,
exploitability, expected utilities) are attached afterwards by the
metrics module so that every reported number is recomputed from the
output strategy rather than trusted from the solver loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


@dataclass
class SolveReport:
    algorithm: str
    final_strategy: Any = None
    avg_strategy: Any = None
    follower_strategy: Any = None
    gain: float | None = None
    exploitability: float | None = None
    eu_vs_qr: float | None = None
    eu_vs_br: float | None = None
    epsilon_br_of_opponent: float | None = None
    tuned_param: float | None = None
    iterations: int = 0
    wall_time: float = 0.0
    converged: bool = False
    flags: list = field(default_factory=list)

    def output_strategy(self):
        """The leader strategy this run stands behind (average when the
        solver averages, final iterate otherwise)."""
        return self.avg_strategy if self.avg_strategy is not None else self.final_strategy
