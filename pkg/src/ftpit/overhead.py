"""Analytic cost model: wall-clock estimates and restart-vs-recovery overheads.

All times are in abstract units of sweep cost; the model ignores communication.
"""

import math
from dataclasses import dataclass

from .errors import ConfigurationError


@dataclass(frozen=True)
class CostModel:
    """Iteration counts and per-sweep costs of one faulty run."""

    num_procs: int            # P
    k_iterations: int         # K, no-fault iterations
    k_fault: int = 0          # iteration in which the fault strikes
    k_add: int = 0            # extra iterations caused by the fault (may be < 0)
    n_coarse: int = 1         # coarse sweeps per iteration
    n_fine: int = 1           # fine sweeps per iteration
    gamma_coarse: float = 1.0
    gamma_fine: float = 1.0
    n_rec: int = 0            # recovery sweeps on the coarse level
    gamma_rec: float = 0.0    # reconstruction overhead (startup, data transfer)

    def __post_init__(self):
        if self.gamma_fine <= 0.0:
            raise ConfigurationError("fine sweep cost must be positive")
        if min(self.num_procs, self.k_iterations, self.k_fault, self.n_rec) < 0:
            raise ConfigurationError("counts must be non-negative")
        if self.n_coarse < 1 or self.n_fine < 1:
            raise ConfigurationError("sweep counts per iteration must be at least 1")

    @property
    def alpha(self) -> float:
        """Coarse-to-fine cost ratio n_c*Gamma_c / (n_f*Gamma_f)."""
        return self.n_coarse * self.gamma_coarse / (self.n_fine * self.gamma_fine)


def t_no_fault(model: CostModel) -> float:
    """Fault-free wall-clock estimate (P + K)*n_c*G_c + K*n_f*G_f."""
    return ((model.num_procs + model.k_iterations) * model.n_coarse * model.gamma_coarse
            + model.k_iterations * model.n_fine * model.gamma_fine)


def t_restart(model: CostModel) -> float:
    """Wall clock when the whole block restarts after the fault."""
    return ((2 * model.num_procs + model.k_iterations + model.k_fault)
            * model.n_coarse * model.gamma_coarse
            + (model.k_iterations + model.k_fault) * model.n_fine * model.gamma_fine)


def t_recovery(model: CostModel) -> float:
    """Wall clock when recovery costs K_add extra iterations plus n_rec coarse sweeps."""
    return ((model.num_procs + model.k_iterations + model.k_add)
            * model.n_coarse * model.gamma_coarse
            + (model.k_iterations + model.k_add) * model.n_fine * model.gamma_fine
            + model.n_rec * model.gamma_coarse + model.gamma_rec)


def overhead_restart(model: CostModel) -> float:
    """Restart overhead (P + K_fault)*n_c*G_c + K_fault*n_f*G_f."""
    return ((model.num_procs + model.k_fault) * model.n_coarse * model.gamma_coarse
            + model.k_fault * model.n_fine * model.gamma_fine)


def overhead_recovery(model: CostModel) -> float:
    """Recovery overhead (K_add*n_c + n_rec)*G_c + K_add*n_f*G_f + G_rec."""
    return ((model.k_add * model.n_coarse + model.n_rec) * model.gamma_coarse
            + model.k_add * model.n_fine * model.gamma_fine + model.gamma_rec)


@dataclass(frozen=True)
class EfficiencyReport:
    ratio: float
    denominator_zero: bool
    k_add_within_k_fault: bool    # criterion (i):  K_add <= K_fault
    n_rec_within_budget: bool     # criterion (ii): n_rec <= n_c * P
    reconstruction_cheap: bool    # criterion (iii): Gamma_rec << n_f * Gamma_f

    @property
    def efficient(self) -> bool:
        return (self.k_add_within_k_fault and self.n_rec_within_budget
                and self.reconstruction_cheap)


def efficiency_ratio(model: CostModel) -> EfficiencyReport:
    """Overhead ratio restart/recovery in its closed form, plus the three criteria."""
    alpha = model.alpha
    numerator = (1.0 + alpha) * model.k_fault + alpha * model.num_procs
    denominator = ((1.0 + alpha) * model.k_add
                   + alpha * model.n_rec / model.n_coarse
                   + model.gamma_rec / (model.n_fine * model.gamma_fine))
    if denominator == 0.0:
        ratio, zero = math.inf, True
    else:
        ratio, zero = numerator / denominator, False
    return EfficiencyReport(
        ratio=ratio,
        denominator_zero=zero,
        k_add_within_k_fault=model.k_add <= model.k_fault,
        n_rec_within_budget=model.n_rec <= model.n_coarse * model.num_procs,
        reconstruction_cheap=model.gamma_rec < 0.1 * model.n_fine * model.gamma_fine,
    )
