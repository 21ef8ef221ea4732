"""Band-gap structure, resonances and the quasimomentum map for 1-periodic systems."""

from .config import DEFAULT, Tolerances
from .potential import (CANONICAL, SCHRODINGER, PotentialSpec, PotentialSummary,
                        canonical_offdiag, constant, piecewise, sampled, trig,
                        validate, zero)
from .monodromy import (MonodromyResult, canonical_monodromy, monodromy_at,
                        monodromy_grid, picard_series, schrodinger_monodromy)
from .lyapunov import (BranchPath, BranchPointRecord, LyapunovSet,
                       classify_branch_point, continue_branches, lyapunov_at)

__version__ = "0.1.0"
