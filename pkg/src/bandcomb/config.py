"""Central tolerance and step-size configuration.

Every numerical threshold used by the package lives here so that tests and
the CLI can override them in one place.  Nothing in the library hard-codes a
tolerance inline.
"""

from dataclasses import dataclass, replace, fields


@dataclass(frozen=True)
class Tolerances:
    # dense eigensolve: |sum(eig) - trace| and relative |prod(eig) - det|
    tol_eig: float = 1e-10
    # unimodularity |det M - 1| and symplectic residual caps
    det_residual: float = 1e-8
    symplectic_residual: float = 1e-8
    # refuse monodromy evaluation above this |Im z| (raw double arithmetic)
    y_cap: float = 30.0
    # Magnus integrator base step; one halving is used for the error estimate
    magnus_step: float = 1.0 / 256.0
    # contour counting: minimum boundary samples and relative modulus floor
    contour_min_samples: int = 64
    contour_floor_rel: float = 1e-10
    contour_max_depth: int = 48
    # conditioning cap for forming L = (M + M^-1)/2
    lyapunov_cond_cap: float = 1e12
    # cluster tolerance when detecting permanently coincident branches
    branch_cluster_rel: float = 1e-7
    # adaptive continuation: required separation / per-step motion ratio
    branch_sep_factor: float = 8.0
    branch_collapse: float = 1e-12
    # vanishing-order fit for branch points
    order_fit_radii: tuple = (1e-5, 1e-2)
    order_fit_points: int = 12
    order_slope_tol: float = 0.2
    # gap endpoint refinement and classification
    endpoint_bisect: float = 1e-10
    classifier_threshold: float = 1e-6
    # permanently-degenerate probe: |rho| below this times scale at all probes
    degenerate_probe_rel: float = 1e-14
    # resonance polish
    newton_step_rel: float = 1e-6
    newton_max_polish: int = 3
    # principal value excision, in units of the local grid step
    pv_excision_steps: float = 4.0
    # decay check at truncation window ends, relative to max of q
    decay_window_rel: float = 1e-3
    # half-plane quadrature defaults
    halfplane_delta: float = 0.02
    halfplane_extent: float = 24.0
    # quadrature tail: abort if estimated tail exceeds this share of the total
    tail_share_cap: float = 0.01

    def override(self, **kw) -> "Tolerances":
        return replace(self, **kw)

    @classmethod
    def names(cls):
        return [f.name for f in fields(cls)]


DEFAULT = Tolerances()
