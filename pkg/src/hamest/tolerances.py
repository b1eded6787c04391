"""Central numerical tolerance configuration.

Every validation threshold used by the toolkit lives in one frozen record,
so a single profile switch changes all checks consistently.  The active
profile is module-global; it is meant to be selected once at startup (the
command line front end reads it from the ``HAMEST_TOL_PROFILE`` environment
variable) and left alone afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    # construction / validation
    hermitian_atol: float = 1e-12      # admissible ||M - M^+|| before symmetrizing
    unitary_atol: float = 1e-10        # Frobenius norm of U^+ U - I
    eig_residual_atol: float = 1e-9    # ||M v - lambda v|| per eigenpair
    orthonormal_atol: float = 1e-9     # pairwise eigenvector orthonormality
    gauge_tie_atol: float = 1e-12      # magnitude tie when picking the gauge pivot
    degeneracy_rtol: float = 1e-9      # relative eigenvalue-gap threshold
    generator_hermitian_atol: float = 1e-8
    state_norm_atol: float = 1e-12
    density_trace_atol: float = 1e-10
    density_psd_atol: float = 1e-10
    povm_psd_atol: float = 1e-10
    povm_completeness_atol: float = 1e-9
    prob_negative_atol: float = 1e-12
    prob_sum_atol: float = 1e-9
    # differentiation and Fisher information
    fd_step_scale: float = 1e-5        # h = fd_step_scale * max(1, |xi|)
    zero_probability: float = 1e-12    # outcomes below this are off the support
    support_derivative: float = 1e-6   # |dp| above this on a dead outcome is an error
    sld_kernel: float = 1e-10          # eigenvalue-pair cutoff in the SLD solve
    gauge_overlap_min: float = 0.9     # eigenvector matching across a difference step
    # phase-estimation kernels
    kernel_singularity: float = 1e-8   # |sin(alpha/2)| below this uses the limit value


PROFILES: dict[str, Tolerances] = {
    "default": Tolerances(),
    # Everything two decades looser; for quick exploratory sweeps on large dims.
    "relaxed": replace(
        Tolerances(),
        hermitian_atol=1e-10,
        unitary_atol=1e-8,
        eig_residual_atol=1e-7,
        orthonormal_atol=1e-7,
        degeneracy_rtol=1e-7,
        generator_hermitian_atol=1e-6,
        density_trace_atol=1e-8,
        density_psd_atol=1e-8,
        povm_psd_atol=1e-8,
        povm_completeness_atol=1e-7,
        prob_sum_atol=1e-7,
    ),
}

_active = PROFILES["default"]


def active() -> Tolerances:
    """Return the tolerance record currently in force."""
    return _active


def use_profile(name: str) -> Tolerances:
    """Switch the active tolerance profile; returns the new record."""
    global _active
    try:
        _active = PROFILES[name]
    except KeyError:
        raise KeyError(
            f"unknown tolerance profile {name!r}; available: {sorted(PROFILES)}"
        ) from None
    return _active
