"""Classical and quantum Fisher information.

The classical Fisher information of a parametrized outcome distribution is
``sum_x p_x (d ln p_x / dxi)^2``; maximized over regular measurements it
becomes the quantum Fisher information, and additionally over preparations
the channel quantum Fisher information, which for unitary encodings equals
the squared spectral gap of the local generator.

States are plain numpy arrays: a 1-d unit vector is a pure state, a 2-d
matrix a density operator.  Probability differentiation follows the shared
step policy (``h = 1e-5 max(1, |xi|)`` with one Richardson level).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tolerances
from .hamiltonians import (
    HamiltonianFamily,
    _fd_step,
    _richardson,
    evolution,
    generator_of_evolution,
)
from .linalg import as_hermitian, eigendecompose, spectral_gap


class SupportBoundaryError(ArithmeticError):
    """An outcome probability vanishes while its derivative does not.

    The model support is effectively parameter dependent at this point, a
    non-regular situation whose precision the Fisher information cannot
    summarize; refusing to return a number is the only honest option.
    """


def state_vector(psi) -> np.ndarray:
    """Validate and return a pure state as a unit complex vector."""
    v = np.asarray(psi, dtype=complex).reshape(-1)
    if not (np.all(np.isfinite(v.real)) and np.all(np.isfinite(v.imag))):
        raise ValueError("state vector contains non-finite entries")
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > tolerances.active().state_norm_atol:
        raise ValueError(f"state vector norm {norm} is not 1")
    return v


def density_matrix(state) -> np.ndarray:
    """Coerce a ket or density matrix into a validated density matrix."""
    a = np.asarray(state, dtype=complex)
    if a.ndim == 1:
        v = state_vector(a)
        return np.outer(v, v.conj())
    tol = tolerances.active()
    rho = as_hermitian(a, atol=tol.density_trace_atol)
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol.density_trace_atol:
        raise ValueError(f"density matrix trace {tr} is not 1")
    w = np.linalg.eigvalsh(rho)
    if w.min() < -tol.density_psd_atol:
        raise ValueError(f"density matrix has negative eigenvalue {w.min():.3e}")
    return rho


@dataclass(frozen=True)
class Povm:
    """A finite positive operator-valued measure with outcome labels.

    Elements must be positive semidefinite and resolve the identity.
    """

    elements: tuple
    labels: tuple

    def __post_init__(self):
        tol = tolerances.active()
        elements = tuple(as_hermitian(e, atol=1e-9) for e in self.elements)
        if len(elements) == 0:
            raise ValueError("POVM needs at least one element")
        if len(self.labels) != len(elements):
            raise ValueError("labels and elements differ in length")
        dim = elements[0].shape[0]
        total = np.zeros((dim, dim), dtype=complex)
        for e in elements:
            if e.shape[0] != dim:
                raise ValueError("POVM elements have inconsistent dimensions")
            if np.linalg.eigvalsh(e).min() < -tol.povm_psd_atol:
                raise ValueError("POVM element is not positive semidefinite")
            total += e
        if np.linalg.norm(total - np.eye(dim)) > tol.povm_completeness_atol:
            raise ValueError("POVM elements do not resolve the identity")
        object.__setattr__(self, "elements", elements)
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    def __len__(self) -> int:
        return len(self.elements)


def projective_povm(basis, labels=None) -> Povm:
    """Rank-1 projective POVM from the columns of a unitary ``basis``."""
    b = np.asarray(basis, dtype=complex)
    elements = [np.outer(b[:, j], b[:, j].conj()) for j in range(b.shape[1])]
    if labels is None:
        labels = tuple(range(b.shape[1]))
    return Povm(elements=tuple(elements), labels=tuple(labels))


@dataclass(frozen=True)
class ProbDist:
    """Probability vector over labelled outcomes.

    Entries in ``[-prob_negative_atol, 0)`` are clipped to zero; anything more
    negative, or a total farther than ``prob_sum_atol`` from one, is an error.
    """

    probabilities: np.ndarray
    labels: tuple

    def __post_init__(self):
        tol = tolerances.active()
        p = np.asarray(self.probabilities, dtype=float).reshape(-1)
        if not np.all(np.isfinite(p)):
            raise ValueError("probabilities contain non-finite entries")
        if p.min() < -tol.prob_negative_atol:
            raise ValueError(f"negative probability {p.min():.3e}")
        p = np.where(p < 0.0, 0.0, p)
        if abs(p.sum() - 1.0) > tol.prob_sum_atol:
            raise ValueError(f"probabilities sum to {p.sum()}, not 1")
        if len(self.labels) != p.shape[0]:
            raise ValueError("labels and probabilities differ in length")
        object.__setattr__(self, "probabilities", p)
        object.__setattr__(self, "labels", tuple(self.labels))

    def __len__(self) -> int:
        return self.probabilities.shape[0]


def outcome_dist(state, povm: Povm) -> ProbDist:
    """Born-rule outcome distribution of measuring ``povm`` on ``state``."""
    a = np.asarray(state, dtype=complex)
    if a.ndim == 1:
        v = state_vector(a)
        if v.shape[0] != povm.dim:
            raise ValueError("state and POVM dimensions differ")
        p = np.array([np.vdot(v, e @ v).real for e in povm.elements])
    else:
        rho = density_matrix(a)
        if rho.shape[0] != povm.dim:
            raise ValueError("state and POVM dimensions differ")
        p = np.array([np.trace(rho @ e).real for e in povm.elements])
    return ProbDist(probabilities=p, labels=povm.labels)


def _probabilities(dist) -> np.ndarray:
    if isinstance(dist, ProbDist):
        return dist.probabilities
    return np.asarray(dist, dtype=float).reshape(-1)


def fi_from_derivative(p: np.ndarray, dp: np.ndarray) -> float:
    """Fisher information from a probability vector and its derivative.

    Outcomes below the ``zero_probability`` cutoff contribute nothing unless
    their derivative is materially nonzero, which raises
    :class:`SupportBoundaryError` instead of returning a silently divergent
    value.
    """
    tol = tolerances.active()
    p = np.asarray(p, dtype=float)
    dp = np.asarray(dp, dtype=float)
    dead = p < tol.zero_probability
    if np.any(dead & (np.abs(dp) > tol.support_derivative)):
        j = int(np.argmax(dead & (np.abs(dp) > tol.support_derivative)))
        raise SupportBoundaryError(
            f"outcome {j} has probability {p[j]:.3e} but derivative {dp[j]:.3e}; "
            "the model support moves with the parameter here"
        )
    live = ~dead
    return float(np.sum(dp[live] ** 2 / p[live]))


def classical_fi(dist_fn, xi: float, step: float | None = None) -> float:
    """Fisher information of ``xi -> dist_fn(xi)`` at ``xi``.

    ``dist_fn`` may return a :class:`ProbDist` or a raw probability vector;
    probabilities (not amplitudes) are differenced with the shared central
    difference plus Richardson step policy.
    """
    xi = float(xi)
    h = _fd_step(xi, step)
    p0 = _probabilities(dist_fn(xi))
    dp = _richardson(lambda x: _probabilities(dist_fn(x)), xi, h)
    return fi_from_derivative(p0, dp)


def sld(rho_fn, xi: float, step: float | None = None) -> np.ndarray:
    """Symmetric logarithmic derivative of the model ``xi -> rho_fn(xi)``.

    Solves ``d rho = (rho L + L rho) / 2``.  For ket-valued models the rank-2
    pure-state formula ``L = 2 |dpsi><psi| + 2 |psi><dpsi|`` is used (the kets
    must vary smoothly in phase).  For density matrices the equation is solved
    in the eigenbasis of ``rho``; matrix elements on eigenvalue pairs summing
    below ``sld_kernel`` are set to zero.
    """
    xi = float(xi)
    h = _fd_step(xi, step)
    s0 = np.asarray(rho_fn(xi), dtype=complex)
    if s0.ndim == 1:
        psi = state_vector(s0)
        dpsi = _richardson(
            lambda x: np.asarray(rho_fn(x), dtype=complex).reshape(-1), xi, h
        )
        l = 2.0 * (np.outer(dpsi, psi.conj()) + np.outer(psi, dpsi.conj()))
        return 0.5 * (l + l.conj().T)

    rho = density_matrix(s0)
    drho = _richardson(lambda x: density_matrix(rho_fn(x)), xi, h)
    tol = tolerances.active()
    w, v = np.linalg.eigh(rho)
    d_eig = v.conj().T @ drho @ v
    denom = w[:, None] + w[None, :]
    mask = denom >= tol.sld_kernel
    l_eig = np.where(mask, 2.0 * d_eig / np.where(mask, denom, 1.0), 0.0)
    l = v @ l_eig @ v.conj().T
    return 0.5 * (l + l.conj().T)


def qfi_pure(
    fam: HamiltonianFamily, psi0, xi: float, t: float, step: float | None = None
) -> float:
    """Quantum Fisher information ``4 Var(g_U)`` of a pure unitary model."""
    psi = state_vector(psi0)
    u = evolution(fam, xi, t)
    psi_t = u @ psi
    g = generator_of_evolution(fam, xi, t, step)
    g_psi = g @ psi_t
    mean = np.vdot(psi_t, g_psi).real
    second = np.vdot(g_psi, g_psi).real
    return float(4.0 * (second - mean**2))


def cqfi(fam: HamiltonianFamily, xi: float, t: float, step: float | None = None) -> float:
    """Channel quantum Fisher information: squared spectral gap of ``g_U``."""
    return spectral_gap(generator_of_evolution(fam, xi, t, step)) ** 2


def optimal_bc_preparation(
    fam: HamiltonianFamily, xi: float, t: float, step: float | None = None
) -> np.ndarray:
    """Preparation whose quantum Fisher information attains the channel value.

    The balanced superposition of the extremal eigenvectors of ``g_U``,
    pulled back through the evolution so that it applies at time zero.
    """
    g = generator_of_evolution(fam, xi, t, step)
    sd = eigendecompose(g, allow_degenerate=True)
    psi = (sd.vector(0) + sd.vector(sd.dim - 1)) / np.sqrt(2.0)
    u = evolution(fam, xi, t)
    return u.conj().T @ psi
