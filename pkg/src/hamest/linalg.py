"""Dense complex linear algebra kernel.

Everything else in the package is built on the handful of operations here:
Hermitian eigendecomposition with a deterministic ordering and phase gauge,
matrix exponentials of Hermitian generators, tensor products, partial traces
and seeded random ensembles.

All functions are pure: outputs depend only on the inputs (random sources are
passed explicitly as :class:`numpy.random.Generator`), so every routine is
safe to call concurrently from multiple threads.

Conventions
-----------
* Eigenvalues in a :class:`SpectralData` are sorted decreasingly.
* Eigenvector phase gauge: the largest-magnitude component (lowest index on
  magnitude ties) is made real and nonnegative.
* The spectral gap of a Hermitian matrix is the nonnegative width
  ``lambda_max - lambda_min`` of its spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tolerances


class DegenerateSpectrumError(ValueError):
    """Raised when an operation requires a non-degenerate spectrum.

    Carries the offending eigenvalue gap so callers can report how close to
    degenerate the input was.
    """

    def __init__(self, gap: float, threshold: float):
        self.gap = float(gap)
        self.threshold = float(threshold)
        super().__init__(
            f"near-degenerate spectrum: smallest eigenvalue gap {gap:.3e} "
            f"is below the threshold {threshold:.3e}"
        )


def _as_square_complex(m, name: str = "matrix") -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    if not (np.all(np.isfinite(a.real)) and np.all(np.isfinite(a.imag))):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def as_hermitian(m, *, atol: float | None = None) -> np.ndarray:
    """Validate Hermiticity of ``m`` and return the symmetrized ``(M + M^+)/2``.

    Raises ``ValueError`` if ``m`` is farther than ``atol`` (Frobenius) from
    its conjugate transpose.
    """
    a = _as_square_complex(m)
    if atol is None:
        atol = tolerances.active().hermitian_atol
    defect = np.linalg.norm(a - a.conj().T)
    if defect > atol * max(1.0, np.linalg.norm(a)):
        raise ValueError(f"matrix is not Hermitian: ||M - M^+|| = {defect:.3e}")
    return 0.5 * (a + a.conj().T)


def check_unitary(u, *, atol: float | None = None) -> np.ndarray:
    """Validate ``U^+ U = I`` within Frobenius tolerance and return ``u``."""
    a = _as_square_complex(u, "unitary")
    if atol is None:
        atol = tolerances.active().unitary_atol
    defect = np.linalg.norm(a.conj().T @ a - np.eye(a.shape[0]))
    if defect > atol:
        raise ValueError(f"matrix is not unitary: ||U^+U - I|| = {defect:.3e}")
    return a


def gauge_fix(vectors: np.ndarray, *, tie_atol: float | None = None) -> np.ndarray:
    """Fix the phase of each column so its pivot component is real and >= 0.

    The pivot is the largest-magnitude component; ties within ``tie_atol``
    resolve to the lowest index, which makes the output deterministic.
    """
    if tie_atol is None:
        tie_atol = tolerances.active().gauge_tie_atol
    out = np.array(vectors, dtype=complex, copy=True)
    mags = np.abs(out)
    for j in range(out.shape[1]):
        col_mags = mags[:, j]
        pivot = int(np.argmax(col_mags >= col_mags.max() - tie_atol))
        z = out[pivot, j]
        if abs(z) > 0:
            out[:, j] *= z.conj() / abs(z)
    return out


@dataclass(frozen=True)
class SpectralData:
    """Eigendecomposition of a Hermitian matrix.

    ``eigenvalues[i]`` pairs with column ``vectors[:, i]``; eigenvalues are
    sorted decreasingly and the eigenvectors carry the deterministic gauge of
    :func:`gauge_fix`.
    """

    eigenvalues: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def vector(self, i: int) -> np.ndarray:
        return self.vectors[:, i]

    @property
    def gap(self) -> float:
        """Width of the spectrum, ``lambda_max - lambda_min``."""
        return float(self.eigenvalues[0] - self.eigenvalues[-1])

    def min_level_spacing(self) -> float:
        if self.dim < 2:
            return np.inf
        return float(np.min(np.abs(np.diff(self.eigenvalues))))


def _validate_spectral(m: np.ndarray, sd: SpectralData) -> None:
    tol = tolerances.active()
    residual = np.linalg.norm(m @ sd.vectors - sd.vectors * sd.eigenvalues, axis=0)
    if np.any(residual > tol.eig_residual_atol * max(1.0, np.linalg.norm(m))):
        raise ArithmeticError(
            f"eigendecomposition residual {residual.max():.3e} above tolerance"
        )
    gram = sd.vectors.conj().T @ sd.vectors
    if np.linalg.norm(gram - np.eye(sd.dim)) > tol.orthonormal_atol:
        raise ArithmeticError("eigenvectors are not orthonormal within tolerance")


def eigendecompose(m, *, allow_degenerate: bool = False) -> SpectralData:
    """Eigendecompose a Hermitian matrix into deterministic :class:`SpectralData`.

    Unless ``allow_degenerate`` is set, a smallest consecutive eigenvalue gap
    below ``degeneracy_rtol * max(1, |lambda_max|)`` raises
    :class:`DegenerateSpectrumError`: downstream constructions pick eigenbases
    and silently choosing one inside a near-degenerate subspace would not be
    reproducible physics.
    """
    a = as_hermitian(m)
    tol = tolerances.active()
    w, v = np.linalg.eigh(a)
    order = np.argsort(-w, kind="stable")
    w = w[order]
    v = gauge_fix(v[:, order])
    sd = SpectralData(eigenvalues=w, vectors=v)
    if not allow_degenerate and sd.dim >= 2:
        threshold = tol.degeneracy_rtol * max(1.0, abs(float(w[0])))
        spacing = sd.min_level_spacing()
        if spacing < threshold:
            raise DegenerateSpectrumError(spacing, threshold)
    _validate_spectral(a, sd)
    return sd


def spectral_gap(m) -> float:
    """Nonnegative spectral width ``lambda_max - lambda_min`` of a Hermitian matrix."""
    a = as_hermitian(m)
    w = np.linalg.eigvalsh(a)
    return float(w[-1] - w[0])


def herm_exp(m, scale: float) -> np.ndarray:
    """``exp(1j * scale * M)`` for Hermitian ``M``, via eigendecomposition.

    Exact up to eigensolver accuracy and valid for degenerate spectra; the
    result satisfies the unitarity check.
    """
    a = as_hermitian(m)
    w, v = np.linalg.eigh(a)
    u = (v * np.exp(1j * scale * w)) @ v.conj().T
    return check_unitary(u)


def kron(a, b) -> np.ndarray:
    """Tensor product with the first factor most significant."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def partial_trace(rho, dims, keep) -> np.ndarray:
    """Trace out all subsystems not listed in ``keep``.

    ``dims`` gives the local dimensions of the tensor factors of ``rho`` in
    order; ``keep`` is a nonempty collection of factor indices.  The result is
    ordered by the kept indices sorted ascendingly.  Trace and Hermiticity are
    preserved.
    """
    a = _as_square_complex(rho, "rho")
    dims = [int(d) for d in dims]
    if np.prod(dims) != a.shape[0]:
        raise ValueError(
            f"dimension mismatch: product of dims {dims} != matrix dim {a.shape[0]}"
        )
    kept = sorted(set(int(k) for k in keep))
    n = len(dims)
    if not kept or any(k < 0 or k >= n for k in kept):
        raise ValueError(f"keep must be a nonempty subset of 0..{n - 1}, got {keep}")

    t = a.reshape(dims + dims)
    row = [chr(ord("a") + i) for i in range(n)]
    col = [chr(ord("A") + i) for i in range(n)]
    for i in range(n):
        if i not in kept:
            col[i] = row[i]
    out_sub = "".join(row[i] for i in kept) + "".join(col[i] for i in kept)
    reduced = np.einsum("".join(row) + "".join(col) + "->" + out_sub, t)
    d_kept = int(np.prod([dims[i] for i in kept]))
    return reduced.reshape(d_kept, d_kept)


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Gaussian Hermitian matrix ``(G + G^+)/2`` with standard-normal complex entries."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return 0.5 * (g + g.conj().T)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary from the QR of a Gaussian matrix.

    The R-diagonal phase correction removes the QR gauge so the distribution
    is exactly Haar; the draw is deterministic for a given generator state.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    q = q * (d / np.abs(d))
    return check_unitary(q)


def random_ket(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random pure state vector."""
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return z / np.linalg.norm(z)
