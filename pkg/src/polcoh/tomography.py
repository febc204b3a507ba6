"""Density matrices from coherences, and quantum Stokes parameters."""

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NormalizationWarning, PositivityWarning
from .fock import CoherenceTensor, FixedNState, fock_weights

logger = logging.getLogger(__name__)

TRACE_TOL = 0.05
POSITIVITY_TOL = 1e-6


@dataclass(frozen=True)
class StokesVector:
    s0: float
    s1: float
    s2: float
    s3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.s0, self.s1, self.s2, self.s3])


@dataclass(frozen=True, eq=False)
class StokesCovariance:
    """Symmetric matrix ``V_ij = <{S_i, S_j}>/2 - <S_i><S_j>``."""

    v: np.ndarray

    def __post_init__(self) -> None:
        matrix = np.array(self.v, dtype=float, copy=True)
        if matrix.shape != (4, 4):
            raise DimensionError(f"Stokes covariance must be 4x4, got {matrix.shape}")
        matrix.setflags(write=False)
        object.__setattr__(self, "v", matrix)


@dataclass(frozen=True)
class DensityEstimate:
    """A density matrix rebuilt from coherences plus its validation report."""

    state: FixedNState
    trace: float
    min_eigenvalue: float
    warnings: tuple[UserWarning, ...] = field(default=())


def _factor_grid(N: int) -> np.ndarray:
    weights = fock_weights(N)
    return np.outer(weights, weights)


def density_from_coherences(tensor: CoherenceTensor, project_psd: bool = False) -> DensityEstimate:
    """Rebuild the N-photon density matrix from all order-N coherences.

    ``rho[m, n]`` is the coherence at ``(w, y) = (N - n, N - m)`` divided by
    ``sqrt(m! (N-m)! n! (N-n)!)``.

    Args:
        tensor: Hermitian order-N coherence tensor
        project_psd: Clip negative eigenvalues and renormalize the trace

    Returns:
        The estimate with trace, lowest eigenvalue and any warnings
    """
    tensor.check_hermitian()
    N = tensor.N
    rho = tensor.values[::-1, ::-1].T / _factor_grid(N)
    rho = (rho + rho.conj().T) / 2

    if project_psd:
        eigvals, eigvecs = np.linalg.eigh(rho)
        clipped = np.clip(eigvals, 0.0, None)
        if clipped.sum() > 0.0:
            clipped = clipped / clipped.sum()
        rho = (eigvecs * clipped) @ eigvecs.conj().T
        rho = (rho + rho.conj().T) / 2

    trace = float(np.trace(rho).real)
    lowest = float(np.min(np.linalg.eigvalsh(rho)))
    found: list[UserWarning] = []
    if abs(trace - 1.0) > TRACE_TOL:
        found.append(NormalizationWarning(f"density trace is {trace:.6g}"))
    if lowest < -POSITIVITY_TOL:
        found.append(PositivityWarning(f"density has eigenvalue {lowest:.6g}"))
    for warning in found:
        logger.warning("%s", warning)

    return DensityEstimate(
        state=FixedNState(N=N, kind="mixed", density=rho),
        trace=trace,
        min_eigenvalue=lowest,
        warnings=tuple(found),
    )


def coherences_from_density(state: FixedNState) -> CoherenceTensor:
    """Exact inverse of :func:`density_from_coherences`."""
    weighted = state.density_matrix() * _factor_grid(state.N)
    return CoherenceTensor(N=state.N, values=weighted.T[::-1, ::-1])


def classical_stokes(alpha1: complex, alpha2: complex) -> StokesVector:
    """Stokes parameters of a classical field with amplitudes alpha1, alpha2."""
    alpha1, alpha2 = complex(alpha1), complex(alpha2)
    cross = alpha1.conjugate() * alpha2
    return StokesVector(
        s0=abs(alpha1) ** 2 + abs(alpha2) ** 2,
        s1=abs(alpha1) ** 2 - abs(alpha2) ** 2,
        s2=(cross + cross.conjugate()).real,
        s3=(-1j * (cross - cross.conjugate())).real,
    )


# S_i = sum_kl M_i[k, l] a_k^+ a_l with modes k, l in {0, 1}
STOKES_MATRICES = np.array(
    [
        [[1, 0], [0, 1]],
        [[1, 0], [0, -1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
    ],
    dtype=complex,
)


def _anticommutator_tables() -> tuple[np.ndarray, np.ndarray]:
    """Normal-order S_i S_j with a_l a_m^+ = a_m^+ a_l + delta_lm.

    ``quadratic[i, j, w, y]`` multiplies the order-2 coherence at (w, y),
    ``linear[i, j, k, n]`` multiplies ``<a_k^+ a_n>``. Both are symmetrized
    over (i, j).
    """
    quadratic = np.zeros((4, 4, 3, 3), dtype=complex)
    linear = np.zeros((4, 4, 2, 2), dtype=complex)
    modes = range(2)
    for i in range(4):
        for j in range(4):
            mi, mj = STOKES_MATRICES[i], STOKES_MATRICES[j]
            for k in modes:
                for l in modes:
                    for m in modes:
                        for n in modes:
                            quadratic[i, j, k + m, l + n] += mi[k, l] * mj[m, n]
            linear[i, j] = (mi @ mj + mj @ mi) / 2
    quadratic = (quadratic + quadratic.transpose(1, 0, 2, 3)) / 2
    return quadratic, linear


QUADRATIC_TABLE, LINEAR_TABLE = _anticommutator_tables()


def _check_order(tensor: CoherenceTensor, order: int, name: str) -> None:
    if tensor.N != order:
        raise DimensionError(f"{name} must be an order-{order} tensor, got order {tensor.N}")
    tensor.check_hermitian()


def _stokes_means(first: CoherenceTensor) -> np.ndarray:
    # first.values[k, l] = <a_k^+ a_l>
    return np.real(np.einsum("ikl,kl->i", STOKES_MATRICES, first.values))


def stokes_means(first: CoherenceTensor) -> StokesVector:
    _check_order(first, 1, "first")
    return StokesVector(*(float(v) for v in _stokes_means(first)))


def stokes_variances(first: CoherenceTensor, second: CoherenceTensor) -> StokesCovariance:
    """Covariance matrix of the four Stokes operators from first- and second-order coherences."""
    _check_order(first, 1, "first")
    _check_order(second, 2, "second")
    means = _stokes_means(first)
    symmetric = np.einsum("ijwy,wy->ij", QUADRATIC_TABLE, second.values) + np.einsum(
        "ijkn,kn->ij", LINEAR_TABLE, first.values
    )
    v = np.real(symmetric) - np.outer(means, means)
    return StokesCovariance((v + v.T) / 2)
