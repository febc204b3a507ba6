"""Exact two-mode Fock space with a fixed total photon number.

Basis index ``n`` counts the photons in mode 1, so index ``n`` stands for
``|n>_1 |N - n>_2``. Everything here is brute force, and the other
modules are checked against it.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Iterator, Literal, Optional, Union

import numpy as np

from .errors import (
    DimensionError,
    NormalizationError,
    RangeError,
    SymmetryError,
    UnitarityError,
)

logger = logging.getLogger(__name__)

MAX_PHOTONS = 16
STATE_TOL = 1e-12
EIGEN_TOL = 1e-10
UNITARY_TOL = 1e-10

StateKind = Literal["pure", "mixed"]


def _frozen(array: np.ndarray) -> np.ndarray:
    out = np.array(array, dtype=complex, copy=True)
    out.setflags(write=False)
    return out


def _check_photons(N: int) -> int:
    if isinstance(N, bool) or int(N) != N or N < 0:
        raise DimensionError(f"photon number must be a non-negative integer, got {N!r}")
    if N > MAX_PHOTONS:
        raise RangeError(f"photon number {N} exceeds the supported maximum {MAX_PHOTONS}")
    return int(N)


def fock_weights(N: int) -> np.ndarray:
    """Return ``sqrt(k! (N-k)!)`` for k = 0..N, from exact integer factorials."""
    return np.array(
        [math.sqrt(math.factorial(k) * math.factorial(N - k)) for k in range(N + 1)]
    )


@dataclass(frozen=True, eq=False)
class FixedNState:
    """A pure or mixed state of two modes holding exactly N photons.

    The constructor only checks shapes so that estimated densities can be
    carried around before validation. Use :func:`make_fixed_n_state` or
    :func:`mixed_state` to build validated states, or call :meth:`check`.
    """

    N: int
    kind: StateKind
    amplitudes: Optional[np.ndarray] = None
    density: Optional[np.ndarray] = None
    norm: float = 1.0

    def __post_init__(self) -> None:
        dim = self.N + 1
        if self.kind == "pure":
            if self.amplitudes is None or np.shape(self.amplitudes) != (dim,):
                raise DimensionError(f"pure state with N={self.N} needs {dim} amplitudes")
            object.__setattr__(self, "amplitudes", _frozen(self.amplitudes))
        elif self.kind == "mixed":
            if self.density is None or np.shape(self.density) != (dim, dim):
                raise DimensionError(f"mixed state with N={self.N} needs a {dim}x{dim} density")
            object.__setattr__(self, "density", _frozen(self.density))
        else:
            raise DimensionError(f"unknown state kind {self.kind!r}")

    @property
    def dim(self) -> int:
        return self.N + 1

    def density_matrix(self) -> np.ndarray:
        """Return the density matrix, building it from amplitudes for pure states."""
        if self.kind == "pure":
            return np.outer(self.amplitudes, self.amplitudes.conj())
        return np.array(self.density)

    def check(self) -> "FixedNState":
        """Validate normalization, Hermiticity and positivity, returning self."""
        if self.kind == "pure":
            total = float(np.sum(np.abs(self.amplitudes) ** 2))
            if abs(total - 1.0) > STATE_TOL:
                raise NormalizationError(f"pure state has squared norm {total!r}")
            return self

        rho = self.density
        trace = complex(np.trace(rho))
        if abs(trace - 1.0) > STATE_TOL:
            raise NormalizationError(f"density has trace {trace!r}")
        if np.max(np.abs(rho - rho.conj().T)) > STATE_TOL:
            raise SymmetryError("density matrix is not Hermitian")
        lowest = float(np.min(np.linalg.eigvalsh(rho)))
        if lowest < -EIGEN_TOL:
            raise NormalizationError(f"density has negative eigenvalue {lowest!r}")
        return self


def make_fixed_n_state(N: int, amplitudes) -> FixedNState:
    """Build a normalized pure state from raw amplitudes.

    Args:
        N: Total photon number
        amplitudes: N + 1 complex amplitudes in the ascending mode-1 basis

    Returns:
        The normalized state, with the original norm recorded in ``norm``
    """
    N = _check_photons(N)
    vector = np.asarray(amplitudes, dtype=complex)
    if vector.shape != (N + 1,):
        raise DimensionError(f"expected {N + 1} amplitudes, got shape {vector.shape}")
    if not np.all(np.isfinite(vector)):
        raise NormalizationError("amplitudes must be finite")
    norm = float(np.linalg.norm(vector))
    if norm == 0.0:
        raise NormalizationError("cannot normalize the zero vector")
    return FixedNState(N=N, kind="pure", amplitudes=vector / norm, norm=norm)


def mixed_state(density) -> FixedNState:
    """Build a validated mixed state, rescaling the density to unit trace."""
    rho = np.asarray(density, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] == 0:
        raise DimensionError(f"density must be a square matrix, got shape {rho.shape}")
    N = _check_photons(rho.shape[0] - 1)
    if not np.all(np.isfinite(rho)):
        raise NormalizationError("density entries must be finite")
    trace = complex(np.trace(rho))
    if abs(trace.imag) > STATE_TOL or trace.real <= 0.0:
        raise NormalizationError(f"density trace {trace!r} is not positive")
    state = FixedNState(N=N, kind="mixed", density=rho / trace.real, norm=trace.real)
    return state.check()


def fock_state(N: int, n: int) -> FixedNState:
    """The number state with n photons in mode 1 and N - n in mode 2."""
    N = _check_photons(N)
    if not 0 <= n <= N:
        raise RangeError(f"mode-1 occupation {n} outside 0..{N}")
    amplitudes = np.zeros(N + 1, dtype=complex)
    amplitudes[n] = 1.0
    return make_fixed_n_state(N, amplitudes)


def noon_state(N: int) -> FixedNState:
    """(|N,0> + |0,N>) / sqrt(2)."""
    N = _check_photons(N)
    if N < 1:
        raise RangeError("a NOON state needs at least one photon")
    amplitudes = np.zeros(N + 1, dtype=complex)
    amplitudes[0] = amplitudes[N] = 1.0
    return make_fixed_n_state(N, amplitudes)


def random_pure_state(N: int, rng: np.random.Generator) -> FixedNState:
    """Draw a Haar-random pure state."""
    N = _check_photons(N)
    raw = rng.standard_normal(N + 1) + 1j * rng.standard_normal(N + 1)
    return make_fixed_n_state(N, raw)


def random_mixed_state(
    N: int, rng: np.random.Generator, rank: Optional[int] = None
) -> FixedNState:
    """Draw a random density matrix of the given rank (full rank by default)."""
    N = _check_photons(N)
    rank = N + 1 if rank is None else rank
    if not 1 <= rank <= N + 1:
        raise RangeError(f"rank {rank} outside 1..{N + 1}")
    g = rng.standard_normal((N + 1, rank)) + 1j * rng.standard_normal((N + 1, rank))
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return mixed_state(rho)


@dataclass(frozen=True, order=True)
class CoherenceIndex:
    """Index of one Nth-order coherence.

    ``w`` is the power of the raised mode-2 operator and ``y`` the power of
    the lowered one.
    """

    w: int
    y: int

    @property
    def alpha(self) -> int:
        return self.w + self.y

    @property
    def beta(self) -> int:
        return self.y - self.w


def coherence_indices(N: int) -> list[CoherenceIndex]:
    """All (N+1)^2 indices, w outer and y inner."""
    return [CoherenceIndex(w, y) for w in range(N + 1) for y in range(N + 1)]


def group_indices(N: int, beta: int) -> list[CoherenceIndex]:
    """Indices sharing ``beta``, ordered by decreasing alpha."""
    if abs(beta) > N:
        raise RangeError(f"beta {beta} outside -{N}..{N}")
    out = []
    for kappa in range(N - abs(beta) + 1):
        alpha = 2 * (N - kappa) - abs(beta)
        out.append(CoherenceIndex((alpha - beta) // 2, (alpha + beta) // 2))
    return out


@dataclass(frozen=True, eq=False)
class CoherenceTensor:
    """All Nth-order coherences of a two-mode field.

    ``values[w, y]`` holds ``<a1^+^(N-w) a2^+^w a1^(N-y) a2^y>``. ``stderr``
    and ``diagnostics`` are metadata and take no part in equality.
    """

    N: int
    values: np.ndarray
    stderr: Optional[np.ndarray] = None
    diagnostics: tuple = field(default=())

    def __post_init__(self) -> None:
        shape = (self.N + 1, self.N + 1)
        if np.shape(self.values) != shape:
            raise DimensionError(
                f"order-{self.N} tensor needs shape {shape}, got {np.shape(self.values)}"
            )
        object.__setattr__(self, "values", _frozen(self.values))
        if self.stderr is not None:
            if np.shape(self.stderr) != shape:
                raise DimensionError("stderr must have the same shape as values")
            err = np.array(self.stderr, dtype=float, copy=True)
            err.setflags(write=False)
            object.__setattr__(self, "stderr", err)
        object.__setattr__(self, "diagnostics", tuple(self.diagnostics))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CoherenceTensor):
            return NotImplemented
        return self.N == other.N and np.array_equal(self.values, other.values)

    __hash__ = None

    def __getitem__(self, key: Union[CoherenceIndex, tuple[int, int]]) -> complex:
        if isinstance(key, CoherenceIndex):
            key = (key.w, key.y)
        return complex(self.values[key])

    def entries(self) -> dict[CoherenceIndex, complex]:
        return {idx: self[idx] for idx in coherence_indices(self.N)}

    def check_hermitian(self, tol: float = 1e-9) -> "CoherenceTensor":
        """Raise :class:`SymmetryError` unless ``values[w, y] == conj(values[y, w])``."""
        scale = max(1.0, float(np.max(np.abs(self.values))))
        gap = float(np.max(np.abs(self.values - self.values.conj().T)))
        if gap > tol * scale:
            raise SymmetryError(f"coherence tensor deviates from Hermitian by {gap:.3e}")
        return self


def _lower_mode1(dim_photons: int) -> np.ndarray:
    """a1 from the N-photon space to the (N-1)-photon space."""
    N = dim_photons
    op = np.zeros((N, N + 1))
    for n in range(1, N + 1):
        op[n - 1, n] = math.sqrt(n)
    return op


def _lower_mode2(dim_photons: int) -> np.ndarray:
    """a2 from the N-photon space to the (N-1)-photon space."""
    N = dim_photons
    op = np.zeros((N, N + 1))
    for n in range(N):
        op[n, n] = math.sqrt(N - n)
    return op


def _lowering_product(N: int, r: int, s: int) -> np.ndarray:
    """``a1^r a2^s`` as a matrix from N photons to N - r - s photons."""
    op = np.eye(N + 1)
    current = N
    for _ in range(s):
        op = _lower_mode2(current) @ op
        current -= 1
    for _ in range(r):
        op = _lower_mode1(current) @ op
        current -= 1
    return op


def normally_ordered_moment(state: FixedNState, p: int, q: int, r: int, s: int) -> complex:
    """``<a1^+^p a2^+^q a1^r a2^s>`` evaluated with explicit ladder matrices."""
    if min(p, q, r, s) < 0:
        raise RangeError("operator powers must be non-negative")
    if p + q != r + s or r + s > state.N:
        return 0j
    lower = _lowering_product(state.N, r, s)
    raise_adj = _lowering_product(state.N, p, q)
    if state.kind == "pure":
        return complex(np.vdot(raise_adj @ state.amplitudes, lower @ state.amplitudes))
    return complex(np.trace(lower @ state.density @ raise_adj.conj().T))


def coherence_tensor(state: FixedNState, order: Optional[int] = None) -> CoherenceTensor:
    """Tabulate every normally ordered moment of the given order.

    The order defaults to the photon number. Orders above it give zeros.
    """
    k = state.N if order is None else int(order)
    if k < 0:
        raise RangeError(f"order must be non-negative, got {order!r}")
    values = np.zeros((k + 1, k + 1), dtype=complex)
    if k <= state.N:
        ops = [_lowering_product(state.N, k - j, j) for j in range(k + 1)]
        if state.kind == "pure":
            images = [op @ state.amplitudes for op in ops]
            for w in range(k + 1):
                for y in range(k + 1):
                    values[w, y] = np.vdot(images[w], images[y])
        else:
            rho = state.density
            for w in range(k + 1):
                for y in range(k + 1):
                    values[w, y] = np.sum((ops[y] @ rho) * ops[w].conj())
    return CoherenceTensor(N=k, values=values)


def _check_unitary(U) -> np.ndarray:
    matrix = np.asarray(U, dtype=complex)
    if matrix.shape != (2, 2):
        raise UnitarityError(f"mode transformation must be 2x2, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise UnitarityError("mode transformation has non-finite entries")
    if np.max(np.abs(matrix @ matrix.conj().T - np.eye(2))) > UNITARY_TOL:
        raise UnitarityError("mode transformation is not unitary")
    return matrix


def _binomial_power(lead: complex, const: complex, power: int) -> np.ndarray:
    """Coefficients of ``(lead * x + const)^power`` in ascending powers of x."""
    return np.array(
        [math.comb(power, j) * lead**j * const ** (power - j) for j in range(power + 1)],
        dtype=complex,
    )


def fock_representation(N: int, U) -> np.ndarray:
    """Matrix of the mode map ``b = U a`` on the N-photon space.

    Column n expands ``(U11 a1^+ + U21 a2^+)^n (U12 a1^+ + U22 a2^+)^(N-n)|0>``.
    """
    matrix = _check_unitary(U)
    u11, u12, u21, u22 = (complex(v) for v in matrix.ravel())
    weights = fock_weights(N)
    rep = np.zeros((N + 1, N + 1), dtype=complex)
    for n in range(N + 1):
        poly = np.convolve(_binomial_power(u11, u21, n), _binomial_power(u12, u22, N - n))
        rep[:, n] = poly * weights / weights[n]
    return rep


def apply_two_mode_unitary(state: FixedNState, U) -> FixedNState:
    """Transform a state so that its moments in modes a equal the input's in modes b."""
    rep = fock_representation(state.N, U)
    if state.kind == "pure":
        return FixedNState(N=state.N, kind="pure", amplitudes=rep @ state.amplitudes)
    rho = rep @ state.density @ rep.conj().T
    return FixedNState(N=state.N, kind="mixed", density=(rho + rho.conj().T) / 2)


def photon_number_distribution(state: FixedNState) -> np.ndarray:
    """Probability of finding n photons in mode 1, for n = 0..N."""
    if state.kind == "pure":
        probs = np.abs(state.amplitudes) ** 2
    else:
        probs = np.real(np.diag(state.density)).copy()
    if np.min(probs) < 0.0:
        logger.debug("clipping negative probability %.3e", float(np.min(probs)))
    return np.clip(probs, 0.0, None)


def iter_moment_orders(N: int) -> Iterator[tuple[int, int, int, int]]:
    """Every (p, q, r, s) with p + q = r + s = N, in coherence-index order."""
    for idx in coherence_indices(N):
        yield N - idx.w, idx.w, N - idx.y, idx.y
