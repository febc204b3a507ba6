"""Optimal measurement plans and linear-inverse reconstruction of coherences.

A plan crosses a set of ``theta`` values with ``K`` equally spaced ``phi``
values. Summing the records of one ``theta`` against the ``K``-th roots of
unity keeps only the coherences whose ``beta`` is congruent to ``-m``
modulo ``K``. Each weight ``m`` then leaves one small real linear system
in ``theta``.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Literal, Optional, Sequence

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import PlanMismatchError, RangeError, SingularSystemError
from .fock import MAX_PHOTONS, CoherenceIndex, CoherenceTensor, group_indices
from .gadget import MeasurementSetting

logger = logging.getLogger(__name__)

MATCH_TOL = 1e-9
REFINE_TOL = 1e-12
ILL_CONDITIONED = 1e8

Parity = Literal["even", "odd"]


@dataclass(frozen=True)
class SettingsPlan:
    """The (N+1)^2 gadget settings needed for order N.

    ``phis`` keeps 2 pi as 2 pi so that ``phis[k - 1] = 2 pi k / K``.
    """

    N: int
    parity: Parity
    thetas: tuple[float, ...]
    phis: tuple[float, ...]
    extra: Optional[MeasurementSetting] = None

    @property
    def settings(self) -> list[MeasurementSetting]:
        grid = [MeasurementSetting(theta, phi) for theta in self.thetas for phi in self.phis]
        if self.extra is not None:
            grid.append(self.extra)
        return grid

    @property
    def weights(self) -> range:
        """Aggregation weights m with one group system each."""
        if self.parity == "even":
            return range(self.N // 2 + 1)
        return range((self.N + 1) // 2 + 1)

    @property
    def theta_fractions(self) -> list[Fraction]:
        """Each theta as an exact multiple of pi."""
        denom = 2 * (self.N + 2) if self.parity == "even" else 2 * (self.N + 1)
        return [Fraction(j, denom) for j in range(1, len(self.thetas) + 1)]

    @property
    def phi_fractions(self) -> list[Fraction]:
        """Each phi as an exact multiple of pi."""
        K = len(self.phis)
        return [Fraction(2 * k, K) for k in range(1, K + 1)]


def settings_plan(N: int) -> SettingsPlan:
    """Build the plan for order N, 1 <= N <= 16."""
    if isinstance(N, bool) or int(N) != N or not 1 <= N <= MAX_PHOTONS:
        raise RangeError(f"plan order must be an integer in 1..{MAX_PHOTONS}, got {N!r}")
    N = int(N)
    if N % 2 == 0:
        thetas = tuple(j * math.pi / (2 * (N + 2)) for j in range(1, N + 2))
        phis = tuple(2 * math.pi * k / (N + 1) for k in range(1, N + 2))
        return SettingsPlan(N=N, parity="even", thetas=thetas, phis=phis)
    thetas = tuple(j * math.pi / (2 * (N + 1)) for j in range(1, N + 1))
    phis = tuple(2 * math.pi * k / (N + 2) for k in range(1, N + 3))
    return SettingsPlan(
        N=N, parity="odd", thetas=thetas, phis=phis, extra=MeasurementSetting(0.0, 0.0)
    )


@dataclass(frozen=True)
class MeasurementRecord:
    """One measured (or simulated) value of ``<b1^+^N b1^N>``."""

    setting: MeasurementSetting
    value: float
    stderr: Optional[float] = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "theta": self.setting.theta,
            "phi": self.setting.phi,
            "value": self.value,
            "stderr": self.stderr,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "MeasurementRecord":
        stderr = data.get("stderr")
        return cls(
            setting=MeasurementSetting(float(data["theta"]), float(data["phi"])),
            value=float(data["value"]),
            stderr=None if stderr is None else float(stderr),
        )


@dataclass(frozen=True, eq=False)
class GroupSystem:
    """Square system ``matrix @ unknowns = rhs`` for one aggregation weight."""

    m: int
    betas: tuple[int, ...]
    unknowns: tuple[CoherenceIndex, ...]
    matrix: np.ndarray
    rhs: np.ndarray
    condition: float

    @property
    def exponents(self) -> tuple[int, ...]:
        """sin-power alpha of each column."""
        return tuple(idx.alpha for idx in self.unknowns)

    def scaled_matrix(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """The equilibrated matrix with its row and column scales."""
        return _equilibrate(self.matrix)


def _equilibrate(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Divide rows, then columns, by their largest magnitude."""
    rows = np.max(np.abs(matrix), axis=1)
    rows = np.where(rows > 0.0, rows, 1.0)
    scaled = matrix / rows[:, None]
    cols = np.max(np.abs(scaled), axis=0)
    cols = np.where(cols > 0.0, cols, 1.0)
    return scaled / cols, rows, cols


@dataclass(frozen=True)
class GroupDiagnostics:
    m: int
    betas: tuple[int, ...]
    condition: float
    residual: float


def surviving_betas(plan: SettingsPlan, m: int) -> tuple[int, ...]:
    """beta values congruent to -m modulo the number of phis, within -N..N."""
    K = len(plan.phis)
    return tuple(b for b in dict.fromkeys((-m, K - m)) if abs(b) <= plan.N)


def _slot_of(
    record: MeasurementRecord, plan: SettingsPlan, settings: list[MeasurementSetting]
) -> Optional[int]:
    # phi has no effect at theta = 0, so the extra slot matches on theta alone
    if plan.extra is not None and abs(record.setting.theta - plan.extra.theta) <= MATCH_TOL:
        return len(settings) - 1
    for pos, setting in enumerate(settings):
        if record.setting.close_to(setting, MATCH_TOL):
            return pos
    return None


def _record_grid(
    records: Sequence[MeasurementRecord], plan: SettingsPlan
) -> tuple[list[list[MeasurementRecord]], Optional[MeasurementRecord]]:
    """Place each record on the plan grid, rejecting gaps, repeats and strays."""
    settings = plan.settings
    slots: list[Optional[MeasurementRecord]] = [None] * len(settings)
    for record in records:
        pos = _slot_of(record, plan, settings)
        if pos is None:
            raise PlanMismatchError(
                f"record at ({record.setting.theta:.12g}, {record.setting.phi:.12g}) "
                f"is not part of the order-{plan.N} plan"
            )
        if slots[pos] is not None:
            setting = settings[pos]
            raise PlanMismatchError(
                f"duplicate record for setting ({setting.theta:.12g}, {setting.phi:.12g})"
            )
        slots[pos] = record
    missing = [s for s, r in zip(settings, slots) if r is None]
    if missing:
        first = missing[0]
        raise PlanMismatchError(
            f"{len(missing)} plan setting(s) have no record, "
            f"first ({first.theta:.12g}, {first.phi:.12g})"
        )
    K = len(plan.phis)
    grid = [slots[j * K : (j + 1) * K] for j in range(len(plan.thetas))]
    extra = slots[-1] if plan.extra is not None else None
    return grid, extra


def _phase_weights(plan: SettingsPlan, m: int) -> np.ndarray:
    return np.exp(1j * m * np.asarray(plan.phis)) / len(plan.phis)


def aggregate(
    records: Sequence[MeasurementRecord], plan: SettingsPlan, m: int
) -> dict[float, complex]:
    """Roots-of-unity sum of the records at each theta."""
    grid, _ = _record_grid(records, plan)
    return _aggregate_grid(grid, plan, m)


def _aggregate_grid(
    grid: list[list[MeasurementRecord]], plan: SettingsPlan, m: int
) -> dict[float, complex]:
    weights = _phase_weights(plan, m)
    return {
        theta: complex(np.dot(weights, [r.value for r in row]))
        for theta, row in zip(plan.thetas, grid)
    }


def _coefficient(N: int, idx: CoherenceIndex, theta: float) -> float:
    alpha = idx.alpha
    return (
        math.comb(N, idx.w)
        * math.comb(N, idx.y)
        * math.cos(theta) ** (2 * N - alpha)
        * math.sin(theta) ** alpha
    )


def build_group_system(
    plan: SettingsPlan,
    m: int,
    aggregated: dict[float, complex],
    extra: Optional[MeasurementRecord] = None,
) -> GroupSystem:
    """Assemble the system for weight m.

    For odd N the m = 0 system also takes the row of the (0, 0) record,
    which measures the mode-1 population alone.
    """
    if m not in plan.weights:
        raise RangeError(f"weight {m} outside 0..{plan.weights[-1]} for order {plan.N}")
    N = plan.N
    betas = surviving_betas(plan, m)
    unknowns = tuple(idx for beta in betas for idx in group_indices(N, beta))
    rows = [[_coefficient(N, idx, theta) for idx in unknowns] for theta in plan.thetas]
    try:
        rhs = [aggregated[theta] for theta in plan.thetas]
    except KeyError as exc:
        raise PlanMismatchError(f"no aggregated value for theta {exc.args[0]!r}") from None
    if plan.parity == "odd" and m == 0:
        if extra is None:
            raise PlanMismatchError(f"order-{N} reconstruction needs the (0, 0) record")
        rows.append([1.0 if idx.alpha == 0 else 0.0 for idx in unknowns])
        rhs.append(extra.value)
    matrix = np.array(rows, dtype=float)
    scaled, _, _ = _equilibrate(matrix)
    condition = float(np.linalg.cond(scaled))
    if condition > ILL_CONDITIONED:
        logger.warning("group m=%d of order %d is ill-conditioned (cond %.3e)", m, N, condition)
    return GroupSystem(
        m=m,
        betas=betas,
        unknowns=unknowns,
        matrix=matrix,
        rhs=np.array(rhs, dtype=complex),
        condition=condition,
    )


def _solve_columns(system: GroupSystem, rhs: np.ndarray) -> np.ndarray:
    """Solve for several complex right-hand sides at once."""
    if not math.isfinite(system.condition) or system.condition > 1.0 / np.finfo(float).eps:
        raise SingularSystemError(
            f"group m={system.m} is singular to working precision (cond {system.condition:.3e})"
        )
    scaled, rows, cols = system.scaled_matrix()
    factors = lu_factor(scaled)
    stacked = np.hstack([rhs.real, rhs.imag]) / rows[:, None]
    solution = lu_solve(factors, stacked)
    residual = stacked - scaled @ solution
    if np.linalg.norm(residual) > REFINE_TOL * np.linalg.norm(stacked):
        solution = solution + lu_solve(factors, residual)
    half = rhs.shape[1]
    return (solution[:, :half] + 1j * solution[:, half:]) / cols[:, None]


def solve_group(system: GroupSystem) -> tuple[np.ndarray, float]:
    """Solve one group system, returning the coherences and the relative residual."""
    solution = _solve_columns(system, system.rhs[:, None])[:, 0]
    gap = float(np.linalg.norm(system.matrix @ solution - system.rhs))
    scale = float(np.linalg.norm(system.rhs))
    return solution, gap / scale if scale > 0.0 else gap


def _unit_rhs(plan: SettingsPlan, system: GroupSystem) -> np.ndarray:
    """Right-hand sides produced by each record alone, in plan order."""
    J, K = len(plan.thetas), len(plan.phis)
    total = J * K + (1 if plan.extra is not None else 0)
    out = np.zeros((len(system.rhs), total), dtype=complex)
    weights = _phase_weights(plan, system.m)
    for j in range(J):
        out[j, j * K : (j + 1) * K] = weights
    if len(system.rhs) > J:
        out[J, J * K] = 1.0
    return out


def reconstruct(records: Sequence[MeasurementRecord], N: int) -> CoherenceTensor:
    """Recover every order-N coherence from records covering ``settings_plan(N)``.

    When every record has a standard error, the errors are propagated
    through the (linear) reconstruction and attached as ``stderr``.
    """
    plan = settings_plan(N)
    grid, extra = _record_grid(records, plan)
    values = np.zeros((N + 1, N + 1), dtype=complex)
    filled = np.zeros((N + 1, N + 1), dtype=bool)
    ordered = [r for row in grid for r in row] + ([extra] if extra is not None else [])
    with_errors = all(r.stderr is not None for r in ordered)
    sigma = np.array([r.stderr for r in ordered], dtype=float) if with_errors else None
    variance = np.zeros((N + 1, N + 1))
    diagnostics = []

    for m in plan.weights:
        system = build_group_system(plan, m, _aggregate_grid(grid, plan, m), extra)
        solution, residual = solve_group(system)
        diagnostics.append(GroupDiagnostics(m, system.betas, system.condition, residual))
        sensitivity = _solve_columns(system, _unit_rhs(plan, system)) if with_errors else None
        for pos, idx in enumerate(system.unknowns):
            values[idx.w, idx.y] = solution[pos]
            filled[idx.w, idx.y] = True
            if sensitivity is not None:
                variance[idx.w, idx.y] = float(np.sum(np.abs(sensitivity[pos]) ** 2 * sigma**2))

    for w in range(N + 1):
        for y in range(N + 1):
            if not filled[w, y]:
                values[w, y] = np.conj(values[y, w])
                variance[w, y] = variance[y, w]
    values[np.diag_indices(N + 1)] = values.diagonal().real
    return CoherenceTensor(
        N=N,
        values=values,
        stderr=np.sqrt(variance) if with_errors else None,
        diagnostics=tuple(diagnostics),
    )


def condition_report(plan: SettingsPlan) -> dict[int, float]:
    """Condition number of every group matrix of a plan."""
    zeros = {theta: 0j for theta in plan.thetas}
    extra = MeasurementRecord(plan.extra, 0.0) if plan.extra is not None else None
    return {m: build_group_system(plan, m, zeros, extra).condition for m in plan.weights}
