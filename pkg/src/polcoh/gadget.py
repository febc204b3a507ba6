"""The SU(2) polarization gadget: settings, Euler angles and wave plates."""

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .errors import RangeError

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi
QUARTER_PI = 0.25 * math.pi
DEGENERATE_TOL = 1e-12
TABLE_TOL = 5e-3


def wrap_angle(value: float, period: float) -> float:
    """Reduce an angle into ``[0, period)``."""
    reduced = value % period
    if reduced >= period:
        reduced = 0.0
    return reduced


def periodic_distance(a: float, b: float, period: float) -> float:
    diff = wrap_angle(a - b, period)
    return min(diff, period - diff)


@dataclass(frozen=True)
class MeasurementSetting:
    """Abstract gadget setting (theta, phi).

    Reduced on construction to theta in [0, pi/2] and phi in [0, 2 pi).
    The reduction changes the gadget unitary by a global sign at most.
    """

    theta: float
    phi: float

    def __post_init__(self) -> None:
        theta, phi = float(self.theta), float(self.phi)
        if not (math.isfinite(theta) and math.isfinite(phi)):
            raise RangeError(f"setting angles must be finite, got ({self.theta}, {self.phi})")
        theta = wrap_angle(theta, math.pi)
        if theta > HALF_PI:
            # U(pi - t, p) = -U(t, p + pi)
            theta = math.pi - theta
            phi += math.pi
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", wrap_angle(phi, TWO_PI))

    @classmethod
    def from_degrees(cls, theta: float, phi: float) -> "MeasurementSetting":
        return cls(math.radians(theta), math.radians(phi))

    def close_to(self, other: "MeasurementSetting", tol: float = 1e-9) -> bool:
        return (
            abs(self.theta - other.theta) <= tol
            and periodic_distance(self.phi, other.phi, TWO_PI) <= tol
        )


@dataclass(frozen=True)
class AxisTriple:
    a: float
    b: float
    c: float


@dataclass(frozen=True)
class EulerAngles:
    xi: float
    eta: float
    zeta: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.xi, self.eta, self.zeta)


@dataclass(frozen=True)
class PlateAngles:
    """Orientations of QWP 1, QWP 2 and the HWP, in radians."""

    qp1: float
    qp2: float
    hp: float

    def normalized(self) -> "PlateAngles":
        """Quarter-wave plates modulo pi, half-wave plate modulo pi/2."""
        return PlateAngles(
            wrap_angle(self.qp1, math.pi),
            wrap_angle(self.qp2, math.pi),
            wrap_angle(self.hp, HALF_PI),
        )

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.qp1, self.qp2, self.hp)


def gadget_unitary(setting: MeasurementSetting) -> np.ndarray:
    """The mode transformation U(theta, phi) realized by the gadget."""
    c, s = math.cos(setting.theta), math.sin(setting.theta)
    phase = complex(math.cos(setting.phi), math.sin(setting.phi))
    return np.array([[c, phase * s], [-phase.conjugate() * s, c]], dtype=complex)


def axis_triple(setting: MeasurementSetting) -> AxisTriple:
    s = math.sin(setting.theta)
    return AxisTriple(math.cos(setting.phi) * s, math.sin(setting.phi) * s, math.cos(setting.theta))


def euler_from_setting(setting: MeasurementSetting) -> EulerAngles:
    """Euler angles with exp(-i xi s2/2) exp(i eta s3/2) exp(-i zeta s2/2) = U.

    Principal arguments are used so that the product reproduces +U.
    """
    axis = axis_triple(setting)
    if abs(axis.b) < DEGENERATE_TOL:
        # phi = 0 gives (0, 0, -2 theta), phi = pi gives (0, 0, 2 theta)
        return EulerAngles(0.0, 0.0, -2.0 * math.atan2(axis.a, axis.c))
    half_sign = math.copysign(HALF_PI, axis.b)
    if math.hypot(axis.a, axis.c) < DEGENERATE_TOL:
        # (0, 0, 2 phi) is not a solution here: U is not real
        return EulerAngles(half_sign, math.pi, -half_sign)
    eta = 2.0 * math.acos(min(1.0, math.hypot(axis.a, axis.c)))
    mean = math.atan2(-axis.a, axis.c)
    return EulerAngles(mean + half_sign, eta, mean - half_sign)


def _rotation_y(angle: float) -> np.ndarray:
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def euler_unitary(euler: EulerAngles) -> np.ndarray:
    """Rebuild the 2x2 unitary from Euler angles."""
    middle = np.diag([np.exp(0.5j * euler.eta), np.exp(-0.5j * euler.eta)])
    return _rotation_y(euler.xi) @ middle @ _rotation_y(euler.zeta)


def plate_angles_from_euler(euler: EulerAngles) -> PlateAngles:
    raw = PlateAngles(
        euler.xi / 2 + QUARTER_PI,
        (euler.xi + euler.eta) / 2 + QUARTER_PI,
        (euler.xi + euler.eta - euler.zeta) / 4 - QUARTER_PI,
    )
    return raw.normalized()


def plate_angles(setting: MeasurementSetting) -> PlateAngles:
    return plate_angles_from_euler(euler_from_setting(setting))


def _rotation(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _retarder(angle: float, retardance: float) -> np.ndarray:
    core = np.diag([np.exp(0.5j * retardance), np.exp(-0.5j * retardance)])
    return _rotation(angle) @ core @ _rotation(-angle)


def quarter_wave_plate(angle: float) -> np.ndarray:
    return _retarder(angle, HALF_PI)


def half_wave_plate(angle: float) -> np.ndarray:
    return _retarder(angle, math.pi)


def compose_plate_unitary(plates: PlateAngles) -> np.ndarray:
    """Jones matrix of the plate sequence.

    Calibrated against the nine-row plate table: with fast-axis retardance
    +pi/2 (+pi) and the product QWP(qp1) QWP(qp2) HWP(hp), the result equals
    gadget_unitary up to sign. The opposite retardance sign gives the
    complex conjugate.
    """
    return quarter_wave_plate(plates.qp1) @ quarter_wave_plate(plates.qp2) @ half_wave_plate(plates.hp)


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> bool:
    """True when ``a == exp(i chi) b`` for some global phase chi."""
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    pivot = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if abs(b[pivot]) == 0.0:
        return bool(np.max(np.abs(a)) <= tol)
    ratio = a[pivot] / b[pivot]
    if abs(ratio) == 0.0:
        return False
    phase = ratio / abs(ratio)
    return bool(np.max(np.abs(a - phase * b)) <= tol)


# Golden data for second-order measurements: ((theta, phi), euler, plates).
PRINTED_TABLE: tuple[tuple[tuple[float, float], tuple[float, ...], tuple[float, ...]], ...] = (
    ((math.pi / 8, 2 * math.pi / 3), (1.775, 0.676, 4.197), (1.673, 2.011, 0.169)),
    ((math.pi / 4, 2 * math.pi / 3), (2.034, 1.318, 5.176), (1.802, 2.461, 0.329)),
    ((3 * math.pi / 8, 2 * math.pi / 3), (-3.833, 1.855, -0.692), (2.010, 2.938, 0.464)),
    ((math.pi / 8, 4 * math.pi / 3), (4.917, 0.676, 1.775), (0.102, 0.440, 1.740)),
    ((math.pi / 4, 4 * math.pi / 3), (-1.107, 1.318, -4.249), (0.232, 0.891, 1.900)),
    ((3 * math.pi / 8, 4 * math.pi / 3), (5.591, 1.855, 2.450), (0.439, 1.367, 2.034)),
    (
        (math.pi / 8, TWO_PI),
        (0.0, 0.0, -math.pi / 4),
        (math.pi / 4, math.pi / 4, 13 * math.pi / 16),
    ),
    (
        (math.pi / 4, TWO_PI),
        (0.0, 0.0, -math.pi / 2),
        (math.pi / 4, math.pi / 4, 7 * math.pi / 8),
    ),
    (
        (3 * math.pi / 8, TWO_PI),
        (0.0, 0.0, -3 * math.pi / 4),
        (math.pi / 4, math.pi / 4, 15 * math.pi / 16),
    ),
)

EULER_NAMES = ("xi", "eta", "zeta")
PLATE_PERIODS = (math.pi, math.pi, HALF_PI)


def euler_close(a: Iterable[float], b: Iterable[float], tol: float = TABLE_TOL) -> list[bool]:
    """Per-angle comparison modulo 2 pi."""
    return [periodic_distance(x, y, TWO_PI) <= tol for x, y in zip(a, b)]


def plates_close(a: Iterable[float], b: Iterable[float], tol: float = TABLE_TOL) -> list[bool]:
    """Per-plate comparison modulo the plate periods."""
    return [periodic_distance(x, y, p) <= tol for x, y, p in zip(a, b, PLATE_PERIODS)]


@dataclass(frozen=True)
class TableRow:
    """Computed angles for one setting, with the printed values when known."""

    setting: MeasurementSetting
    euler: EulerAngles
    plates: PlateAngles
    printed_euler: Optional[tuple[float, ...]] = None
    printed_plates: Optional[tuple[float, ...]] = None
    euler_match: Optional[bool] = None
    plates_match: Optional[bool] = None
    note: Optional[str] = None


def _compare_row(
    setting: MeasurementSetting,
    printed_euler: tuple[float, ...],
    printed_plates: tuple[float, ...],
) -> TableRow:
    euler = euler_from_setting(setting)
    plates = plate_angles_from_euler(euler)
    euler_flags = euler_close(euler.as_tuple(), printed_euler)
    plates_match = all(plates_close(plates.as_tuple(), printed_plates))
    note = None
    if not all(euler_flags):
        parts = []
        for name, ok, ours, theirs in zip(EULER_NAMES, euler_flags, euler.as_tuple(), printed_euler):
            if not ok:
                parts.append(f"printed {name} = {theirs:.3f}, computed {wrap_angle(ours, TWO_PI):.3f}")
        # Put the computed angles where the printed ones disagree and see
        # whether the printed plates follow.
        patched = EulerAngles(*(o if not ok else t for ok, o, t in zip(euler_flags, euler.as_tuple(), printed_euler)))
        if all(plates_close(plate_angles_from_euler(patched).as_tuple(), printed_plates)):
            parts.append("computed angles reproduce the printed plate angles")
        note = "; ".join(parts)
        logger.info("table row (%.4f, %.4f): %s", setting.theta, setting.phi, note)
    return TableRow(
        setting=setting,
        euler=euler,
        plates=plates,
        printed_euler=tuple(printed_euler),
        printed_plates=tuple(printed_plates),
        euler_match=all(euler_flags),
        plates_match=plates_match,
        note=note,
    )


def table1() -> list[TableRow]:
    """Recompute the nine second-order rows, phi outer and theta inner."""
    return [
        _compare_row(MeasurementSetting(theta, phi), euler, plates)
        for (theta, phi), euler, plates in PRINTED_TABLE
    ]
