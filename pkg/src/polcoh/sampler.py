"""Monte-Carlo photon counting behind the gadget."""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .errors import RangeError
from .expansion import predicted_moment
from .fock import FixedNState, apply_two_mode_unitary, coherence_tensor, photon_number_distribution
from .gadget import MeasurementSetting, gadget_unitary
from .recipe import MeasurementRecord, SettingsPlan

logger = logging.getLogger(__name__)

RNG_ALGORITHM = "Philox"
CHUNK = 1 << 20


@dataclass(frozen=True)
class CountHistogram:
    """How often n photons arrived in port b1 for one setting."""

    setting: MeasurementSetting
    shots: int
    counts: Mapping[int, int]
    photons: int

    def __post_init__(self) -> None:
        counts = {int(n): int(c) for n, c in self.counts.items() if c}
        if sum(counts.values()) != self.shots:
            raise RangeError(f"counts sum to {sum(counts.values())}, expected {self.shots} shots")
        if any(not 0 <= n <= self.photons for n in counts):
            raise RangeError(f"photon counts outside 0..{self.photons}")
        object.__setattr__(self, "counts", MappingProxyType(dict(sorted(counts.items()))))


def setting_rng(seed: int, index: int) -> np.random.Generator:
    """Independent substream for one setting, stable under any execution order."""
    if seed < 0 or index < 0:
        raise RangeError(f"seed and stream index must be non-negative, got {seed}, {index}")
    sequence = np.random.SeedSequence(seed, spawn_key=(index,))
    return np.random.Generator(np.random.Philox(sequence))


def simulate_counts(
    state: FixedNState, setting: MeasurementSetting, shots: int, seed: int, stream: int = 0
) -> CountHistogram:
    """Sample photon numbers in port b1 by inverse CDF."""
    if shots < 1:
        raise RangeError(f"shots must be at least 1, got {shots}")
    probs = photon_number_distribution(apply_two_mode_unitary(state, gadget_unitary(setting)))
    cdf = np.cumsum(probs / probs.sum())
    cdf[-1] = 1.0
    rng = setting_rng(seed, stream)
    tally = np.zeros(state.N + 1, dtype=np.int64)
    remaining = shots
    while remaining:
        size = min(remaining, CHUNK)
        outcomes = np.searchsorted(cdf, rng.random(size), side="right")
        tally += np.bincount(outcomes, minlength=state.N + 1)
        remaining -= size
    return CountHistogram(
        setting=setting,
        shots=shots,
        counts={n: int(c) for n, c in enumerate(tally)},
        photons=state.N,
    )


def estimate_moment(hist: CountHistogram, order: int) -> tuple[float, float]:
    """Mean of the per-shot statistic n(n-1)...(n-order+1) and its standard error."""
    if order < 0:
        raise RangeError(f"order must be non-negative, got {order}")
    ns = np.array(list(hist.counts.keys()), dtype=float)
    weights = np.array(list(hist.counts.values()), dtype=float)
    stats = np.array([math.perm(int(n), order) for n in ns], dtype=float)
    mean = float(np.dot(weights, stats) / hist.shots)
    if hist.shots < 2:
        return mean, 0.0
    variance = float(np.dot(weights, (stats - mean) ** 2) / (hist.shots - 1))
    return mean, math.sqrt(variance / hist.shots)


def _simulate_record(
    state: FixedNState, setting: MeasurementSetting, order: int, shots: int, seed: int, index: int
) -> MeasurementRecord:
    hist = simulate_counts(state, setting, shots, seed, stream=index)
    value, stderr = estimate_moment(hist, order)
    return MeasurementRecord(setting=setting, value=value, stderr=stderr)


def run_campaign(
    state: FixedNState,
    plan: SettingsPlan,
    shots_per_setting: int,
    seed: int,
    workers: int = 1,
) -> list[MeasurementRecord]:
    """Simulate one record per plan setting, in plan order.

    Setting ``i`` always draws from substream ``i``, so the output does not
    depend on ``workers``.
    """
    settings = plan.settings
    logger.debug(
        "campaign: %d settings, %d shots each, seed %d, %d worker(s)",
        len(settings), shots_per_setting, seed, workers,
    )

    def job(index: int) -> MeasurementRecord:
        return _simulate_record(state, settings[index], plan.N, shots_per_setting, seed, index)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(job, range(len(settings))))
    return [job(i) for i in range(len(settings))]


def exact_records(state: FixedNState, plan: SettingsPlan) -> list[MeasurementRecord]:
    """Infinite-shot records: the predicted moment at every plan setting."""
    tensor = coherence_tensor(state, plan.N)
    return [
        MeasurementRecord(setting=s, value=predicted_moment(tensor, s)) for s in plan.settings
    ]
