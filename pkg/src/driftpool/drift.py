"""Three-state drift detectors: Stable / Warning / Drift.

Detectors consume the monitored classifier's per-instance error (True when
the prediction was wrong) together with a strictly increasing instance
index, and emit a DriftSignal.  Error-rate detectors reset their statistics
after signalling Drift; the oracle ignores errors entirely and signals from
configured true drift positions.
"""

import math
from enum import IntEnum

from .base import ConfigError, StreamEstimator


class DriftSignal(IntEnum):
    STABLE = 0
    WARNING = 1
    DRIFT = 2


class DriftDetector(StreamEstimator):
    """Shared input bookkeeping: enforce a strictly increasing index."""

    def __init__(self):
        self._last_index = -1

    def input(self, error, instance_index):
        if instance_index <= self._last_index:
            raise ValueError(
                f"instance_index must be strictly increasing "
                f"(got {instance_index} after {self._last_index})"
            )
        self._last_index = instance_index
        return self._input(bool(error))

    def _input(self, error):
        raise NotImplementedError

    def reset(self):
        """Clear statistics, keep parameters; idempotent."""
        self._last_index = -1
        self._reset()
        return self

    def _reset(self):
        raise NotImplementedError


class OracleDetector(DriftDetector):
    """Perfect detector fed the true drift positions.

    Emits Warning throughout the ``lead`` instances starting at each true
    drift position and Drift exactly ``lead`` instances after the position,
    then returns to Stable.  Output never depends on the error input.
    """

    def __init__(self, positions, lead=60):
        super().__init__()
        self.positions = sorted(int(p) for p in positions)
        self.lead = int(lead)
        if self.lead < 1:
            raise ConfigError(f"lead must be >= 1, got {lead!r}")
        if any(p < 0 for p in self.positions):
            raise ConfigError("drift positions must be non-negative")
        self._next = 0

    def _input(self, error):
        index = self._last_index
        while self._next < len(self.positions):
            position = self.positions[self._next]
            if index < position:
                return DriftSignal.STABLE
            if index < position + self.lead:
                return DriftSignal.WARNING
            if index == position + self.lead:
                self._next += 1
                return DriftSignal.DRIFT
            self._next += 1  # skipped past; realign to a later position
        return DriftSignal.STABLE

    def _reset(self):
        self._next = 0


class HddmADetector(DriftDetector):
    """One-sided error-rate increase test on running averages.

    Tracks the cumulative error average together with the "best" (lowest,
    in confidence-corrected terms) prefix average seen so far, and signals
    when the cumulative average exceeds that prefix average by more than a
    Hoeffding-style bound on the difference of the two dependent means:

        eps(alpha) = sqrt(((n - n_min) / (n_min * n)) / 2 * ln(2 / alpha))

    Warning uses ``warning_confidence``, Drift uses ``drift_confidence``
    (tighter), and all statistics reset once Drift is signalled.
    """

    def __init__(self, drift_confidence=0.001, warning_confidence=0.005):
        super().__init__()
        if not 0.0 < drift_confidence < 1.0 or not 0.0 < warning_confidence < 1.0:
            raise ConfigError("confidences must be in (0, 1)")
        if warning_confidence < drift_confidence:
            raise ConfigError(
                "warning_confidence must be looser (>=) than drift_confidence"
            )
        self.drift_confidence = drift_confidence
        self.warning_confidence = warning_confidence
        self._reset()

    def _reset(self):
        self._total_n = 0.0
        self._total_c = 0.0
        self._n_min = 0.0
        self._c_min = 0.0

    @staticmethod
    def _mean_increased(c_min, n_min, total_c, total_n, confidence):
        if n_min >= total_n:
            return False
        m = (total_n - n_min) / (n_min * total_n)
        bound = math.sqrt(m / 2.0 * math.log(2.0 / confidence))
        return total_c / total_n - c_min / n_min >= bound

    def _input(self, error):
        self._total_n += 1.0
        self._total_c += 1.0 if error else 0.0
        total_n, total_c = self._total_n, self._total_c
        if self._n_min == 0.0:
            self._n_min = total_n
            self._c_min = total_c
        else:
            # move the cut point when the current prefix looks at least as good
            bound_min = math.sqrt(
                1.0 / (2.0 * self._n_min) * math.log(1.0 / self.drift_confidence)
            )
            bound_cur = math.sqrt(
                1.0 / (2.0 * total_n) * math.log(1.0 / self.drift_confidence)
            )
            if self._c_min / self._n_min + bound_min >= total_c / total_n + bound_cur:
                self._n_min = total_n
                self._c_min = total_c
        if self._mean_increased(
            self._c_min, self._n_min, total_c, total_n, self.drift_confidence
        ):
            self._reset()
            return DriftSignal.DRIFT
        if self._mean_increased(
            self._c_min, self._n_min, total_c, total_n, self.warning_confidence
        ):
            return DriftSignal.WARNING
        return DriftSignal.STABLE


class RddmDetector(DriftDetector):
    """Mean/stdev error-rate thresholds recomputed over a bounded window.

    Keeps the classic warning/drift test on p + s against the best p_min +
    level * s_min, but stores recent errors so the statistics can be
    rebuilt from the warning point after a drift, forces a drift when a
    warning persists for ``warn_limit`` instances and silently recomputes
    the statistics when a concept exceeds ``max_concept_size``.
    """

    def __init__(self, min_instances=129, warning_level=1.773, drift_level=2.258,
                 max_concept_size=40000, min_stable_size=7000, warn_limit=1400):
        super().__init__()
        if warning_level >= drift_level:
            raise ConfigError("warning_level must be below drift_level")
        self.min_instances = min_instances
        self.warning_level = warning_level
        self.drift_level = drift_level
        self.max_concept_size = max_concept_size
        self.min_stable_size = min_stable_size
        self.warn_limit = warn_limit
        self._reset()

    def _reset(self):
        self._stored = [0] * self.min_stable_size
        self._first = 0
        self._count = 0
        self._clear_stats()
        self._pending_rebuild = False
        self._warn_start_inst = -1
        self._warn_start_pos = -1
        self._inst_num = 0

    def _clear_stats(self):
        self._m_n = 0.0
        self._m_p = 0.0
        self._m_s = 0.0
        self._p_min = math.inf
        self._s_min = math.inf
        self._ps_min = math.inf

    def _push(self, error):
        pos = (self._first + self._count) % self.min_stable_size
        if self._count < self.min_stable_size:
            self._count += 1
        else:
            self._first = (self._first + 1) % self.min_stable_size
        self._stored[pos] = error
        return pos

    def _accumulate(self, error):
        self._m_n += 1.0
        self._m_p += (error - self._m_p) / self._m_n
        self._m_s = math.sqrt(self._m_p * (1.0 - self._m_p) / self._m_n)
        if self._m_n >= self.min_instances and self._m_p + self._m_s < self._ps_min:
            self._p_min = self._m_p
            self._s_min = self._m_s
            self._ps_min = self._m_p + self._m_s

    def _rebuild_from(self, start_pos):
        self._clear_stats()
        if start_pos < 0:
            self._first = (self._first + self._count) % self.min_stable_size
            self._count = 0
            return
        # keep only the instances from the warning point onwards
        dropped = (start_pos - self._first) % self.min_stable_size
        self._first = start_pos
        self._count -= dropped
        idx = self._first
        for _ in range(self._count):
            self._accumulate(float(self._stored[idx]))
            idx = (idx + 1) % self.min_stable_size

    def _input(self, error):
        err = 1 if error else 0
        if self._pending_rebuild:
            self._rebuild_from(self._warn_start_pos)
            self._pending_rebuild = False
            self._warn_start_inst = -1
            self._warn_start_pos = -1
        pos = self._push(err)
        self._accumulate(float(err))
        self._inst_num += 1
        if self._m_n <= self.min_instances:
            return DriftSignal.STABLE
        signal = DriftSignal.STABLE
        level = self._m_p + self._m_s
        if level > self._p_min + self.drift_level * self._s_min:
            self._pending_rebuild = True
            if self._warn_start_pos < 0:
                self._warn_start_pos = pos  # drift with no prior warning
            return DriftSignal.DRIFT
        if level > self._p_min + self.warning_level * self._s_min:
            if (
                self._warn_start_inst >= 0
                and self._warn_start_inst + self.warn_limit <= self._inst_num
            ):
                self._pending_rebuild = True
                return DriftSignal.DRIFT
            if self._warn_start_inst < 0:
                self._warn_start_inst = self._inst_num
                self._warn_start_pos = pos
            signal = DriftSignal.WARNING
        else:
            self._warn_start_inst = -1
            self._warn_start_pos = -1
        if self._m_n > self.max_concept_size and signal is DriftSignal.STABLE:
            # concept too large: rebuild statistics silently, no drift emitted
            self._rebuild_from(-1)
        return signal


DETECTORS = {
    "hddm_a": HddmADetector,
    "rddm": RddmDetector,
    "oracle": OracleDetector,
}


def make_detector(kind, **params):
    """Build a detector from a registry name (or pass an instance through)."""
    if isinstance(kind, DriftDetector):
        return kind
    try:
        cls = DETECTORS[kind]
    except KeyError:
        raise ConfigError(
            f"unknown detector {kind!r}; expected one of {sorted(DETECTORS)}"
        ) from None
    return cls(**params)
