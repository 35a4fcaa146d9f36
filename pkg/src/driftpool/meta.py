"""Meta-learning frameworks that manage classifiers across concept drifts.

Three frameworks share one surface (``process(instance)`` returning the
emitted prediction and the detector signal, plus estimator-style
``predict``/``partial_fit``):

* ``EcpfClassifier`` trains a new classifier and a copy of a reused one in
  tandem, emits whichever leads on accuracy since the last drift, and on
  drift stores the leader, picks the stored classifier most accurate on the
  warning buffer to reuse (as a copy, so the stored original is never
  mutated), merges conceptually equivalent classifiers and fades stale ones.
* ``CpfClassifier`` keeps a single current classifier drawn from the
  collection, deciding reuse from an even/odd split of a minimum-size
  buffer; reused classifiers are mutated in place.
* ``DriftResetClassifier`` discards its classifier on every drift.

Warning-phase instances are buffered and never trained on; the buffer
empties when the detector returns to stable or after a drift is handled.
"""

from dataclasses import dataclass, field

from .base import ConfigError, StreamEstimator, check_fraction, check_positive_int
from .drift import DriftSignal, make_detector
from .learners import make_learner

_STABLE = DriftSignal.STABLE
_WARNING = DriftSignal.WARNING
_DRIFT = DriftSignal.DRIFT


class ClassifierRecord:
    """A stored classifier plus identity, fade points and usage counters."""

    __slots__ = (
        "id", "learner", "fade_points", "lifetime_correct", "lifetime_seen",
        "created_at_drift", "reuse_count", "drifts_survived", "inherited_points",
    )

    def __init__(self, rec_id, learner, fade_points, lifetime_correct=0,
                 lifetime_seen=0, created_at_drift=0):
        self.id = rec_id
        self.learner = learner
        self.fade_points = fade_points
        self.lifetime_correct = lifetime_correct
        self.lifetime_seen = lifetime_seen
        self.created_at_drift = created_at_drift
        self.reuse_count = 0
        self.drifts_survived = 0
        self.inherited_points = 0

    @property
    def lifetime_accuracy(self):
        if self.lifetime_seen <= 0:
            return 0.0
        return self.lifetime_correct / self.lifetime_seen

    def __repr__(self):
        return (
            f"ClassifierRecord(id={self.id}, points={self.fade_points}, "
            f"acc={self.lifetime_accuracy:.3f}, r={self.reuse_count}, "
            f"d={self.drifts_survived})"
        )


class SimilarityMatrix:
    """Pairwise (seen, agree) error-agreement counts between stored classifiers."""

    def __init__(self):
        self._pairs = {}

    @staticmethod
    def _key(a, b):
        return (a, b) if a < b else (b, a)

    def observe(self, a, b, seen, agree):
        key = self._key(a, b)
        entry = self._pairs.get(key)
        if entry is None:
            self._pairs[key] = [seen, agree]
        else:
            entry[0] += seen
            entry[1] += agree

    def entry(self, a, b):
        return tuple(self._pairs.get(self._key(a, b), (0, 0)))

    def sim(self, a, b):
        seen, agree = self.entry(a, b)
        return agree / seen if seen else None

    def remove_id(self, rec_id):
        for key in [k for k in self._pairs if rec_id in k]:
            del self._pairs[key]

    def items(self):
        return [(key, tuple(entry)) for key, entry in self._pairs.items()]

    def n_pairs(self):
        return len(self._pairs)


@dataclass
class DriftEvent:
    """Per-drift trace record; the substrate for the audit oracles."""

    drift_index: int
    buffer_size: int
    saved_id: int = None
    saved_from_reused: bool = False
    reused_id: int = None
    error_vectors: dict = field(default_factory=dict)
    representations: list = field(default_factory=list)
    faded_deleted: list = field(default_factory=list)
    evicted: list = field(default_factory=list)
    fade_table: dict = field(default_factory=dict)
    collection_size: int = 0


def _fade_snapshot(records):
    return {
        r.id: {
            "points": r.fade_points,
            "reuse_count": r.reuse_count,
            "drifts_survived": r.drifts_survived,
            "inherited_points": r.inherited_points,
        }
        for r in records
    }


class _FrameworkBase(StreamEstimator):
    """Shared plumbing: learner/detector construction, estimator surface."""

    def _init_common(self, schema, learner, learner_params, detector,
                     detector_params):
        self._schema = schema
        self._learner_params = dict(learner_params or {})
        self._detector = make_detector(detector, **(detector_params or {}))
        self._index = 0
        self.drifts_detected = 0
        self.max_collection_size = 0
        self.trace_events = []

    def _new_learner(self):
        return make_learner(self.learner, self._schema, **self._learner_params)

    @property
    def schema(self):
        return self._schema

    def process(self, instance):
        """Classify one instance, then learn per the framework's own logic.

        Returns (predicted label, detector signal).  Prequential semantics:
        the returned prediction never saw the instance's label.
        """
        raise NotImplementedError

    def predict(self, values):
        raise NotImplementedError

    def partial_fit(self, instance):
        self.process(instance)
        return self

    def size_estimate(self):
        raise NotImplementedError

    def _check_instance(self, instance):
        if len(instance.values) != self._schema.n_attributes:
            raise ValueError(
                f"expected {self._schema.n_attributes} attribute values, "
                f"got {len(instance.values)}"
            )


def _buffer_error_vectors(records, buffer):
    """Each stored classifier classifies every buffer instance; 1 = error."""
    vectors = {}
    for record in records:
        predict = record.learner.predict
        vectors[record.id] = tuple(
            0 if predict(inst.values) == inst.label else 1 for inst in buffer
        )
    return vectors


def _best_on_buffer(pool, vectors):
    """Record with the fewest buffer errors; ties go to the lowest id."""
    best = None
    best_errors = None
    for record in pool:
        errors = sum(vectors[record.id])
        if best is None or errors < best_errors:
            best = record
            best_errors = errors
    return best


def _best_lifetime(pool):
    best = None
    for record in pool:
        if best is None or record.lifetime_accuracy > best.lifetime_accuracy:
            best = record
    return best


class EcpfClassifier(_FrameworkBase):
    """Meta-learner that reuses copies of stored classifiers on drift.

    ``similarity_threshold`` (the conceptual-equivalence cutoff), and
    ``fade_points`` (points granted on creation and reuse, one lost per
    idle drift) control collection pruning.  Two classifiers whose error
    agreement over at least ``min_similarity_obs`` shared warning-buffer
    instances reaches the threshold are merged: the one with the better
    lifetime accuracy survives and inherits the other's fade points.
    """

    def __init__(self, schema, learner="hoeffding_nb", detector="hddm_a",
                 similarity_threshold=0.95, fade_points=15,
                 min_similarity_obs=60, memory_cap=None, learner_params=None,
                 detector_params=None, trace=False):
        check_fraction("similarity_threshold", similarity_threshold, 0.0, 1.0)
        if similarity_threshold <= 0.0:
            raise ConfigError("similarity_threshold must be in (0, 1]")
        check_positive_int("fade_points", fade_points)
        check_positive_int("min_similarity_obs", min_similarity_obs)
        self.learner = learner
        self.detector = detector
        self.similarity_threshold = similarity_threshold
        self.fade_points = fade_points
        self.min_similarity_obs = min_similarity_obs
        self.memory_cap = memory_cap
        self.learner_params = learner_params
        self.detector_params = detector_params
        self.trace = trace
        self._init_common(schema, learner, learner_params, detector, detector_params)

        self._records = []
        self._matrix = SimilarityMatrix()
        self._buffer = []
        self._next_id = 0
        self._c_new = self._new_learner()
        self._c_reused = None
        self._reused_source = None
        self._new_correct = 0
        self._reused_correct = 0
        self._segment_seen = 0

    # -- read-only views used by tests and the harness ---------------------
    @property
    def records(self):
        return list(self._records)

    @property
    def similarity_matrix(self):
        return self._matrix

    @property
    def reused_source_id(self):
        return self._reused_source

    def leader_is_reused(self):
        return self._c_reused is not None and self._reused_correct >= self._new_correct

    def predict(self, values):
        if self.leader_is_reused():
            return self._c_reused.predict(values)
        return self._c_new.predict(values)

    def process(self, instance):
        values = instance.values
        label = instance.label
        c_new = self._c_new
        c_reused = self._c_reused
        pred_new = c_new.predict(values)
        if c_reused is not None:
            pred_reused = c_reused.predict(values)
            use_reused = self._reused_correct >= self._new_correct
            pred = pred_reused if use_reused else pred_new
            if pred_reused == label:
                self._reused_correct += 1
        else:
            use_reused = False
            pred = pred_new
        if pred_new == label:
            self._new_correct += 1
        self._segment_seen += 1
        signal = self._detector.input(pred != label, self._index)
        self._index += 1
        if signal is _STABLE:
            c_new.partial_fit(values, label)
            if c_reused is not None:
                c_reused.partial_fit(values, label)
            if self._buffer:
                self._buffer.clear()
        elif signal is _WARNING:
            self._buffer.append(instance)
        else:
            self._handle_drift(use_reused)
        return pred, signal

    def _handle_drift(self, leader_was_reused):
        drift_index = self.drifts_detected
        buffer = self._buffer
        f = self.fade_points

        # 1. store the leading classifier as a new record
        if leader_was_reused:
            leader, seg_correct = self._c_reused, self._reused_correct
        else:
            leader, seg_correct = self._c_new, self._new_correct
        saved = ClassifierRecord(
            self._next_id, leader, f,
            lifetime_correct=seg_correct, lifetime_seen=self._segment_seen,
            created_at_drift=drift_index,
        )
        self._next_id += 1
        pool = list(self._records)  # reuse candidates exclude the new save
        self._records.append(saved)

        # 2. every stored classifier classifies the buffer once; the error
        # vectors drive reuse selection, the similarity update, and lifetime
        # accuracy evidence for the pre-existing records (the new save's
        # segment counters already cover these warning instances)
        vectors = _buffer_error_vectors(self._records, buffer) if buffer else {}
        if buffer:
            n_buffer = len(buffer)
            for record in pool:
                record.lifetime_seen += n_buffer
                record.lifetime_correct += n_buffer - sum(vectors[record.id])

        # 3. pick the classifier to reuse; training happens on a copy
        reused_id = None
        if pool:
            chosen = _best_on_buffer(pool, vectors) if buffer else _best_lifetime(pool)
            self._c_reused = chosen.learner.deep_copy()
            self._reused_source = chosen.id
            chosen.reuse_count += 1
            reused_id = chosen.id
        else:
            self._c_reused = None
            self._reused_source = None

        # 4. fresh classifier trained on the buffered instances
        c_new = self._new_learner()
        for inst in buffer:
            c_new.partial_fit(inst.values, inst.label)
        self._c_new = c_new

        # 5. similarity update + representation (needs buffer evidence)
        representations = []
        if buffer:
            self._update_similarity(vectors, len(buffer))
            representations = self._represent()

        # 6. fading: reuse earns f, idleness costs 1, zero points deletes
        faded = []
        for record in self._records:
            if record is saved:
                continue
            record.drifts_survived += 1
            if record.id == reused_id:
                record.fade_points += f
            else:
                record.fade_points -= 1
                if record.fade_points <= 0:
                    faded.append(record)
        for record in faded:
            self._records.remove(record)
            self._matrix.remove_id(record.id)

        # 7. memory cap
        evicted = self._enforce_memory_cap(saved)

        if len(self._records) > self.max_collection_size:
            self.max_collection_size = len(self._records)
        if self.trace:
            self.trace_events.append(DriftEvent(
                drift_index=drift_index,
                buffer_size=len(buffer),
                saved_id=saved.id,
                saved_from_reused=leader_was_reused,
                reused_id=reused_id,
                error_vectors=vectors,
                representations=representations,
                faded_deleted=[r.id for r in faded],
                evicted=evicted,
                fade_table=_fade_snapshot(self._records),
                collection_size=len(self._records),
            ))

        buffer.clear()
        self._new_correct = 0
        self._reused_correct = 0
        self._segment_seen = 0
        self.drifts_detected += 1

    def _update_similarity(self, vectors, buffer_size):
        records = self._records
        observe = self._matrix.observe
        n = len(records)
        for i in range(n):
            vec_i = vectors[records[i].id]
            id_i = records[i].id
            for j in range(i + 1, n):
                vec_j = vectors[records[j].id]
                agree = sum(1 for a, b in zip(vec_i, vec_j) if a == b)
                observe(id_i, records[j].id, buffer_size, agree)

    def _represent(self, protected_id=None):
        """Merge similar classifier pairs, most similar first.

        The record with the better lifetime accuracy survives (ties keep the
        older id) and inherits the deleted record's fade points.
        """
        m = self.similarity_threshold
        min_obs = self.min_similarity_obs
        by_id = {r.id: r for r in self._records}
        candidates = []
        for (a, b), (seen, agree) in self._matrix.items():
            if seen >= min_obs and a in by_id and b in by_id:
                sim = agree / seen
                if sim >= m:
                    candidates.append((sim, a, b))
        candidates.sort(key=lambda t: (-t[0], t[1], t[2]))
        representations = []
        deleted = set()
        for sim, a, b in candidates:
            if a in deleted or b in deleted:
                continue
            rec_a, rec_b = by_id[a], by_id[b]
            acc_a, acc_b = rec_a.lifetime_accuracy, rec_b.lifetime_accuracy
            if acc_a > acc_b or (acc_a == acc_b and a < b):
                survivor, absorbed = rec_a, rec_b
            else:
                survivor, absorbed = rec_b, rec_a
            if absorbed.id == protected_id:
                continue  # never delete the classifier currently in use
            survivor.fade_points += absorbed.fade_points
            survivor.inherited_points += absorbed.fade_points
            representations.append({
                "survivor": survivor.id,
                "absorbed": absorbed.id,
                "points_transferred": absorbed.fade_points,
                "sim": sim,
            })
            deleted.add(absorbed.id)
        if deleted:
            self._records = [r for r in self._records if r.id not in deleted]
            for rec_id in deleted:
                self._matrix.remove_id(rec_id)
        return representations

    def _enforce_memory_cap(self, saved_record, current_id=None):
        """Evict lowest-fade-point records while over the cap.

        The record saved at this drift is never evicted (floor of one
        record); the reuse source (or CPF's current classifier) is spared
        unless evicting everything else still leaves the total over the cap.
        """
        cap = self.memory_cap
        if cap is None:
            return []
        sizes = {r.id: r.learner.size_estimate() for r in self._records}
        total = sum(sizes.values())
        spared = current_id if current_id is not None else self._reused_source
        evicted = []
        while total > cap and len(self._records) > 1:
            candidates = [
                r for r in self._records
                if r.id != saved_record.id and r.id != spared
            ]
            if not candidates:
                candidates = [r for r in self._records if r.id != saved_record.id]
                if not candidates:
                    break
            victim = min(candidates, key=lambda r: (r.fade_points, r.id))
            self._records.remove(victim)
            self._matrix.remove_id(victim.id)
            total -= sizes[victim.id]
            evicted.append(victim.id)
        return evicted

    def size_estimate(self):
        total = sum(r.learner.size_estimate() for r in self._records)
        total += self._c_new.size_estimate()
        if self._c_reused is not None:
            total += self._c_reused.size_estimate()
        total += self._matrix.n_pairs() * 16
        total += len(self._buffer) * (self._schema.n_attributes + 1) * 8
        return total


class CpfClassifier(EcpfClassifier):
    """Single-classifier reuse framework with an even/odd buffer test.

    The current classifier is a member of the collection and is mutated in
    place when reused.  Drift handling waits for ``min_buffer`` buffered
    instances, trains a candidate on even-indexed ones and tests everything
    on odd-indexed ones: a stored classifier is reused directly when its
    odd-instance accuracy reaches the similarity threshold, or when its
    error agreement with the candidate does; otherwise the candidate
    (finished on the odd instances) joins the collection as the new
    current classifier.
    """

    def __init__(self, schema, learner="hoeffding_nb", detector="hddm_a",
                 similarity_threshold=0.95, fade_points=15, min_buffer=60,
                 min_similarity_obs=60, memory_cap=None, learner_params=None,
                 detector_params=None, trace=False):
        super().__init__(
            schema, learner=learner, detector=detector,
            similarity_threshold=similarity_threshold, fade_points=fade_points,
            min_similarity_obs=min_similarity_obs, memory_cap=memory_cap,
            learner_params=learner_params, detector_params=detector_params,
            trace=trace,
        )
        check_positive_int("min_buffer", min_buffer)
        self.min_buffer = min_buffer
        first = ClassifierRecord(
            self._next_id, self._c_new, self.fade_points, created_at_drift=-1
        )
        self._next_id += 1
        self._records = [first]
        self._current = first
        self._pending_drift = False
        self._handled_drifts = 0
        self.max_collection_size = 1
        # the tandem-classifier machinery is unused in CPF
        self._c_new = None
        self._c_reused = None

    @property
    def current_record(self):
        return self._current

    def leader_is_reused(self):
        return False

    def predict(self, values):
        return self._current.learner.predict(values)

    def process(self, instance):
        values = instance.values
        label = instance.label
        current = self._current
        pred = current.learner.predict(values)
        correct = pred == label
        current.lifetime_seen += 1
        if correct:
            current.lifetime_correct += 1
        if self._pending_drift:
            # drift already signalled; keep buffering until min_buffer
            self._buffer.append(instance)
            if len(self._buffer) >= self.min_buffer:
                self._handle_drift_cpf()
            return pred, _WARNING
        signal = self._detector.input(not correct, self._index)
        self._index += 1
        if signal is _STABLE:
            current.learner.partial_fit(values, label)
            if self._buffer:
                self._buffer.clear()
        elif signal is _WARNING:
            self._buffer.append(instance)
        else:
            self.drifts_detected += 1
            if len(self._buffer) >= self.min_buffer:
                self._handle_drift_cpf()
            else:
                self._pending_drift = True
        return pred, signal

    def _handle_drift_cpf(self):
        drift_index = self._handled_drifts
        buffer = self._buffer
        f = self.fade_points
        evens = buffer[0::2]
        odds = buffer[1::2]

        candidate = self._new_learner()
        for inst in evens:
            candidate.partial_fit(inst.values, inst.label)

        vectors = _buffer_error_vectors(self._records, odds) if odds else {}
        cand_predict = candidate.predict
        cand_vector = tuple(
            0 if cand_predict(inst.values) == inst.label else 1 for inst in odds
        )

        # the similarity threshold doubles as the reuse bar: a stored
        # classifier is reused when it classifies the odd instances at >= m
        # accuracy, or failing that, when its error agreement with the
        # candidate reaches m; otherwise the candidate takes over
        chosen = None
        if self._records and odds:
            n_odds = len(odds)
            bar = self.similarity_threshold
            best_acc = None
            for record in self._records:
                acc = (n_odds - sum(vectors[record.id])) / n_odds
                if acc >= bar and (best_acc is None or acc > best_acc):
                    chosen = record
                    best_acc = acc
            if chosen is None:
                best_sim = None
                for record in self._records:
                    agree = sum(
                        1 for a, b in zip(vectors[record.id], cand_vector) if a == b
                    )
                    sim = agree / n_odds
                    if sim >= bar and (best_sim is None or sim > best_sim):
                        chosen = record
                        best_sim = sim

        admitted = None
        reused_id = None
        if chosen is not None:
            chosen.reuse_count += 1
            reused_id = chosen.id
            self._current = chosen
        else:
            for inst in odds:
                candidate.partial_fit(inst.values, inst.label)
            admitted = ClassifierRecord(
                self._next_id, candidate, f, created_at_drift=drift_index
            )
            self._next_id += 1
            self._records.append(admitted)
            vectors[admitted.id] = cand_vector
            self._current = admitted

        representations = []
        if odds:
            tested = [r for r in self._records if r.id in vectors]
            n = len(tested)
            for i in range(n):
                vec_i = vectors[tested[i].id]
                for j in range(i + 1, n):
                    vec_j = vectors[tested[j].id]
                    agree = sum(1 for a, b in zip(vec_i, vec_j) if a == b)
                    self._matrix.observe(tested[i].id, tested[j].id, len(odds), agree)
            representations = self._represent(protected_id=self._current.id)

        faded = []
        for record in self._records:
            if record is admitted:
                continue
            record.drifts_survived += 1
            if record.id == reused_id:
                record.fade_points += f
            else:
                record.fade_points -= 1
                if record.fade_points <= 0:
                    faded.append(record)
        for record in faded:
            self._records.remove(record)
            self._matrix.remove_id(record.id)

        evicted = self._enforce_memory_cap(
            admitted if admitted is not None else self._current,
            current_id=self._current.id,
        )

        if len(self._records) > self.max_collection_size:
            self.max_collection_size = len(self._records)
        if self.trace:
            self.trace_events.append(DriftEvent(
                drift_index=drift_index,
                buffer_size=len(buffer),
                saved_id=admitted.id if admitted is not None else None,
                saved_from_reused=False,
                reused_id=reused_id,
                error_vectors=vectors,
                representations=representations,
                faded_deleted=[r.id for r in faded],
                evicted=evicted,
                fade_table=_fade_snapshot(self._records),
                collection_size=len(self._records),
            ))

        buffer.clear()
        self._pending_drift = False
        self._handled_drifts += 1

    def size_estimate(self):
        total = sum(r.learner.size_estimate() for r in self._records)
        total += self._matrix.n_pairs() * 16
        total += len(self._buffer) * (self._schema.n_attributes + 1) * 8
        return total


class DriftResetClassifier(_FrameworkBase):
    """Baseline: one classifier, replaced by a buffer-trained fresh one on drift."""

    def __init__(self, schema, learner="hoeffding_nb", detector="hddm_a",
                 learner_params=None, detector_params=None, trace=False):
        self.learner = learner
        self.detector = detector
        self.learner_params = learner_params
        self.detector_params = detector_params
        self.trace = trace
        self._init_common(schema, learner, learner_params, detector, detector_params)
        self._classifier = self._new_learner()
        self._buffer = []

    def predict(self, values):
        return self._classifier.predict(values)

    def process(self, instance):
        values = instance.values
        label = instance.label
        classifier = self._classifier
        pred = classifier.predict(values)
        signal = self._detector.input(pred != label, self._index)
        self._index += 1
        if signal is _STABLE:
            classifier.partial_fit(values, label)
            if self._buffer:
                self._buffer.clear()
        elif signal is _WARNING:
            self._buffer.append(instance)
        else:
            fresh = self._new_learner()
            for inst in self._buffer:
                fresh.partial_fit(inst.values, inst.label)
            self._classifier = fresh
            self._buffer.clear()
            self.drifts_detected += 1
            if self.trace:
                self.trace_events.append(DriftEvent(
                    drift_index=self.drifts_detected - 1,
                    buffer_size=0,
                    collection_size=0,
                ))
        return pred, signal

    def size_estimate(self):
        total = self._classifier.size_estimate()
        total += len(self._buffer) * (self._schema.n_attributes + 1) * 8
        return total


FRAMEWORKS = {
    "ecpf": EcpfClassifier,
    "cpf": CpfClassifier,
    "baseline": DriftResetClassifier,
}


def make_framework(kind, schema, **params):
    try:
        cls = FRAMEWORKS[kind]
    except KeyError:
        raise ConfigError(
            f"unknown framework {kind!r}; expected one of {sorted(FRAMEWORKS)}"
        ) from None
    return cls(schema, **params)
