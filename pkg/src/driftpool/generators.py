"""Synthetic stream generators, recurring-concept scheduling, noise injection.

Five families: agrawal, circles, led, random_rbf, stagger.  A scheduled
stream cycles through concept parameter values sequentially, switching
abruptly every ``drift_period`` instances and marking the first instance of
each new concept with ``drift_marker=True``.
"""

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from random import Random

from .base import ConfigError, check_fraction, check_positive_int, mix_seed
from .stream import AttributeSpec, Instance, Schema, StreamSource

_MODEL_SALT = 0x5EED


@dataclass(frozen=True)
class ConceptSchedule:
    """Sequentially recurring concepts: cycle through concept_params."""

    concept_params: tuple
    drift_period: int
    total_drifts: int = 0

    def __post_init__(self):
        object.__setattr__(self, "concept_params", tuple(self.concept_params))
        if not self.concept_params:
            raise ConfigError("concept_params must be non-empty")
        check_positive_int("drift_period", self.drift_period)
        if not isinstance(self.total_drifts, int) or self.total_drifts < 0:
            raise ConfigError(f"total_drifts must be >= 0, got {self.total_drifts!r}")

    @property
    def total_instances(self):
        return (self.total_drifts + 1) * self.drift_period

    def drift_positions(self):
        """0-based stream indices of the first instance of each new concept."""
        return [self.drift_period * (k + 1) for k in range(self.total_drifts)]


@dataclass(frozen=True)
class GeneratorSpec:
    family: str
    concept_param: float
    seed: int = 1

    def __post_init__(self):
        family = _get_family(self.family)
        family.check_param(self.concept_param)


@dataclass(frozen=True)
class NoiseSpec:
    """Attribute/class noise plus optional class-imbalance target.

    ``majority_fraction`` targets the emitted fraction of class index 0 via
    rejection of minority-class instances; None disables rebalancing.  The
    rejection is one-sided: a stream whose natural majority fraction already
    exceeds the target is passed through unchanged.
    """

    attribute_noise: float = 0.0
    class_noise: float = 0.0
    majority_fraction: float = None
    seed: int = 1

    def __post_init__(self):
        check_fraction("attribute_noise", self.attribute_noise)
        check_fraction("class_noise", self.class_noise)
        if self.majority_fraction is not None:
            check_fraction("majority_fraction", self.majority_fraction)


class _Family:
    """One generator family: schema plus per-concept instance samplers."""

    name = None
    legal_params = ()

    def check_param(self, param):
        if not any(self._param_eq(param, legal) for legal in self.legal_params):
            raise ConfigError(
                f"{self.name}: concept value {param!r} not in {list(self.legal_params)}"
            )

    @staticmethod
    def _param_eq(a, b):
        return abs(float(a) - float(b)) < 1e-9

    def schema(self):
        raise NotImplementedError

    def make_sampler(self, param, model_rng):
        """Return sample(rng) -> (values, label) for one stationary concept.

        ``model_rng`` drives any random structure of the concept itself so a
        recurring concept value always rebuilds the identical concept.
        """
        raise NotImplementedError


class _Agrawal(_Family):
    """Loan-applicant generator with the ten standard classification rules.

    Rules 1, 3, 5, 7 and 9 are selectable as concepts; class 0 is group A.
    """

    name = "agrawal"
    legal_params = (1, 3, 5, 7, 9)

    _ATTRS = (
        "salary", "commission", "age", "elevel", "car",
        "zipcode", "hvalue", "hyears", "loan",
    )

    def schema(self):
        return Schema(
            tuple(AttributeSpec(a) for a in self._ATTRS),
            ("groupA", "groupB"),
            name="agrawal",
        )

    def make_sampler(self, param, model_rng):
        classify = _AGRAWAL_RULES[int(param) - 1]

        def sample(rng):
            rnd = rng.random
            salary = 20000.0 + rnd() * 130000.0
            commission = 0.0 if salary >= 75000.0 else 10000.0 + rnd() * 65000.0
            age = 20 + int(rnd() * 61)
            elevel = int(rnd() * 5)
            car = 1 + int(rnd() * 20)
            zipcode = int(rnd() * 9)
            hvalue = (9 - zipcode) * 100000.0 * (0.5 + rnd())
            hyears = 1 + int(rnd() * 30)
            loan = rnd() * 500000.0
            label = classify(
                salary, commission, age, elevel, car, zipcode, hvalue, hyears, loan
            )
            return [
                salary, commission, float(age), float(elevel), float(car),
                float(zipcode), hvalue, float(hyears), loan,
            ], label

        return sample


def _rule1(salary, commission, age, elevel, car, zipcode, hvalue, hyears, loan):
    return 0 if (age < 40 or age >= 60) else 1


def _rule2(salary, commission, age, elevel, car, zipcode, hvalue, hyears, loan):
    if age < 40:
        return 0 if 50000 <= salary <= 100000 else 1
    if age < 60:
        return 0 if 75000 <= salary <= 125000 else 1
    return 0 if 25000 <= salary <= 75000 else 1


def _rule3(salary, commission, age, elevel, car, zipcode, hvalue, hyears, loan):
    if age < 40:
        return 0 if elevel in (0, 1) else 1
    if age < 60:
        return 0 if elevel in (1, 2, 3) else 1
    return 0 if elevel in (2, 3, 4) else 1


def _rule4(salary, commission, age, elevel, car, zipcode, hvalue, hyears, loan):
    if age < 40:
        if elevel in (0, 1):
            return 0 if 25000 <= salary <= 75000 else 1
        return 0 if 50000 <= salary <= 100000 else 1
    if age < 60:
        if elevel in (1, 2, 3):
            return 0 if 50000 <= salary <= 100000 else 1
        return 0 if 75000 <= salary <= 125000 else 1
    if elevel in (2, 3, 4):
        return 0 if 50000 <= salary <= 100000 else 1
    return 0 if 25000 <= salary <= 75000 else 1


def _rule5(salary, commission, age, elevel, car, zipcode, hvalue, hyears, loan):
    if age < 40:
        if 50000 <= salary <= 100000:
            return 0 if 100000 <= loan <= 300000 else 1
        return 0 if 200000 <= loan <= 400000 else 1
    if age < 60:
        if 75000 <= salary <= 125000:
            return 0 if 200000 <= loan <= 400000 else 1
        return 0 if 300000 <= loan <= 500000 else 1
    if 25000 <= salary <= 75000:
        return 0 if 300000 <= loan <= 500000 else 1
    return 0 if 100000 <= loan <= 300000 else 1


def _rule6(salary, commission, age, elevel, car, zipcode, hvalue, hyears, loan):
    total = salary + commission
    if age < 40:
        return 0 if 50000 <= total <= 100000 else 1
    if age < 60:
        return 0 if 75000 <= total <= 125000 else 1
    return 0 if 25000 <= total <= 75000 else 1


def _rule7(salary, commission, age, elevel, car, zipcode, hvalue, hyears, loan):
    disposable = 2.0 * (salary + commission) / 3.0 - loan / 5.0 - 20000.0
    return 0 if disposable > 0 else 1


def _rule8(salary, commission, age, elevel, car, zipcode, hvalue, hyears, loan):
    disposable = 2.0 * (salary + commission) / 3.0 - 5000.0 * elevel - 20000.0
    return 0 if disposable > 0 else 1


def _rule9(salary, commission, age, elevel, car, zipcode, hvalue, hyears, loan):
    disposable = (
        2.0 * (salary + commission) / 3.0 - 5000.0 * elevel - loan / 5.0 - 10000.0
    )
    return 0 if disposable > 0 else 1


def _rule10(salary, commission, age, elevel, car, zipcode, hvalue, hyears, loan):
    equity = 0.0 if hyears < 20 else hvalue * (hyears - 20) / 10.0
    disposable = (
        2.0 * (salary + commission) / 3.0 - 5000.0 * elevel + equity / 5.0 - 10000.0
    )
    return 0 if disposable > 0 else 1


_AGRAWAL_RULES = (
    _rule1, _rule2, _rule3, _rule4, _rule5,
    _rule6, _rule7, _rule8, _rule9, _rule10,
)


class _Circles(_Family):
    """Two uniform attributes; label = inside the circle at (0.5, 0.5)."""

    name = "circles"
    legal_params = (0.2, 0.25, 0.3, 0.35, 0.4)

    def schema(self):
        return Schema(
            (AttributeSpec("x"), AttributeSpec("y")),
            ("outside", "inside"),
            name="circles",
        )

    def make_sampler(self, param, model_rng):
        r_sq = float(param) * float(param)

        def sample(rng):
            x = rng.random()
            y = rng.random()
            dx = x - 0.5
            dy = y - 0.5
            return [x, y], 1 if dx * dx + dy * dy <= r_sq else 0

        return sample


_LED_SEGMENTS = (
    (1, 1, 1, 1, 1, 1, 0),
    (0, 1, 1, 0, 0, 0, 0),
    (1, 1, 0, 1, 1, 0, 1),
    (1, 1, 1, 1, 0, 0, 1),
    (0, 1, 1, 0, 0, 1, 1),
    (1, 0, 1, 1, 0, 1, 1),
    (1, 0, 1, 1, 1, 1, 1),
    (1, 1, 1, 0, 0, 0, 0),
    (1, 1, 1, 1, 1, 1, 1),
    (1, 1, 1, 1, 0, 1, 1),
)


class _Led(_Family):
    """Seven-segment digit display plus 3 irrelevant bits (10 attributes).

    The concept value d displaces the first d segment attributes: the slot
    window formed by those segments plus the 3 irrelevant slots is rotated
    by one position, yielding a distinct fixed permutation per concept.
    """

    name = "led"
    legal_params = (1, 3, 5, 7)

    def schema(self):
        attrs = [AttributeSpec(f"seg{i}", ("0", "1")) for i in range(7)]
        attrs += [AttributeSpec(f"irr{i}", ("0", "1")) for i in range(3)]
        return Schema(tuple(attrs), tuple(str(d) for d in range(10)), name="led")

    @staticmethod
    def _permutation(d):
        perm = list(range(10))
        window = list(range(d)) + [7, 8, 9]
        vals = [perm[w] for w in window]
        vals = vals[-1:] + vals[:-1]
        for w, v in zip(window, vals):
            perm[w] = v
        return perm

    def make_sampler(self, param, model_rng):
        perm = self._permutation(int(param))

        def sample(rng):
            digit = int(rng.random() * 10)
            base = list(_LED_SEGMENTS[digit])
            base.append(rng.getrandbits(1))
            base.append(rng.getrandbits(1))
            base.append(rng.getrandbits(1))
            return [base[perm[i]] for i in range(10)], digit

        return sample


class _RandomRbf(_Family):
    """Gaussian centroids with random class/weight/spread; 10 attributes.

    The concept value is the centroid count; the centroid model is rebuilt
    from a concept-specific seed so a recurring value recreates the same
    centroids.
    """

    name = "random_rbf"
    legal_params = (10, 20, 30, 40, 50)
    n_attributes = 10

    def schema(self):
        attrs = tuple(AttributeSpec(f"att{i}") for i in range(self.n_attributes))
        return Schema(attrs, ("class0", "class1"), name="random_rbf")

    def make_sampler(self, param, model_rng):
        n_centroids = int(param)
        n_att = self.n_attributes
        centres = []
        labels = []
        stds = []
        cumulative = []
        total_weight = 0.0
        for _ in range(n_centroids):
            centres.append([model_rng.random() for _ in range(n_att)])
            labels.append(int(model_rng.random() * 2))
            stds.append(model_rng.random())
            total_weight += model_rng.random()
            cumulative.append(total_weight)

        def sample(rng):
            pick = bisect_right(cumulative, rng.random() * total_weight)
            if pick >= n_centroids:
                pick = n_centroids - 1
            centre = centres[pick]
            direction = [rng.random() * 2.0 - 1.0 for _ in range(n_att)]
            magnitude = math.sqrt(sum(d * d for d in direction))
            desired = rng.gauss(0.0, 1.0) * stds[pick]
            scale = desired / magnitude if magnitude > 0 else 0.0
            values = [centre[i] + direction[i] * scale for i in range(n_att)]
            return values, labels[pick]

        return sample


class _Stagger(_Family):
    """Three nominal attributes with the three standard boolean rules."""

    name = "stagger"
    legal_params = (1, 2, 3)

    def schema(self):
        return Schema(
            (
                AttributeSpec("size", ("small", "medium", "large")),
                AttributeSpec("color", ("red", "green", "blue")),
                AttributeSpec("shape", ("circle", "square", "triangle")),
            ),
            ("false", "true"),
            name="stagger",
        )

    def make_sampler(self, param, model_rng):
        fn = int(param)

        def sample(rng):
            size = int(rng.random() * 3)
            color = int(rng.random() * 3)
            shape = int(rng.random() * 3)
            if fn == 1:
                label = 1 if (size == 0 and color == 0) else 0
            elif fn == 2:
                label = 1 if (color == 1 or shape == 0) else 0
            else:
                label = 1 if size >= 1 else 0
            return [size, color, shape], label

        return sample


_FAMILIES = {
    f.name: f for f in (_Agrawal(), _Circles(), _Led(), _RandomRbf(), _Stagger())
}


def _get_family(name):
    try:
        return _FAMILIES[name]
    except KeyError:
        raise ConfigError(
            f"unknown generator family {name!r}; expected one of {sorted(_FAMILIES)}"
        ) from None


def generator_families():
    return sorted(_FAMILIES)


def legal_concept_values(family):
    return list(_get_family(family).legal_params)


class ScheduledStream(StreamSource):
    """Concepts recur sequentially; abrupt switch every drift_period instances.

    Segment k uses concept_params[k % n]; its instance randomness comes from
    a per-segment seed while the concept structure itself is derived from the
    concept slot only, so a recurring value reproduces the identical concept.
    """

    def __init__(self, family, schedule, seed=1):
        self._family = _get_family(family)
        for param in schedule.concept_params:
            self._family.check_param(param)
        self.schema = self._family.schema()
        self._schedule = schedule
        self._seed = seed
        self._segment = -1
        self._remaining = 0
        self._sample = None
        self._rng = None
        self._start_of_segment = False

    def _advance_segment(self):
        self._segment += 1
        if self._segment > self._schedule.total_drifts:
            return False
        params = self._schedule.concept_params
        slot = self._segment % len(params)
        model_rng = Random(mix_seed(self._seed, _MODEL_SALT, slot))
        self._sample = self._family.make_sampler(params[slot], model_rng)
        self._rng = Random(mix_seed(self._seed, self._segment))
        self._remaining = self._schedule.drift_period
        self._start_of_segment = self._segment > 0
        return True

    def next_item(self):
        if self._remaining == 0:
            if not self._advance_segment():
                return None
        values, label = self._sample(self._rng)
        self._remaining -= 1
        marker = self._start_of_segment
        self._start_of_segment = False
        return Instance(values, label), marker


class InfiniteStream(StreamSource):
    """Single stationary concept, never exhausts, no drift markers."""

    def __init__(self, spec):
        family = _get_family(spec.family)
        family.check_param(spec.concept_param)
        self.schema = family.schema()
        model_rng = Random(mix_seed(spec.seed, _MODEL_SALT, 0))
        self._sample = family.make_sampler(spec.concept_param, model_rng)
        self._rng = Random(mix_seed(spec.seed, 0))

    def next_item(self):
        values, label = self._sample(self._rng)
        return Instance(values, label), False


def make_generator(spec):
    """Infinite stationary source for one concept of one family."""
    return InfiniteStream(spec)


def scheduled_stream(family, schedule, seed=1):
    """Finite recurring-concept source driven by a ConceptSchedule."""
    return ScheduledStream(family, schedule, seed)


class NoisyStream(StreamSource):
    """Wraps a source with imbalance rejection, attribute and class noise.

    Per instance, in order: the imbalance filter may discard minority-class
    instances (class index 0 is the majority class; a discarded instance's
    drift marker carries over to the next emitted one); numeric attributes
    are multiplied by 1 + N(0, attribute_noise / 3); nominal attributes are
    switched to a uniformly random other value with probability
    attribute_noise; the class label is switched to a uniformly random other
    label with probability class_noise.
    """

    def __init__(self, source, noise):
        self.schema = source.schema
        self._source = source
        self._noise = noise
        self._rng = Random(mix_seed(noise.seed, 0xA015E))
        self._nom_sizes = self.schema.nominal_sizes()
        self._n_classes = self.schema.n_classes
        if noise.majority_fraction is not None:
            low = 1.0 / self._n_classes
            if not low <= noise.majority_fraction <= 1.0:
                raise ConfigError(
                    f"majority_fraction must be in [{low:.4f}, 1] for "
                    f"{self._n_classes} classes"
                )
        self._emitted = 0
        self._emitted_majority = 0
        self._pending_marker = False

    def next_item(self):
        noise = self._noise
        target = noise.majority_fraction
        while True:
            item = self._source.next_item()
            if item is None:
                return None
            instance, marker = item
            self._pending_marker = self._pending_marker or marker
            if target is None or instance.label == 0:
                break
            if self._emitted_majority >= target * (self._emitted + 1):
                break
            # reject minority instance; keep its marker pending

        self._emitted += 1
        if instance.label == 0:
            self._emitted_majority += 1

        rng = self._rng
        att_noise = noise.attribute_noise
        if att_noise > 0.0:
            values = instance.values
            sizes = self._nom_sizes
            sigma = att_noise / 3.0
            for i, size in enumerate(sizes):
                if size is None:
                    values[i] *= 1.0 + rng.gauss(0.0, sigma)
                elif rng.random() < att_noise:
                    shift = 1 + int(rng.random() * (size - 1))
                    values[i] = (int(values[i]) + shift) % size
        if noise.class_noise > 0.0 and rng.random() < noise.class_noise:
            shift = 1 + int(rng.random() * (self._n_classes - 1))
            instance.label = (instance.label + shift) % self._n_classes

        marker = self._pending_marker
        self._pending_marker = False
        return instance, marker


def apply_noise(source, noise):
    """Wrap a source with a NoiseSpec (identity when all knobs are off)."""
    return NoisyStream(source, noise)
