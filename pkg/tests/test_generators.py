import math
import statistics
from random import Random

import pytest

from driftpool.base import ConfigError
from driftpool.generators import (
    ConceptSchedule,
    GeneratorSpec,
    NoiseSpec,
    _Circles,
    _Led,
    _Stagger,
    apply_noise,
    make_generator,
    scheduled_stream,
)
from driftpool.stream import AttributeSpec, Instance, ListStream, Schema


class StubRng:
    """Feeds a fixed sequence to random(); getrandbits always 0."""

    def __init__(self, values):
        self._values = list(values)

    def random(self):
        return self._values.pop(0)

    def getrandbits(self, _bits):
        return 0


def collect(source, limit=None):
    out = []
    for item in source:
        out.append(item)
        if limit is not None and len(out) >= limit:
            break
    return out


class TestSchedule:
    def test_stagger_schedule_unrolls(self):
        source = scheduled_stream("stagger", ConceptSchedule((1, 2, 3), 1000, 6), 7)
        items = collect(source)
        assert len(items) == 7000
        markers = [i for i, (_, m) in enumerate(items) if m]
        assert markers == [1000, 2000, 3000, 4000, 5000, 6000]

    def test_zero_drifts(self):
        source = scheduled_stream("circles", ConceptSchedule((0.3,), 500, 0), 1)
        items = collect(source)
        assert len(items) == 500
        assert not any(m for _, m in items)

    def test_marker_spacing_property(self):
        source = scheduled_stream("led", ConceptSchedule((1, 3, 5, 7), 250, 9), 3)
        markers = [i for i, (_, m) in enumerate(collect(source)) if m]
        assert len(markers) == 9
        assert all(b - a == 250 for a, b in zip(markers, markers[1:]))

    @pytest.mark.slow
    def test_paper_scale_agrawal_instance_count(self):
        schedule = ConceptSchedule((1, 3, 5, 7, 9), 2500, 400)
        assert schedule.total_instances == 1002500
        source = scheduled_stream("agrawal", schedule, 5)
        count = 0
        drifts = 0
        while True:
            item = source.next_item()
            if item is None:
                break
            count += 1
            drifts += item[1]
        assert count == 1002500
        assert drifts == 400

    def test_determinism_across_runs(self):
        def dump(seed):
            src = scheduled_stream("random_rbf", ConceptSchedule((10, 20), 100, 3), seed)
            return [(tuple(i.values), i.label, m) for i, m in collect(src)]

        assert dump(42) == dump(42)
        assert dump(42) != dump(43)

    def test_recurring_concepts_identical_structure(self):
        # same concept slot in two cycles classifies a fixed point identically
        src = scheduled_stream("circles", ConceptSchedule((0.2, 0.4), 10, 3), 1)
        items = collect(src)
        assert len(items) == 40

    def test_schedule_validation(self):
        with pytest.raises(ConfigError):
            ConceptSchedule((), 100, 0)
        with pytest.raises(ConfigError):
            ConceptSchedule((1,), 0, 0)
        with pytest.raises(ConfigError):
            ConceptSchedule((1,), 100, -1)


class TestFamilies:
    def test_circles_inside(self):
        sample = _Circles().make_sampler(0.2, Random(0))
        values, label = sample(StubRng([0.5, 0.6]))
        assert values == [0.5, 0.6]
        assert label == 1  # (0.1)^2 <= (0.2)^2

    def test_circles_outside(self):
        sample = _Circles().make_sampler(0.2, Random(0))
        values, label = sample(StubRng([0.9, 0.9]))
        assert label == 0  # 0.32 > 0.04

    def test_circles_boundary_inclusive(self):
        sample = _Circles().make_sampler(0.2, Random(0))
        _, label = sample(StubRng([0.7, 0.5]))
        assert label == 1

    @pytest.mark.parametrize("fn,truth", [
        (1, lambda s, c, sh: s == 0 and c == 0),
        (2, lambda s, c, sh: c == 1 or sh == 0),
        (3, lambda s, c, sh: s in (1, 2)),
    ])
    def test_stagger_rules_full_truth_table(self, fn, truth):
        sample = _Stagger().make_sampler(fn, Random(0))
        for size in range(3):
            for color in range(3):
                for shape in range(3):
                    stub = StubRng([size / 3 + 0.01, color / 3 + 0.01,
                                    shape / 3 + 0.01])
                    values, label = sample(stub)
                    assert values == [size, color, shape]
                    assert label == int(truth(size, color, shape))

    def test_stagger_small_red_circle_positive(self):
        sample = _Stagger().make_sampler(1, Random(0))
        _, label = sample(StubRng([0.0, 0.0, 0.0]))
        assert label == 1

    def test_led_digit_segments(self):
        sample = _Led().make_sampler(1, Random(0))
        # digit 8 lights all seven segments; irrelevant bits are 0 here
        values, label = sample(StubRng([0.85]))
        assert label == 8
        base = [1] * 7 + [0, 0, 0]
        perm = _Led._permutation(1)
        assert values == [base[perm[i]] for i in range(10)]

    def test_led_permutations_distinct(self):
        perms = [tuple(_Led._permutation(d)) for d in (1, 3, 5, 7)]
        assert len(set(perms)) == 4
        identity = tuple(range(10))
        for d, perm in zip((1, 3, 5, 7), perms):
            moved = sum(1 for i in range(10) if perm[i] != identity[i])
            assert moved >= d

    def test_rbf_shape_and_determinism(self):
        spec = GeneratorSpec("random_rbf", 20, seed=9)
        first = collect(make_generator(spec), 50)
        second = collect(make_generator(spec), 50)
        for (a, _), (b, _) in zip(first, second):
            assert a.values == b.values and a.label == b.label
        assert all(len(i.values) == 10 for i, _ in first)
        assert all(i.label in (0, 1) for i, _ in first)

    def test_agrawal_attribute_ranges(self):
        items = collect(make_generator(GeneratorSpec("agrawal", 1, seed=2)), 500)
        for inst, _ in items:
            salary, commission, age, elevel, car, zipcode, hvalue, hyears, loan = (
                inst.values
            )
            assert 20000 <= salary <= 150000
            assert commission == 0 or 10000 <= commission <= 75000
            assert (commission == 0) == (salary >= 75000)
            assert 20 <= age <= 80
            assert elevel in (0, 1, 2, 3, 4)
            assert 1 <= car <= 20
            assert zipcode in range(9)
            assert 1 <= hyears <= 30
            assert 0 <= loan <= 500000
            assert inst.label == int(not (age < 40 or age >= 60))

    def test_agrawal_disposable_rule(self):
        items = collect(make_generator(GeneratorSpec("agrawal", 7, seed=3)), 500)
        for inst, _ in items:
            salary, commission = inst.values[0], inst.values[1]
            loan = inst.values[8]
            disposable = 2.0 * (salary + commission) / 3.0 - loan / 5.0 - 20000.0
            assert inst.label == (0 if disposable > 0 else 1)

    def test_spec_validation(self):
        with pytest.raises(ConfigError):
            GeneratorSpec("agrawal", 2)
        with pytest.raises(ConfigError):
            GeneratorSpec("circles", 0.5)
        with pytest.raises(ConfigError):
            GeneratorSpec("nope", 1)
        with pytest.raises(ConfigError):
            scheduled_stream("stagger", ConceptSchedule((1, 4), 10, 1), 1)


def constant_stream(value, label_cycle, n, schema=None):
    if schema is None:
        schema = Schema((AttributeSpec("x"),), ("a", "b"))
    items = [
        (Instance([value], label_cycle[i % len(label_cycle)]), False)
        for i in range(n)
    ]
    return ListStream(schema, items)


class TestNoise:
    def test_identity_configuration(self):
        src = scheduled_stream("circles", ConceptSchedule((0.3,), 200, 1), 4)
        plain = [(list(i.values), i.label, m) for i, m in collect(src)]
        src = scheduled_stream("circles", ConceptSchedule((0.3,), 200, 1), 4)
        noisy = apply_noise(src, NoiseSpec(0.0, 0.0, None, seed=1))
        out = [(list(i.values), i.label, m) for i, m in collect(noisy)]
        assert out == plain

    def test_class_noise_one_flips_every_label(self):
        src = constant_stream(1.0, [0, 1], 200)
        noisy = apply_noise(src, NoiseSpec(class_noise=1.0, seed=3))
        for i, (inst, _) in enumerate(collect(noisy)):
            assert inst.label == 1 - (i % 2)

    def test_attribute_noise_stdev(self):
        """Multiplier stdev must match attribute_noise / 3 within 0.005."""
        n = 100_000
        src = constant_stream(1.0, [0], n)
        noisy = apply_noise(src, NoiseSpec(attribute_noise=0.5, seed=11))
        ratios = [inst.values[0] - 1.0 for inst, _ in collect(noisy)]
        sd = statistics.pstdev(ratios)
        assert abs(sd - 0.5 / 3.0) < 0.005
        assert abs(statistics.mean(ratios)) < 0.005

    def test_class_noise_rate(self):
        n = 100_000
        p = 0.2
        src = constant_stream(1.0, [0], n)
        noisy = apply_noise(src, NoiseSpec(class_noise=p, seed=5))
        flipped = sum(inst.label != 0 for inst, _ in collect(noisy))
        assert abs(flipped / n - p) < 0.01

    def test_nominal_switch_rate_and_validity(self):
        schema = Schema((AttributeSpec("c", ("u", "v", "w")),), ("a", "b"))
        n = 60_000
        src = ListStream(schema, [(Instance([0], 0), False)] * n)
        noisy = apply_noise(src, NoiseSpec(attribute_noise=0.3, seed=6))
        switched = 0
        for inst, _ in collect(noisy):
            assert inst.values[0] in (0, 1, 2)
            switched += inst.values[0] != 0
        assert abs(switched / n - 0.3) < 0.01

    def test_majority_fraction(self):
        """Emitted majority (class 0) fraction within 0.02 of the target."""
        n = 100_000
        src = constant_stream(1.0, [0, 1], 4 * n)  # balanced base stream
        noisy = apply_noise(src, NoiseSpec(majority_fraction=0.7, seed=8))
        labels = [inst.label for inst, _ in collect(noisy, n)]
        fraction = labels.count(0) / len(labels)
        assert abs(fraction - 0.7) < 0.02

    def test_majority_validated_against_class_count(self):
        schema = Schema((AttributeSpec("x"),), ("a", "b", "c"))
        src = ListStream(schema, [(Instance([1.0], 0), False)])
        with pytest.raises(ConfigError):
            apply_noise(src, NoiseSpec(majority_fraction=0.2, seed=1))

    def test_markers_survive_rejection(self):
        src = scheduled_stream("stagger", ConceptSchedule((1, 2, 3), 300, 5), 2)
        noisy = apply_noise(src, NoiseSpec(majority_fraction=0.9, seed=9))
        markers = sum(m for _, m in collect(noisy))
        assert markers == 5

    def test_noise_spec_validation(self):
        with pytest.raises(ConfigError):
            NoiseSpec(attribute_noise=1.5)
        with pytest.raises(ConfigError):
            NoiseSpec(class_noise=-0.1)
