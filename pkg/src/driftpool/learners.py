"""Incremental classifiers: Hoeffding tree with NB leaves, naive Bayes,
multiclass perceptron.

All learners share the same surface: ``partial_fit(values, label)`` with a
single instance, pure ``predict(values)``, ``deep_copy()`` yielding a
state-disjoint replica and a deterministic ``size_estimate()`` in bytes.
Values are plain Python lists aligned to the schema (nominal attributes as
indices); these are hot paths, so the implementations stay allocation-light.
"""

import copy
import math

from .base import StreamEstimator

_SQRT2 = math.sqrt(2.0)
_LOG_2PI = math.log(2.0 * math.pi)
_LOG_EPS = math.log(1e-9)

# Nominal byte accounting used by size_estimate: a flat cost per tree node
# plus a cost per stored statistic slot (a counter or float parameter).
NODE_BYTES = 64
STAT_BYTES = 8


def hoeffding_bound(value_range, delta, n):
    """Confidence radius eps = sqrt(R^2 * ln(1/delta) / (2n)).

    Strictly decreasing in n; raises ValueError on non-positive R or n or a
    delta outside (0, 1).
    """
    if value_range <= 0:
        raise ValueError(f"value range must be positive, got {value_range!r}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n!r}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1), got {delta!r}")
    return math.sqrt(value_range * value_range * math.log(1.0 / delta) / (2.0 * n))


def _entropy(counts, total):
    if total <= 0.0:
        return 0.0
    h = 0.0
    for c in counts:
        if c > 0.0:
            p = c / total
            h -= p * math.log2(p)
    return h


def _argmax(seq):
    best = 0
    best_v = seq[0]
    for i in range(1, len(seq)):
        v = seq[i]
        if v > best_v:
            best_v = v
            best = i
    return best


def _normal_cdf(x, mean, std):
    return 0.5 * (1.0 + math.erf((x - mean) / (std * _SQRT2)))


class _NominalObs:
    """Per-class value counts for one nominal attribute."""

    __slots__ = ("rows", "totals")

    def __init__(self, n_classes, n_values):
        self.rows = [[0.0] * n_values for _ in range(n_classes)]
        self.totals = [0.0] * n_classes

    def update(self, value, label):
        self.rows[label][int(value)] += 1.0
        self.totals[label] += 1.0

    def log_likelihood(self, value, label):
        row = self.rows[label]
        return math.log((row[int(value)] + 1.0) / (self.totals[label] + len(row)))

    def stat_slots(self):
        return len(self.rows) * len(self.rows[0]) + len(self.totals)


class _GaussianObs:
    """Per-class Welford mean/variance plus the observed value range."""

    __slots__ = ("ns", "means", "m2s", "lo", "hi")

    def __init__(self, n_classes):
        self.ns = [0.0] * n_classes
        self.means = [0.0] * n_classes
        self.m2s = [0.0] * n_classes
        self.lo = math.inf
        self.hi = -math.inf

    def update(self, value, label):
        if value < self.lo:
            self.lo = value
        if value > self.hi:
            self.hi = value
        n = self.ns[label] + 1.0
        self.ns[label] = n
        mean = self.means[label]
        delta = value - mean
        mean += delta / n
        self.means[label] = mean
        self.m2s[label] += delta * (value - mean)

    def variance(self, label):
        n = self.ns[label]
        if n < 2.0:
            return 0.0
        return self.m2s[label] / (n - 1.0)

    def log_likelihood(self, value, label):
        n = self.ns[label]
        if n == 0.0:
            return _LOG_EPS
        var = self.variance(label)
        if var < 1e-12:
            return 0.0 if abs(value - self.means[label]) < 1e-9 else _LOG_EPS
        diff = value - self.means[label]
        return -0.5 * (_LOG_2PI + math.log(var) + diff * diff / var)

    def weight_below(self, threshold, label):
        """Estimated class weight with attribute value <= threshold."""
        n = self.ns[label]
        if n == 0.0:
            return 0.0
        var = self.variance(label)
        if var < 1e-12:
            return n if self.means[label] <= threshold else 0.0
        return n * _normal_cdf(threshold, self.means[label], math.sqrt(var))

    def stat_slots(self):
        return 3 * len(self.ns) + 2


def _make_observers(nom_sizes, n_classes):
    return [
        _NominalObs(n_classes, size) if size is not None else _GaussianObs(n_classes)
        for size in nom_sizes
    ]


def _nb_log_scores(counts, observers, values):
    """Per-class log(prior count) + sum of attribute log-likelihoods.

    Classes with zero count score -inf.  Scores are unnormalized; argmax is
    the NB prediction, and exp-normalizing yields posteriors.
    """
    scores = []
    for c, count in enumerate(counts):
        if count <= 0.0:
            scores.append(-math.inf)
            continue
        s = math.log(count)
        for a, obs in enumerate(observers):
            s += obs.log_likelihood(values[a], c)
        scores.append(s)
    return scores


class _Node:
    """Tree node; ``children is None`` marks a leaf."""

    __slots__ = (
        "children", "split_attr", "split_value",
        "counts", "obs", "weight", "last_eval_weight", "nb_correct", "mc_correct",
    )

    def __init__(self, counts):
        self.children = None
        self.split_attr = -1
        self.split_value = None
        self.counts = counts
        self.obs = None
        self.weight = sum(counts)
        self.last_eval_weight = self.weight
        self.nb_correct = 0.0
        self.mc_correct = 0.0


class StreamLearner(StreamEstimator):
    """Shared surface for the incremental classifiers."""

    def partial_fit(self, values, label):
        raise NotImplementedError

    def predict(self, values):
        raise NotImplementedError

    def deep_copy(self):
        return copy.deepcopy(self)

    def size_estimate(self):
        raise NotImplementedError

    def _check_values(self, values):
        if len(values) != self._n_attrs:
            raise ValueError(
                f"expected {self._n_attrs} attribute values, got {len(values)}"
            )

    def _check_label(self, label):
        if not 0 <= label < self._n_classes:
            raise ValueError(f"label index {label} out of range")


class HoeffdingTreeClassifier(StreamLearner):
    """Incremental decision tree split-gated by the Hoeffding bound.

    Leaves keep per-class counts plus per-attribute observers (value counts
    for nominal attributes, per-class Gaussians for numeric ones).  Every
    ``grace_period`` instances a leaf compares the two best information
    gains: it splits when their gap exceeds the Hoeffding bound for range
    log2(n_classes), or when the bound has shrunk below ``tie_threshold``.
    Leaf prediction is adaptive: naive Bayes over the leaf statistics once
    its running accuracy beats the majority class, else the majority class.
    Untrained leaves predict class index 0.
    """

    def __init__(self, schema, grace_period=200, split_confidence=1e-7,
                 tie_threshold=0.05, record_splits=False):
        self.schema = schema
        self.grace_period = grace_period
        self.split_confidence = split_confidence
        self.tie_threshold = tie_threshold
        self.record_splits = record_splits
        self._n_classes = schema.n_classes
        self._n_attrs = schema.n_attributes
        self._nom_sizes = schema.nominal_sizes()
        self._range = math.log2(self._n_classes)
        self._root = _Node([0.0] * self._n_classes)
        self.n_nodes = 1
        self.split_log = []

    def _route(self, values):
        node = self._root
        while node.children is not None:
            if node.split_value is None:
                node = node.children[int(values[node.split_attr])]
            elif values[node.split_attr] <= node.split_value:
                node = node.children[0]
            else:
                node = node.children[1]
        return node

    def predict(self, values):
        self._check_values(values)
        node = self._route(values)
        counts = node.counts
        if node.weight <= 0.0:
            return 0
        if node.nb_correct > node.mc_correct and node.obs is not None:
            return _argmax(_nb_log_scores(counts, node.obs, values))
        return _argmax(counts)

    def partial_fit(self, values, label):
        self._check_values(values)
        self._check_label(label)
        node = self._route(values)
        counts = node.counts
        if node.weight > 0.0:
            if _argmax(counts) == label:
                node.mc_correct += 1.0
            if node.obs is not None:
                nb_pred = _argmax(_nb_log_scores(counts, node.obs, values))
            else:
                nb_pred = 0
            if nb_pred == label:
                node.nb_correct += 1.0
        obs = node.obs
        if obs is None:
            obs = node.obs = _make_observers(self._nom_sizes, self._n_classes)
        counts[label] += 1.0
        node.weight += 1.0
        for a, ob in enumerate(obs):
            ob.update(values[a], label)
        if node.weight - node.last_eval_weight >= self.grace_period:
            self._attempt_split(node)
        return self

    def _attempt_split(self, node):
        node.last_eval_weight = node.weight
        counts = node.counts
        active = sum(1 for c in counts if c > 0.0)
        if active < 2:
            return
        h0 = _entropy(counts, node.weight)
        best_gain = 0.0
        second_gain = 0.0
        best_attr = -1
        best_threshold = None
        best_children = None
        for attr, obs in enumerate(node.obs):
            if isinstance(obs, _NominalObs):
                gain, children = self._nominal_gain(obs, h0)
                threshold = None
            else:
                gain, threshold, children = self._numeric_gain(obs, h0)
            if gain > best_gain:
                second_gain = best_gain
                best_gain = gain
                best_attr = attr
                best_threshold = threshold
                best_children = children
            elif gain > second_gain:
                second_gain = gain
        if best_attr < 0 or best_gain <= 1e-10:
            return
        eps = hoeffding_bound(self._range, self.split_confidence, node.weight)
        if not (best_gain - second_gain > eps or eps < self.tie_threshold):
            return
        if self.record_splits:
            self.split_log.append({
                "attr": best_attr,
                "threshold": best_threshold,
                "best_gain": best_gain,
                "second_gain": second_gain,
                "epsilon": eps,
                "tie_threshold": self.tie_threshold,
                "counts": list(counts),
                "observers": copy.deepcopy(node.obs),
                "weight": node.weight,
            })
        node.children = [_Node(dist) for dist in best_children]
        node.split_attr = best_attr
        node.split_value = best_threshold
        node.counts = None
        node.obs = None
        self.n_nodes += len(best_children)

    def _nominal_gain(self, obs, h0):
        rows = obs.rows
        n_values = len(rows[0])
        n_classes = len(rows)
        total = sum(obs.totals)
        if total <= 0.0:
            return 0.0, None
        post = 0.0
        children = []
        for v in range(n_values):
            dist = [rows[c][v] for c in range(n_classes)]
            n_v = sum(dist)
            children.append(dist)
            if n_v > 0.0:
                post += (n_v / total) * _entropy(dist, n_v)
        return h0 - post, children

    def _numeric_gain(self, obs, h0):
        lo, hi = obs.lo, obs.hi
        if not hi > lo:
            return 0.0, None, None
        ns = obs.ns
        n_classes = len(ns)
        total = sum(ns)
        best_gain = 0.0
        best_threshold = None
        best_children = None
        step = (hi - lo) / 11.0
        for i in range(1, 11):
            t = lo + step * i
            below = [obs.weight_below(t, c) for c in range(n_classes)]
            above = [ns[c] - below[c] for c in range(n_classes)]
            w_below = sum(below)
            w_above = total - w_below
            if w_below < 1e-12 or w_above < 1e-12:
                continue
            post = (w_below / total) * _entropy(below, w_below)
            post += (w_above / total) * _entropy(above, w_above)
            gain = h0 - post
            if gain > best_gain:
                best_gain = gain
                best_threshold = t
                best_children = [below, above]
        return best_gain, best_threshold, best_children

    def size_estimate(self):
        """NODE_BYTES per node + STAT_BYTES per stored statistic slot.

        Leaf slots: n_classes counts + 2 adaptive counters + observer slots
        (nominal: n_classes * n_values + n_classes totals; numeric:
        3 * n_classes + 2 range bounds).  Split nodes count 1 slot.
        """
        total_nodes = 0
        total_slots = 0
        stack = [self._root]
        while stack:
            node = stack.pop()
            total_nodes += 1
            if node.children is None:
                total_slots += len(node.counts) + 2
                if node.obs is not None:
                    for ob in node.obs:
                        total_slots += ob.stat_slots()
            else:
                total_slots += 1
                stack.extend(node.children)
        return total_nodes * NODE_BYTES + total_slots * STAT_BYTES


class NaiveBayesClassifier(StreamLearner):
    """Flat incremental naive Bayes over the schema's attributes."""

    def __init__(self, schema):
        self.schema = schema
        self._n_classes = schema.n_classes
        self._n_attrs = schema.n_attributes
        self._counts = [0.0] * self._n_classes
        self._obs = _make_observers(schema.nominal_sizes(), self._n_classes)

    def partial_fit(self, values, label):
        self._check_values(values)
        self._check_label(label)
        self._counts[label] += 1.0
        for a, ob in enumerate(self._obs):
            ob.update(values[a], label)
        return self

    def class_log_scores(self, values):
        return _nb_log_scores(self._counts, self._obs, values)

    def predict(self, values):
        self._check_values(values)
        if sum(self._counts) <= 0.0:
            return 0
        return _argmax(self.class_log_scores(values))

    def size_estimate(self):
        slots = len(self._counts) + sum(ob.stat_slots() for ob in self._obs)
        return NODE_BYTES + slots * STAT_BYTES


class PerceptronClassifier(StreamLearner):
    """One-vs-all perceptron, one-hot encoded nominals, learning rate 1.0."""

    def __init__(self, schema, learning_rate=1.0):
        self.schema = schema
        self.learning_rate = learning_rate
        self._n_classes = schema.n_classes
        self._n_attrs = schema.n_attributes
        self._nom_sizes = schema.nominal_sizes()
        self._dims = sum(s if s is not None else 1 for s in self._nom_sizes) + 1
        self._weights = [[0.0] * self._dims for _ in range(self._n_classes)]

    def _encode(self, values):
        x = [0.0] * self._dims
        pos = 0
        for i, size in enumerate(self._nom_sizes):
            if size is None:
                x[pos] = values[i]
                pos += 1
            else:
                x[pos + int(values[i])] = 1.0
                pos += size
        x[-1] = 1.0
        return x

    def predict(self, values):
        self._check_values(values)
        x = self._encode(values)
        scores = [
            sum(w * xi for w, xi in zip(row, x)) for row in self._weights
        ]
        return _argmax(scores)

    def partial_fit(self, values, label):
        self._check_values(values)
        self._check_label(label)
        pred = self.predict(values)
        if pred != label:
            x = self._encode(values)
            eta = self.learning_rate
            w_true = self._weights[label]
            w_pred = self._weights[pred]
            for i, xi in enumerate(x):
                if xi != 0.0:
                    w_true[i] += eta * xi
                    w_pred[i] -= eta * xi
        return self

    def size_estimate(self):
        return NODE_BYTES + self._n_classes * self._dims * STAT_BYTES


LEARNERS = {
    "hoeffding_nb": HoeffdingTreeClassifier,
    "naive_bayes": NaiveBayesClassifier,
    "perceptron": PerceptronClassifier,
}


def make_learner(kind, schema, **params):
    """Build a learner from a registry name or a factory callable."""
    if callable(kind):
        return kind(schema)
    try:
        cls = LEARNERS[kind]
    except KeyError:
        raise ValueError(
            f"unknown learner {kind!r}; expected one of {sorted(LEARNERS)}"
        ) from None
    return cls(schema, **params)
