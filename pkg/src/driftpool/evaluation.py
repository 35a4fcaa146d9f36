"""Prequential evaluation, metrics, and experiment orchestration.

Every instance is classified first (scored into the confusion matrix) and
only then handed to the framework for training, inside one timed
``process`` call; the clock covers framework work only, never stream
generation.  Plans are grids of (framework config x stream config x seed)
cells; cells are independent and may run in parallel.
"""

import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from statistics import mean, stdev

from .base import ConfigError, SchemaError, mix_seed
from .drift import DriftSignal
from .generators import ConceptSchedule, NoiseSpec, apply_noise, scheduled_stream
from .meta import make_framework
from .stream import open_file_stream

_NOISE_SALT = 0x4015E


def kappa(confusion):
    """Chance-corrected agreement (p0 - pc) / (1 - pc) for a k x k matrix.

    Rows are true labels, columns predictions.  Returns 0 in the degenerate
    single-class case (pc == 1); raises ValueError on an empty matrix.
    """
    n = sum(sum(row) for row in confusion)
    if n <= 0:
        raise ValueError("confusion matrix is empty")
    k = len(confusion)
    p0 = sum(confusion[i][i] for i in range(k)) / n
    pc = 0.0
    for i in range(k):
        row_total = sum(confusion[i])
        col_total = sum(confusion[j][i] for j in range(k))
        pc += (row_total / n) * (col_total / n)
    if pc >= 1.0:
        return 0.0
    return (p0 - pc) / (1.0 - pc)


_CSV_COLUMNS = (
    "plan_index", "framework", "stream", "seed", "instances", "accuracy",
    "kappa", "runtime_ms", "peak_memory_bytes", "drifts_detected", "status",
)


@dataclass
class RunResult:
    """Per-run metrics; ``status`` is 'ok' or an error marker."""

    plan_index: int = 0
    framework: str = ""
    stream: str = ""
    seed: int = 0
    instances: int = 0
    accuracy: float = 0.0
    kappa: float = 0.0
    runtime_ms: float = 0.0
    peak_memory_bytes: int = 0
    drifts_detected: int = 0
    status: str = "ok"
    max_collection_size: int = 0  # diagnostic, not part of the CSV schema
    trace_events: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def csv_row(self):
        return [getattr(self, c) for c in _CSV_COLUMNS]

    def non_timing_fields(self):
        """Everything a deterministic re-run must reproduce bit for bit."""
        return (
            self.plan_index, self.framework, self.stream, self.seed,
            self.instances, self.accuracy, self.kappa,
            self.peak_memory_bytes, self.drifts_detected, self.status,
        )


def run_prequential(framework, source, *, plan_index=0, framework_name="",
                    stream_name="", seed=0, memory_sample_every=10000):
    """Test-then-train a framework over a finite stream.

    The wall clock accumulates around ``framework.process`` calls only.
    Peak memory is the framework's own size estimate sampled at every
    detected drift and every ``memory_sample_every`` instances.
    """
    if source.schema != framework.schema:
        raise SchemaError("stream schema does not match the framework's schema")
    k = source.schema.n_classes
    confusion = [[0] * k for _ in range(k)]
    next_item = source.next_item
    process = framework.process
    size_estimate = framework.size_estimate
    clock = time.perf_counter_ns
    drift = DriftSignal.DRIFT
    elapsed = 0
    n = 0
    peak = 0
    while True:
        item = next_item()
        if item is None:
            break
        instance = item[0]
        t0 = clock()
        pred, signal = process(instance)
        elapsed += clock() - t0
        confusion[instance.label][pred] += 1
        n += 1
        if signal is drift or n % memory_sample_every == 0:
            size = size_estimate()
            if size > peak:
                peak = size
    if n == 0:
        raise ValueError("cannot evaluate on an empty stream")
    size = size_estimate()
    if size > peak:
        peak = size
    accuracy = sum(confusion[i][i] for i in range(k)) / n
    return RunResult(
        plan_index=plan_index,
        framework=framework_name or type(framework).__name__,
        stream=stream_name or getattr(source.schema, "name", "stream"),
        seed=seed,
        instances=n,
        accuracy=accuracy,
        kappa=kappa(confusion),
        runtime_ms=elapsed / 1e6,
        peak_memory_bytes=peak,
        drifts_detected=framework.drifts_detected,
        max_collection_size=getattr(framework, "max_collection_size", 0),
        trace_events=list(getattr(framework, "trace_events", ())),
    )


# -- config -> objects --------------------------------------------------------

_STREAM_KEYS = {
    "kind", "family", "concepts", "period", "drifts", "attribute_noise",
    "class_noise", "majority_fraction", "path", "format", "class_column",
    "label",
}

_FRAMEWORK_KEYS = {
    "framework", "learner", "detector", "m", "f", "b_min", "memory_cap",
    "lead", "min_similarity_obs", "detector_params", "learner_params",
    "trace", "label",
}


def _check_keys(config, allowed, what):
    unknown = set(config) - allowed
    if unknown:
        raise ConfigError(f"unknown {what} config keys: {sorted(unknown)}")


def stream_label(config):
    if config.get("label"):
        return config["label"]
    if config.get("kind", "generator") == "file":
        return str(config["path"]).rsplit("/", 1)[-1]
    return config["family"]


def build_stream(config, seed):
    """Build a StreamSource from a plain config dict plus a seed."""
    _check_keys(config, _STREAM_KEYS, "stream")
    kind = config.get("kind", "generator")
    if kind == "file":
        return open_file_stream(
            config["path"],
            format=config.get("format", "arff"),
            class_column=config.get("class_column"),
        )
    if kind != "generator":
        raise ConfigError(f"unknown stream kind {kind!r}")
    for key in ("family", "concepts", "period"):
        if key not in config:
            raise ConfigError(f"generator stream config needs {key!r}")
    schedule = ConceptSchedule(
        tuple(config["concepts"]),
        int(config["period"]),
        int(config.get("drifts", 0)),
    )
    source = scheduled_stream(config["family"], schedule, seed)
    att = float(config.get("attribute_noise", 0.0) or 0.0)
    cls = float(config.get("class_noise", 0.0) or 0.0)
    maj = config.get("majority_fraction")
    if att > 0.0 or cls > 0.0 or maj is not None:
        noise = NoiseSpec(
            attribute_noise=att,
            class_noise=cls,
            majority_fraction=maj,
            seed=mix_seed(seed, _NOISE_SALT),
        )
        source = apply_noise(source, noise)
    return source


def framework_label(config):
    return config.get("label") or config["framework"]


def build_framework(config, schema, stream_config=None):
    """Build a framework from a config dict; oracle positions come from the
    paired generator schedule unless given explicitly."""
    _check_keys(config, _FRAMEWORK_KEYS, "framework")
    kind = config.get("framework")
    if kind not in ("ecpf", "cpf", "baseline"):
        raise ConfigError(f"framework must be ecpf, cpf or baseline, got {kind!r}")
    detector = config.get("detector", "hddm_a")
    detector_params = dict(config.get("detector_params") or {})
    if detector == "oracle":
        if "lead" in config and "lead" not in detector_params:
            detector_params["lead"] = int(config["lead"])
        if "positions" not in detector_params:
            if (
                stream_config is None
                or stream_config.get("kind", "generator") != "generator"
            ):
                raise ConfigError(
                    "oracle detector needs detector_params['positions'] or a "
                    "generator stream config to derive them from"
                )
            period = int(stream_config["period"])
            drifts = int(stream_config.get("drifts", 0))
            detector_params["positions"] = [
                period * (k + 1) for k in range(drifts)
            ]
    params = {
        "learner": config.get("learner", "hoeffding_nb"),
        "detector": detector,
        "detector_params": detector_params,
        "learner_params": config.get("learner_params"),
        "trace": bool(config.get("trace", False)),
    }
    if kind in ("ecpf", "cpf"):
        if "m" in config:
            params["similarity_threshold"] = float(config["m"])
        if "f" in config:
            params["fade_points"] = int(config["f"])
        if "min_similarity_obs" in config:
            params["min_similarity_obs"] = int(config["min_similarity_obs"])
        if config.get("memory_cap") is not None:
            params["memory_cap"] = int(config["memory_cap"])
    if kind == "cpf" and "b_min" in config:
        params["min_buffer"] = int(config["b_min"])
    return make_framework(kind, schema, **params)


# -- experiment plans ---------------------------------------------------------

@dataclass(frozen=True)
class PlanCell:
    plan_index: int
    framework_config: dict
    stream_config: dict
    seed: int


@dataclass
class ExperimentPlan:
    cells: list

    def __len__(self):
        return len(self.cells)


def build_plan(plan_config):
    """Expand {frameworks, streams, repetitions, base_seed} into cells.

    Every repetition gets its own distinct seed (base_seed + repetition).
    """
    allowed = {"frameworks", "streams", "repetitions", "base_seed"}
    _check_keys(plan_config, allowed, "plan")
    frameworks = plan_config.get("frameworks")
    streams = plan_config.get("streams")
    if not frameworks or not streams:
        raise ConfigError("plan needs non-empty 'frameworks' and 'streams' lists")
    repetitions = int(plan_config.get("repetitions", 1))
    if repetitions < 1:
        raise ConfigError("repetitions must be >= 1")
    base_seed = int(plan_config.get("base_seed", 1))
    cells = []
    index = 0
    for fw_config in frameworks:
        for stream_config in streams:
            for rep in range(repetitions):
                cells.append(PlanCell(
                    plan_index=index,
                    framework_config=dict(fw_config),
                    stream_config=dict(stream_config),
                    seed=base_seed + rep,
                ))
                index += 1
    return ExperimentPlan(cells)


def run_cell(cell):
    """Execute one plan cell; failures become a failed-cell marker."""
    try:
        source = build_stream(cell.stream_config, cell.seed)
        framework = build_framework(
            cell.framework_config, source.schema, cell.stream_config
        )
        result = run_prequential(
            framework, source,
            plan_index=cell.plan_index,
            framework_name=framework_label(cell.framework_config),
            stream_name=stream_label(cell.stream_config),
            seed=cell.seed,
        )
    except Exception as exc:  # cell isolation: record, don't abort the plan
        return RunResult(
            plan_index=cell.plan_index,
            framework=framework_label(cell.framework_config),
            stream=stream_label(cell.stream_config),
            seed=cell.seed,
            status=f"error: {exc}",
        )
    result.config = {
        "framework": cell.framework_config,
        "stream": cell.stream_config,
        "seed": cell.seed,
    }
    return result


def run_plan(plan, parallelism=1):
    """Run every cell; results are ordered by plan index regardless of the
    execution order."""
    if not plan.cells:
        raise ConfigError("plan has no cells")
    if parallelism <= 1 or len(plan.cells) == 1:
        return [run_cell(cell) for cell in plan.cells]
    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        results = list(pool.map(run_cell, plan.cells))
    return results


# -- summaries ----------------------------------------------------------------

@dataclass
class GroupSummary:
    framework: str
    stream: str
    n: int
    mean: float
    stdev: float
    mean_rank: float = 0.0


def summarize(results):
    """Per-(framework, stream) accuracy mean/stdev plus mean ranks.

    Ranks are computed per stream from group means (1 = most accurate,
    ties averaged) and averaged across streams per framework.  Failed
    cells are excluded with a warning.
    """
    groups = {}
    for result in results:
        if result.status != "ok":
            warnings.warn(
                f"excluding failed cell {result.plan_index} "
                f"({result.framework}/{result.stream}): {result.status}"
            )
            continue
        groups.setdefault((result.framework, result.stream), []).append(
            result.accuracy
        )
    if not groups:
        raise ValueError("no successful results to summarize")
    summaries = {
        key: GroupSummary(
            framework=key[0],
            stream=key[1],
            n=len(accs),
            mean=mean(accs),
            stdev=stdev(accs) if len(accs) > 1 else 0.0,
        )
        for key, accs in groups.items()
    }
    streams = sorted({stream for _, stream in summaries})
    rank_lists = {}
    for stream in streams:
        members = [s for s in summaries.values() if s.stream == stream]
        members.sort(key=lambda s: -s.mean)
        i = 0
        while i < len(members):
            j = i
            while j + 1 < len(members) and members[j + 1].mean == members[i].mean:
                j += 1
            rank = (i + j) / 2.0 + 1.0  # average rank over the tie run
            for member in members[i : j + 1]:
                rank_lists.setdefault(member.framework, []).append(rank)
            i = j + 1
    mean_ranks = {fw: mean(ranks) for fw, ranks in rank_lists.items()}
    ordered = sorted(summaries.values(), key=lambda s: (s.stream, s.framework))
    for summary in ordered:
        summary.mean_rank = mean_ranks[summary.framework]
    return ordered


# -- CSV emission -------------------------------------------------------------

def write_results_csv(results, fh):
    fh.write(",".join(_CSV_COLUMNS) + "\n")
    for result in results:
        fh.write(",".join(_format_cell(v) for v in result.csv_row()) + "\n")


def read_results_csv(fh):
    header = fh.readline().strip().split(",")
    missing = [c for c in _CSV_COLUMNS if c not in header]
    if missing:
        raise ConfigError(f"results CSV missing columns: {missing}")
    idx = {c: header.index(c) for c in _CSV_COLUMNS}
    results = []
    for line in fh:
        line = line.strip()
        if not line:
            continue
        cells = line.split(",")
        results.append(RunResult(
            plan_index=int(cells[idx["plan_index"]]),
            framework=cells[idx["framework"]],
            stream=cells[idx["stream"]],
            seed=int(cells[idx["seed"]]),
            instances=int(cells[idx["instances"]]),
            accuracy=float(cells[idx["accuracy"]]),
            kappa=float(cells[idx["kappa"]]),
            runtime_ms=float(cells[idx["runtime_ms"]]),
            peak_memory_bytes=int(cells[idx["peak_memory_bytes"]]),
            drifts_detected=int(cells[idx["drifts_detected"]]),
            status=cells[idx["status"]],
        ))
    return results


def write_summary_csv(summaries, fh):
    fh.write("framework,stream,mean,stdev,n,mean_rank\n")
    for s in summaries:
        fh.write(
            f"{s.framework},{s.stream},{_format_cell(s.mean)},"
            f"{_format_cell(s.stdev)},{s.n},{_format_cell(s.mean_rank)}\n"
        )


def _format_cell(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)
