"""driftpool: drift-aware stream classification with classifier reuse."""

from .base import (
    ConfigError,
    DriftpoolError,
    ParseError,
    RowError,
    SchemaError,
    StreamError,
)
from .drift import (
    DETECTORS,
    DriftSignal,
    HddmADetector,
    OracleDetector,
    RddmDetector,
    make_detector,
)
from .evaluation import (
    ExperimentPlan,
    RunResult,
    build_framework,
    build_plan,
    build_stream,
    kappa,
    run_plan,
    run_prequential,
    summarize,
)
from .generators import (
    ConceptSchedule,
    GeneratorSpec,
    NoiseSpec,
    apply_noise,
    make_generator,
    scheduled_stream,
)
from .learners import (
    LEARNERS,
    HoeffdingTreeClassifier,
    NaiveBayesClassifier,
    PerceptronClassifier,
    hoeffding_bound,
    make_learner,
)
from .meta import (
    FRAMEWORKS,
    ClassifierRecord,
    CpfClassifier,
    DriftResetClassifier,
    EcpfClassifier,
    SimilarityMatrix,
    make_framework,
)
from .stream import (
    AttributeSpec,
    Instance,
    ListStream,
    Schema,
    StreamSource,
    open_file_stream,
    validate_instance,
)

__version__ = "0.1.0"

__all__ = [
    "AttributeSpec", "ClassifierRecord", "ConceptSchedule", "ConfigError",
    "CpfClassifier", "DETECTORS", "DriftpoolError", "DriftResetClassifier",
    "DriftSignal", "EcpfClassifier", "ExperimentPlan", "FRAMEWORKS",
    "GeneratorSpec", "HddmADetector", "HoeffdingTreeClassifier", "Instance",
    "LEARNERS", "ListStream", "NaiveBayesClassifier", "NoiseSpec",
    "OracleDetector", "ParseError", "PerceptronClassifier", "RddmDetector",
    "RowError", "RunResult", "Schema", "SchemaError", "SimilarityMatrix",
    "StreamError", "StreamSource", "apply_noise", "build_framework",
    "build_plan", "build_stream", "hoeffding_bound", "kappa",
    "make_detector", "make_framework", "make_generator", "make_learner",
    "open_file_stream", "run_plan", "run_prequential", "scheduled_stream",
    "summarize", "validate_instance",
]
