"""Touch-interaction inference from in-browser motion/orientation sensor streams.

Subpackages cover the full pipeline: ingest (streaming server and trace
store), synth (synthetic trace generation), features (time/frequency
feature extraction), knn and ann (classifiers), evaluate (cross-validation
and reports), cli (command-line entry point).
"""

__version__ = "0.1.0"

from .ann import MlpModel, ScgConfig, SplitSpec, mlp_init, scg_train, split_indices
from .evaluate import (
    ConfusionMatrix,
    EvalReport,
    confusion_from_pairs,
    cross_validate,
    guess_curve,
    write_report,
)
from .features import extract, feature_layout, layout_digest
from .ingest import TraceStore, assemble_session, serve
from .knn import Metric, fit_two_stage, knn_fit, knn_predict, two_stage_predict
from .model import (
    Channel,
    FeatureVector,
    HandMode,
    LabeledTrace,
    SensorEvent,
    TouchAction,
    TraceMeta,
)
from .synth import PROFILES, DeviceProfile, GenSpec, action_spec, digit_spec, gen_dataset

__all__ = [
    "Channel",
    "ConfusionMatrix",
    "DeviceProfile",
    "EvalReport",
    "FeatureVector",
    "GenSpec",
    "HandMode",
    "LabeledTrace",
    "Metric",
    "MlpModel",
    "PROFILES",
    "ScgConfig",
    "SensorEvent",
    "SplitSpec",
    "TouchAction",
    "TraceMeta",
    "TraceStore",
    "action_spec",
    "assemble_session",
    "confusion_from_pairs",
    "cross_validate",
    "digit_spec",
    "extract",
    "feature_layout",
    "fit_two_stage",
    "gen_dataset",
    "guess_curve",
    "knn_fit",
    "knn_predict",
    "layout_digest",
    "mlp_init",
    "scg_train",
    "serve",
    "split_indices",
    "two_stage_predict",
    "write_report",
]
