"""Category-to-scenery human-object interaction recognition on a numpy autodiff engine."""

from .data import ScenarioSpec, default_scenario, hard_scenario, load_dataset, make_folds, save_dataset, synthesize
from .metrics import F1Report, Segment, aggregate_folds, f1_at_k, f1_oracle, iou, timeline_from_labels
from .model import CatsModel, ModelConfig
from .scene import SceneSequence
from .tensor import Tensor, finite_difference_check

__version__ = "0.1.0"

__all__ = [
    "ScenarioSpec", "default_scenario", "hard_scenario", "load_dataset", "make_folds", "save_dataset", "synthesize",
    "F1Report", "Segment", "aggregate_folds", "f1_at_k", "f1_oracle", "iou", "timeline_from_labels",
    "CatsModel", "ModelConfig", "SceneSequence", "Tensor", "finite_difference_check",
]
