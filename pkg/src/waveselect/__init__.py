"""Learning-based selection of multi-numerology 5G waveform parameters.

Random cell scenarios are labelled by evaluating every candidate waveform
class with a semi-analytical link model; classifiers then learn to predict
the best class from seven cell-level features.
"""

from .numerology import LABELS, NUM_CLASSES, WaveformClass, class_table
from .scenario import CellScenario, ScenarioConfig, Service, generate_scenarios
from .metrics import MetricConfig, MetricTriple, cell_metrics, plan_allocation
from .labeler import LabelerConfig, balance_dataset, label_scenario
from .config import PipelineConfig, load_config

__version__ = "0.1.0"

__all__ = [
    "LABELS", "NUM_CLASSES", "WaveformClass", "class_table",
    "CellScenario", "ScenarioConfig", "Service", "generate_scenarios",
    "MetricConfig", "MetricTriple", "cell_metrics", "plan_allocation",
    "LabelerConfig", "balance_dataset", "label_scenario",
    "PipelineConfig", "load_config",
]
