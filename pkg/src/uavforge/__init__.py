"""uavforge: procedural UAV design generation, hover labeling, and a
from-scratch transformer surrogate for filtering the design space."""

__version__ = "0.1.0"

from .catalog import (Catalog, ComponentRecord, bundled_catalog, load_catalog,
                      save_catalog)
from .codec import (EmbeddedSequence, FloatStats, Token, TokenEmbedder,
                    dumps_sequence, flatten, loads_sequence, parse)
from .design import (DesignNode, NodeKind, ValidationReport, count_components,
                     expand_symmetry, fuselage, hub, prop_arm, root_battery,
                     symmetric_quadcopter, validate_design, wing, with_battery)
from .errors import (CalibrationError, CatalogError, CheckpointError,
                     ConfigError, DatasetError, DesignPipelineError,
                     InvalidDesignError, SequenceParseError,
                     TrainingDivergedError)
from .generator import GeneratorConfig, sample_batch, sample_design
from .physics import (DEFAULT_CONSTANTS, HoverResult, PhysicsConstants,
                      evaluate_hover, label_design, mass_rollup,
                      required_rotor_speed)
from .pipeline import (EvalReport, FilterReport, KeptDesign, LabeledDataset,
                       VerificationReport, build_dataset, choose_threshold,
                       estimate_compute_savings, evaluate, filter_designs,
                       verify_kept)
from .surrogate import (ModelConfig, SurrogateModel, load_checkpoint,
                        save_checkpoint)
from .training import EpochStats, TrainConfig, train

__all__ = [
    "__version__",
    "Catalog", "ComponentRecord", "bundled_catalog", "load_catalog", "save_catalog",
    "EmbeddedSequence", "FloatStats", "Token", "TokenEmbedder",
    "dumps_sequence", "flatten", "loads_sequence", "parse",
    "DesignNode", "NodeKind", "ValidationReport", "count_components",
    "expand_symmetry", "fuselage", "hub", "prop_arm", "root_battery",
    "symmetric_quadcopter", "validate_design", "wing", "with_battery",
    "CalibrationError", "CatalogError", "CheckpointError", "ConfigError",
    "DatasetError", "DesignPipelineError", "InvalidDesignError",
    "SequenceParseError", "TrainingDivergedError",
    "GeneratorConfig", "sample_batch", "sample_design",
    "DEFAULT_CONSTANTS", "HoverResult", "PhysicsConstants", "evaluate_hover",
    "label_design", "mass_rollup", "required_rotor_speed",
    "EvalReport", "FilterReport", "KeptDesign", "LabeledDataset",
    "VerificationReport", "build_dataset", "choose_threshold",
    "estimate_compute_savings", "evaluate", "filter_designs", "verify_kept",
    "ModelConfig", "SurrogateModel", "load_checkpoint", "save_checkpoint",
    "EpochStats", "TrainConfig", "train",
]
