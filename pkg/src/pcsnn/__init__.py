"""First-spike integrate-and-fire networks trained by predictive coding, with a backprop baseline."""

from .bp import bp_deltas, bp_loss, bp_train_epoch, bp_train_sample, bp_weight_update
from .checkpoint import load_checkpoint, save_checkpoint
from .config import ExperimentConfig, PRESETS, dump_config, parse_config
from .core import (
    LayerActivations,
    NetworkParams,
    SimParams,
    Topology,
    decide,
    forward,
    predict,
    simulate_layer,
)
from .datasets import Dataset, DatasetSource, Event, Sample, build_dataset
from .encoding import EncodingParams, encode_events, encode_image, from_raster, to_raster
from .errors import ConfigError, FormatError, InputError
from .pc import (
    PCConfig,
    dynamic_targets,
    eval_network,
    free_energy,
    inference_step,
    init_weights,
    train_epoch,
    train_sample,
    weight_gradient,
)

__version__ = "0.1.0"
