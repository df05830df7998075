"""HDP-HMM with local transitions, its vanilla and sticky relatives, and a Gibbs sampler.

The sampler uses a jump-process augmentation with failed transitions so that
every block is conditionally conjugate or log-concave.
"""

from .checkpoint import checkpoint_load, checkpoint_save
from .datagen import CocktailParams, SynthHdpParams, gen_cocktail, gen_hdp_hmm
from .dataio import Dataset, load_dataset
from .errors import (CheckpointError, ChecksumError, DivergenceError, HdpLtError, InputError,
                     IntegrityError, MigrationError, NumericError, ParameterError)
from .metrics import f1_binary, hamming_metric
from .model import (ChainResult, ChainState, EmissionConfig, ModelConfig, averaged_state_matrix,
                    fit, gibbs_sweep, init_chain, log_joint, run_chain)
from .rand import RandomStream
from .similarity import KernelSpec
from .transitions import HdpHyper

__version__ = "0.1.0"

__all__ = [
    "CheckpointError", "ChecksumError", "ChainResult", "ChainState", "CocktailParams", "Dataset",
    "DivergenceError", "EmissionConfig", "HdpHyper", "HdpLtError", "InputError", "IntegrityError",
    "KernelSpec", "MigrationError", "ModelConfig", "NumericError", "ParameterError",
    "RandomStream", "SynthHdpParams", "averaged_state_matrix", "checkpoint_load",
    "checkpoint_save", "f1_binary", "fit", "gen_cocktail", "gen_hdp_hmm", "gibbs_sweep",
    "hamming_metric", "init_chain", "load_dataset", "log_joint", "run_chain",
]
