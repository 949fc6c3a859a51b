"""Deep recurrent sequence models with exact BPTT and a reproducible trainer.

The library covers four recurrent families (conventional, deep-transition,
deep-output + transition, stacked), next-symbol training for text and
piano-roll corpora, the full initialization and SGD recipe, and a
finite-difference oracle for gradient verification.
"""

from .data import (PITCH_DIMS, SubseqChunk, TextCorpus, Vocabulary,
                   iter_subsequences, load_pianoroll, load_text)
from .errors import ConfigurationError, DataFormatError, NumericError
from .grad import (bptt, clip_gradients, finite_difference_grad,
                   global_grad_norm, gradient_check)
from .init import (INIT_PRESETS, InitPreset, init_model, rescale_to_unit_spectral,
                   sparse_init, warm_start)
from .linalg import (Nonlinearity, affine, apply, gaussian_matrix,
                     largest_singular_value, softmax)
from .metrics import MetricReport, evaluate, evaluate_chunks
from .model import (ARCHITECTURES, ForwardResult, HiddenState, ModelConfig,
                    ParamSet, build, forward, plus_op, predict_op,
                    step_output, step_transition)
from .optimize import (TrainLog, TrainPlan, lr_halving_step, lr_inverse,
                       perturb_weights, sgd_train, validation_nll)
from .presets import PRESETS, DatasetPreset, get_preset
from .rng import Rng

__version__ = "0.1.0"

__all__ = [
    "ARCHITECTURES", "ConfigurationError", "DataFormatError", "DatasetPreset",
    "ForwardResult", "HiddenState", "INIT_PRESETS", "InitPreset",
    "MetricReport", "ModelConfig", "Nonlinearity", "NumericError", "ParamSet",
    "PITCH_DIMS", "PRESETS", "Rng", "SubseqChunk", "TextCorpus", "TrainLog",
    "TrainPlan", "Vocabulary", "affine", "apply", "bptt", "build",
    "clip_gradients", "evaluate", "evaluate_chunks", "finite_difference_grad",
    "forward", "gaussian_matrix", "get_preset", "global_grad_norm",
    "gradient_check", "init_model", "iter_subsequences",
    "largest_singular_value", "load_pianoroll", "load_text", "lr_halving_step",
    "lr_inverse", "perturb_weights", "plus_op", "predict_op",
    "rescale_to_unit_spectral", "sgd_train", "softmax", "sparse_init",
    "step_output", "step_transition", "validation_nll", "warm_start",
]
