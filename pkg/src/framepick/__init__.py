"""Peak picking for mass spectra with sparse frame multipliers.

Consecutive overlapping slices of a spectrum are compared in a Gabor or
constant-Q filterbank frame. The closed-form sparse multiplier mask that
maps one slice onto the next deviates from 1 where a peak enters or
leaves, and these deviations form a per-bin peak indicator.
"""

from .batch import DatasetPick, SpotError, pick_dataset, tune_lambda_dataset
from .config import RunConfig
from .data import DatasetGrid, Spectrum
from .errors import (
    FormatError,
    FramePickError,
    InsufficientLengthError,
    ParameterError,
    UnattainableTargetError,
    ValidationError,
)
from .evaluation import EvalReport, evaluate_many, match_peaks, score
from .frames import (
    CustomFilterbank,
    FilterbankFrame,
    GaborFrame,
    analyze_filterbank,
    analyze_gabor,
    frame_bounds,
    mad_noise_sigma,
)
from .multiplier import estimate_mask, estimate_mask_spatial, mask_objective
from .peakpick import (
    LambdaPolicy,
    Peak,
    SliceConfig,
    count_peaks,
    extract_peaks,
    pick_spectrum,
    resolve_lambda,
    slice_spectrum,
    tune_lambda,
)
from .preprocess import tic_normalize, tophat_baseline
from .render import render_mz_image
from .spatial import NeighborhoodSpec, kernel_weights, resolve_neighbors
from .synth import PhantomSpec, SynthSpec, synth_phantom, synth_spectrum

__version__ = "0.1.0"
