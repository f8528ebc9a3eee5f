"""Fourier-domain forensics for detecting GAN-generated images.

Generators that upsample feature maps leave periodic replicas in the
frequency domain. This package turns images into normalized
log-magnitude spectra, summarizes them with radial statistics and a
pooled grid, and trains a small logistic-regression detector on top,
alongside a raw-pixel baseline for comparison.
"""

from .augment import AugmentConfig, affine_sample, random_augment, reflect_index
from .dataset import (
    DatasetManifest,
    ManifestEntry,
    load_manifest,
    save_manifest,
    split_manifest,
    synth_fake,
    synth_real,
)
from .features import (
    FeatureVector,
    RadialProfile,
    band_energy_ratio,
    extract_freq_features,
    extract_spatial_features,
    pool_grid,
    radial_profile,
    replica_peak_score,
    spectral_slope,
)
from .imagio import ImageTensor, load_image, resize_bilinear, save_image, to_grayscale
from .metrics import (
    EvalReport,
    accuracy_f1,
    average_precision,
    confusion,
    evaluate,
    roc_auc,
)
from .model import (
    LinearModel,
    TrainConfig,
    TrainHistory,
    bce_loss,
    fit_standardizer,
    gradient_check,
    load_model,
    predict_proba,
    save_model,
    train,
)
from .spectrum import (
    Spectrum,
    dft2d,
    dft2d_naive,
    fftshift,
    log_magnitude,
    normalize01,
    transform_image,
)

__version__ = "0.1.0"
