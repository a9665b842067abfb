"""Adversarial representation learning with a kernel dependence penalty.

A small float64 autodiff engine carries three training objectives: a plain
adversarial game, the recognition-head variant, and the variant that directly
maximises a kernel dependence measure between generated images and their
latent codes.
"""

from .autodiff import (Adam, Parameter, ShapeError, Tensor, backward,
                       backward_into, grad_check)
from .dataio import (DataSpec, ImageDataset, load_dataset, parse_idx_images,
                     parse_idx_labels, synth_gauss_mixture, synth_squares)
from .evaluation import (ImageGrid, categorical_distinctness, eval_hsic,
                         traversal_grid, write_pgm)
from .hsic import HsicConfig, hsic_biased, hsic_oracle, median_heuristic
from .latents import LatentBatch, LatentSpec, Rng, concat_code, sample_latents, traversal_batch
from .networks import Discriminator, Generator
from .training import (LossReport, TrainConfig, Trainer, TrainingDiverged,
                       calibrate_lambda, magnitude_report, train)

__all__ = [
    "Adam", "Parameter", "ShapeError", "Tensor", "backward", "backward_into",
    "grad_check", "DataSpec", "ImageDataset", "load_dataset",
    "parse_idx_images", "parse_idx_labels", "synth_gauss_mixture",
    "synth_squares", "ImageGrid", "categorical_distinctness", "eval_hsic",
    "traversal_grid", "write_pgm", "HsicConfig", "hsic_biased", "hsic_oracle",
    "median_heuristic", "LatentBatch", "LatentSpec", "Rng", "concat_code",
    "sample_latents", "traversal_batch", "Discriminator", "Generator",
    "LossReport", "TrainConfig", "Trainer", "TrainingDiverged",
    "calibrate_lambda", "magnitude_report", "train",
]

__version__ = "0.1.0"
