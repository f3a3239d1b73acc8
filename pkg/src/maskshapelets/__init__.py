"""Multivariate shapelet learning with per-channel masks."""

from .baselines import NearestNeighborDTW, dtw_distance, nn_dtw_classify, train_unmasked
from .dataset import (DatasetError, Instance, TimeSeriesDataset, load_dataset, save_dataset,
                      stratified_kfold, znormalize_channels)
from .distance import DistanceResult, masked_min_distance
from .evaluation import error_rate, export_masks, grid_search
from .gradients import finite_difference_oracle, gradcheck, instance_gradients
from .model import ShapeletModel, forward, load_model, predict, save_model, total_objective
from .synthgen import SynthConfig, default_pattern_bank, generate
from .trainer import NumericalError, TrainConfig, train

__version__ = "0.1.0"
