"""Networks whose weights or biases are predicted from their own input."""

from .core import Activation, RngStream
from .data import EncodedDataset, load_dataset, parse_csv, percentage_split, preprocess, stratified_kfold
from .estimators import (
    GradientDescentLogisticRegression,
    NaiveBayesClassifier,
    NetworkClassifier,
    SymptomEncoder,
)
from .evaluation import render_report, run_crossval, run_split
from .network import Network, NetworkSpec, TrainConfig, build_arch, gradcheck, train
from .persistence import load, save

__version__ = "0.1.0"

__all__ = [
    "Activation",
    "EncodedDataset",
    "GradientDescentLogisticRegression",
    "NaiveBayesClassifier",
    "Network",
    "NetworkClassifier",
    "NetworkSpec",
    "RngStream",
    "SymptomEncoder",
    "TrainConfig",
    "build_arch",
    "gradcheck",
    "load",
    "load_dataset",
    "parse_csv",
    "percentage_split",
    "preprocess",
    "render_report",
    "run_crossval",
    "run_split",
    "save",
    "stratified_kfold",
    "train",
]
