"""Rebalancing toolkit for imbalanced binary classification.

SMOTE-family oversamplers, ENN and Tomek cleaning, same-class Mixup and
their STEM composition, a small classifier zoo with top-3 voting, GLCM
texture features, and a seeded experiment runner.
"""

from .errors import RebalanceError
from .tabular import Dataset, load_csv, save_csv, stratified_split

__all__ = ["Dataset", "RebalanceError", "load_csv", "save_csv", "stratified_split"]
__version__ = "0.1.0"
