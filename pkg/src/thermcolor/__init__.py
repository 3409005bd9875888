"""Numerical core for nighttime thermal to daytime colour translation.

Pseudo-label distillation, memory-guided sample selection, the translation
loss terms and the evaluation metrics, all as plain numpy functions.
"""

from .arraycore import UNLABELED, InvalidInputError
from .config import RunConfig, Vocabulary, load_config

__all__ = ["UNLABELED", "InvalidInputError", "RunConfig", "Vocabulary", "load_config"]
__version__ = "0.1.0"
