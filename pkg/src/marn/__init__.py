"""Multitask balanced and recalibrated network for medical code prediction.

A desk-scale, numpy-backed implementation: a reverse-mode autodiff core,
a clinical-text pipeline with a synthetic-corpus generator, a BiGRU
encoder, a convolutional recalibrated aggregation module, label-aware
attention heads over two coupled code spaces (ICD and CCS), focal-loss
multitask training, evaluation metrics, and diagnostic analyses.
"""

from .autodiff import Tensor, check_gradients

__all__ = ["Tensor", "check_gradients"]

__version__ = "0.1.0"
