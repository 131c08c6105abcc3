"""Nonparallel support vector classifiers: K-NPSVC++, OVR TWSVM, D-NPSVC++."""

from ._core import Model, NpsvcError, fit, load_dataset, make_blobs

__all__ = ["Model", "NpsvcError", "fit", "load_dataset", "make_blobs"]
