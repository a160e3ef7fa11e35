"""Fuzzy learner profiles from speech-act logs, with Eros/PCA similarity and clustering."""

__version__ = "0.1.0"
