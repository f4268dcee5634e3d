"""Perspective summarization toolkit: ground-truth-scored test sets, metric
benchmarking, Bradley-Terry method ranking, and generation pipelines."""

__version__ = "0.1.0"
