"""anobench: synthesize anomaly-detection benchmarks from labeled tabular data,
score them with a detector suite, and evaluate with null-calibrated metrics."""

__version__ = "0.1.0"
