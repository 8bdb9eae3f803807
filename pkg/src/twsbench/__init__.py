"""
twsbench - benchmarking engine for basin-scale terrestrial water storage (TWS)
prediction: linear baselines, tree ensembles, LSTM and TFT-lite sequence models,
evaluation statistics and experiment pipelines.
"""

__version__ = "0.1.0"
