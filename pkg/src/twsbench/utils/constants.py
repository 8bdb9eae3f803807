"""
Domain constants for TWS benchmarking.

Channel names, CSV schemas, split dates, early-stopping constants,
hyperparameter columns and tree-model search grids.
"""

from datetime import date

# Input channels, in the order they appear in every array
DYNAMIC_CHANNELS = ("precip", "temp", "lai", "ssmc")
TARGET = "tws"

STATIC_FEATURES = (
    "elev",
    "slope",
    "sand",
    "silt",
    "clay",
    "forest",
    "crop",
    "area",
    "clim_precip",
    "clim_temp",
    "clim_lai",
)

# Climatology statics and the dynamic channel each one summarizes
CLIMATOLOGY_SOURCES = {
    "clim_precip": "precip",
    "clim_temp": "temp",
    "clim_lai": "lai",
}

DYNAMIC_HEADER = ("basin_id", "date") + DYNAMIC_CHANNELS + (TARGET,)
STATIC_HEADER = ("basin_id",) + STATIC_FEATURES

DATE_FORMAT = "%Y-%m-%d"
FLOAT_FORMAT = "%.17g"

MONTHLY = "monthly"
DAILY = "daily"

STD_FLOOR = 1e-8

# Full record and the two split protocols (inclusive bounds)
RECORD_START = date(2003, 1, 1)
RECORD_END = date(2020, 12, 31)
MONTHLY_LENGTH = 216
DAILY_LENGTH = 6575

LINEAR_SPLIT = {
    "train": (date(2003, 1, 1), date(2015, 12, 31)),
    "test": (date(2016, 1, 1), date(2020, 12, 31)),
}
NEURAL_SPLIT = {
    "train": (date(2003, 1, 1), date(2012, 12, 31)),
    "validation": (date(2013, 1, 1), date(2015, 12, 31)),
    "test": (date(2016, 1, 1), date(2020, 12, 31)),
}
SPLIT_ORDER = ("train", "validation", "test")

# Feature engineering
DEFAULT_SEQ_LEN = 12
DAILY_SEQ_LEN = 365
SMOOTHING_WINDOW = 30
DAILY_STRIDE = 5
SEQ_LEN_SWEEP = (6, 9, 12, 15, 18)
MAX_HORIZON = 6

# Linear least squares
PIVOT_TOLERANCE = 1e-10

# Tree models
HIST_BINS = 32
HOLDOUT_FRACTION = 0.2

RF_GRID = {
    "n_estimators": [10, 50, 100],
    "max_depth": [5, 10, None],
    "min_samples_split": [2, 5, 10],
    "min_samples_leaf": [2, 5, 10],
}
BOOSTED_GRID = {
    "n_estimators": [10, 50, 100],
    "max_depth": [3, 5, 7],
    "learning_rate": [0.01, 0.05, 0.1],
    "num_leaves": [10, 20, 30],
    "min_child_samples": [20, 30],
    "min_gain_to_split": [0.01, 0.05],
}

# Neural training
MIN_DELTA = 1e-4
PATIENCE = 10
BATCH_SIZE = 256
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

# Hyperparameter columns per dataset variant ("ol" open loop, "da" data assimilation)
HYPERPARAMETER_COLUMNS = {
    "lstm": {
        "ol": {"hidden_size": 512, "learning_rate": 0.0016, "dropout": 0.2, "init": "xavier"},
        "da": {"hidden_size": 64, "learning_rate": 0.0097, "dropout": 0.1, "init": "orthogonal"},
    },
    "tft": {
        "ol": {"hidden_size": 80, "nheads": 5, "learning_rate": 0.0016, "dropout": 0.2, "init": "xavier"},
        "da": {"hidden_size": 80, "nheads": 4, "learning_rate": 0.0011, "dropout": 0.2, "init": "xavier"},
    },
}
PAPER_MAX_EPOCHS = 200
DESK_OVERRIDES = {"hidden_size": 32, "nheads": 4, "max_epochs": 50}

DESK_BASINS = 32
PAPER_BASINS = 515

# Model names used in reports
LINEAR_SINGLE = "Linear_single"
LINEAR_GLOB = "Linear_glob"
LSTM = "LSTM"
TFT_LITE = "TFT-lite"
TFT_LITE_NO_TIME = "TFT-lite_no_timeidx"
RANDOM_FOREST = "RF"
BOOSTED = "GBM"

LINEAR_MODELS = (LINEAR_SINGLE, LINEAR_GLOB)
NEURAL_MODELS = (LSTM, TFT_LITE, TFT_LITE_NO_TIME)
TREE_MODELS = (RANDOM_FOREST, BOOSTED)
ALL_MODELS = LINEAR_MODELS + NEURAL_MODELS + TREE_MODELS

# Evaluation
METRICS = ("bias", "rmse", "corr", "nse", "kge", "median_loss")
HIGHER_IS_BETTER = ("corr", "nse", "kge")
LOWER_IS_BETTER = ("rmse", "median_loss")
ABS_IS_BETTER = ("bias",)
TESTED_METRICS = ("nse", "kge", "rmse")
SIGNIFICANCE_LEVEL = 0.05
EXACT_MWU_MAX = 8
KGE_MEAN_GUARD = 1e-9

EXPERIMENT_KINDS = (
    "regression_tournament",
    "seq_len_sweep",
    "forecast_sweep",
    "daily_smoothed",
    "time_index_ablation",
    "tree_baselines",
)
VARIANTS = ("ol-like", "da-like", "real")
PROFILES = ("desk", "paper")
