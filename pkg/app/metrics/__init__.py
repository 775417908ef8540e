from .fairness import Balance, balance, labels_to_partition
from .scores import (
    LEAKAGE_BINS,
    ContingencyTable,
    ari,
    clustering_accuracy,
    confound_leakage,
    contingency_table,
    hungarian,
    nmi,
    quantize_confound,
)

__all__ = [
    "Balance",
    "balance",
    "labels_to_partition",
    "LEAKAGE_BINS",
    "ContingencyTable",
    "ari",
    "clustering_accuracy",
    "confound_leakage",
    "contingency_table",
    "hungarian",
    "nmi",
    "quantize_confound",
]
