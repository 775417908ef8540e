from .centroid_bank import (
    Assignment,
    CentroidBank,
    ema_update,
    extract_partition,
    init_centroids,
    partition_labels,
    soft_assign,
)
from .lloyd import LloydResult, assign_nearest, lloyd, seed_centroids
from .storage import (
    ASSIGNMENTS_FILE,
    CENTROIDS_FILE,
    load_assignments,
    load_centroids,
    save_assignments,
    save_centroids,
)

__all__ = [
    "Assignment",
    "CentroidBank",
    "ema_update",
    "extract_partition",
    "init_centroids",
    "partition_labels",
    "soft_assign",
    "LloydResult",
    "assign_nearest",
    "lloyd",
    "seed_centroids",
    "ASSIGNMENTS_FILE",
    "CENTROIDS_FILE",
    "load_assignments",
    "load_centroids",
    "save_assignments",
    "save_centroids",
]
