from .backend import SimBackend, make_server, serve
from .engine import (
    LANDMARK_MISPARSE,
    SEGMENTATION_MAIN_PART,
    ExpectedMiss,
    FaultInjectionError,
    FaultSpec,
    LocationPhrase,
    Segmentation,
    SimConfig,
    SimIndex,
    check_faults,
    ground_truth_misses,
    haversine_m,
    index,
    load_sim_config,
    rank,
    resolve_location_phrase,
    search,
    segment,
)
