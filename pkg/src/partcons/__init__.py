"""Consensus and meta-clustering of set partitions under the co-membership distance."""

from .consensus import (
    ConsensusResult,
    LemmaReport,
    Verdict,
    average_distances,
    check_extension_lemmas,
    check_kmax_lemmas,
    consensus,
    narrow_candidates,
    total_distance,
    verify_theorem1,
    verify_theorem2,
)
from .experiments import (
    ExperimentRow,
    ExperimentSpec,
    emit_report,
    load_config,
    published_rows,
    regenerate_tables,
    run_consensus_experiment,
    run_experiment,
    run_pam_experiment,
)
from .metaclustering import (
    DistanceMatrix,
    MetaClusteringResult,
    build_distance_matrix,
    group_by_pth_reduct,
    kmeans,
    pam,
    reduct_group_exceptions,
)
from .partition import (
    CD,
    UNCD,
    DistanceKind,
    DistanceSpec,
    Partition,
    PartitionError,
    bell_number,
    cd,
    embed,
    format_partition,
    parse_partition,
    power,
    reduct,
    relabel,
    simple_extension,
    uncd,
)
from .universe import Constraint, PartitionUniverse, SampleSpec, UniverseSpec, enumerate_universe, sample, universe

__version__ = "0.1.0"
