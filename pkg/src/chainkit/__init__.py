"""chainkit: chain metrics, nets, Dirichlet forms and heat kernels on finite spaces."""

__version__ = "0.1.0"

from .chain import (
    ChainAnalysis,
    ProximityIndex,
    analyze_pair,
    chain_metric,
    chain_sandwich_check,
    epsilon_of_t,
    main_inequality_scan,
    min_chain_count,
)
from .dirichlet import (
    GraphDirichletForm,
    capacity,
    cycle_graph,
    energy,
    energy_measure,
    path_graph,
    poincare_constant,
    truncated_maximal,
)
from .heat import (
    HeatKernelTable,
    chaining_lower_bound,
    heat_kernel,
    sierpinski_gasket_graph,
    sub_gaussian_fit,
)
from .net import EpsilonNet, PartitionOfUnity, build_net, build_partition, proof_replay
from .scale import PhiTransform, ScaleFunction, power_scale, verify_regularity
from .space import FiniteMetricMeasureSpace, build_space, space_from_graph
from .suites import SUITES

__all__ = [
    "ChainAnalysis",
    "EpsilonNet",
    "FiniteMetricMeasureSpace",
    "GraphDirichletForm",
    "HeatKernelTable",
    "PartitionOfUnity",
    "PhiTransform",
    "ProximityIndex",
    "SUITES",
    "analyze_pair",
    "build_net",
    "build_partition",
    "build_space",
    "capacity",
    "chain_metric",
    "chain_sandwich_check",
    "chaining_lower_bound",
    "cycle_graph",
    "energy",
    "energy_measure",
    "epsilon_of_t",
    "heat_kernel",
    "main_inequality_scan",
    "min_chain_count",
    "path_graph",
    "poincare_constant",
    "power_scale",
    "proof_replay",
    "ScaleFunction",
    "sierpinski_gasket_graph",
    "space_from_graph",
    "sub_gaussian_fit",
    "truncated_maximal",
    "verify_regularity",
]
