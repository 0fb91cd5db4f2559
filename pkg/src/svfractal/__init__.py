"""Set-valued alpha-fractal functions on finite unions of intervals.

Modules: ``compact_set`` (interval-union arithmetic and Hausdorff distance),
``sv_map`` (set-valued maps and grid metrics), ``rb_fractal`` (fractal
functions on dense address grids), ``approx`` (Bernstein and fractal
polynomial approximation), ``graph_dim`` (graphs, covering numbers, IFS and
Moran bounds) and ``cli``.
"""
from .compact_set import (
    CompactSet,
    Interval,
    cantor,
    canonicalize,
    convex_hull,
    directed_hausdorff,
    hausdorff,
    minkowski_add,
    minkowski_sub,
    norm,
    parse_set,
    product,
    scale,
    subset,
)
from .errors import (
    CapacityExceeded,
    ConvexityRequired,
    DegenerateFit,
    DegreeCapExceeded,
    DomainError,
    EmptySet,
    EndpointNotSingleton,
    IncompatibleBase,
    NoConvergence,
    OrderViolated,
    PointNotOnGrid,
    SVFractalError,
)
from .rb_fractal import (
    BaseFunctionSpec,
    FractalSystem,
    GridFunction,
    Partition,
    build_base,
    dense_set,
    evaluate_fractal,
    make_affine_maps,
    picard_oracle,
    residual,
)
from .sv_map import (
    MetricReport,
    ScalarFn,
    SetValuedMap,
    cantor_valued,
    constant,
    envelope,
    singleton,
)

__version__ = "0.1.0"

__all__ = [
    "BaseFunctionSpec",
    "build_base",
    "canonicalize",
    "cantor",
    "cantor_valued",
    "CapacityExceeded",
    "CompactSet",
    "constant",
    "convex_hull",
    "ConvexityRequired",
    "DegenerateFit",
    "DegreeCapExceeded",
    "dense_set",
    "directed_hausdorff",
    "DomainError",
    "EmptySet",
    "EndpointNotSingleton",
    "envelope",
    "evaluate_fractal",
    "FractalSystem",
    "GridFunction",
    "hausdorff",
    "IncompatibleBase",
    "Interval",
    "make_affine_maps",
    "MetricReport",
    "minkowski_add",
    "minkowski_sub",
    "NoConvergence",
    "norm",
    "OrderViolated",
    "parse_set",
    "Partition",
    "picard_oracle",
    "PointNotOnGrid",
    "product",
    "residual",
    "ScalarFn",
    "scale",
    "SetValuedMap",
    "singleton",
    "subset",
    "SVFractalError",
]
