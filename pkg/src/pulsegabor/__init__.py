"""Pulse-domain image filtering with excitatory spiking microcircuits.

Rates are carried as pulse trains on a fixed-step clock; subtraction is
done by gated charge transmission, and zero-sum convolution masks are
decomposed into banks of two-input subtraction circuits whose outputs
are pooled back into absolute filter responses.  The :mod:`.oracle`
module holds the conventional reference computations the pulsed path is
judged against.
"""

from .kernel import (
    ConfigurationError,
    Network,
    PulseTrain,
    SimConfig,
    iaf_step,
    regular_train,
)
from .plasticity import (
    DendriteRuleParams,
    MembraneRuleParams,
    SynapseState,
    dendrite_update,
    membrane_update,
)
from .microcircuit import (
    CorrelationStats,
    Microcircuit,
    MicrocircuitParams,
    build_microcircuit,
    correlation,
    run_subtractor,
    sweep_subtractor,
)
from .banks import MicrocircuitBank, SummationArray
from .retina import (
    OpticsModel,
    PixelCell,
    PixelCellArray,
    brightness_to_rate,
    pixel_step,
    smooth_image,
)
from .aer import AddressEvent, PulseHistogram, RoutingTable, histogram_to_image, route
from .filters import (
    EdgeDetectorBank,
    GaborPyramid,
    IntegerMask,
    MaskDecomposition,
    PyramidConfig,
    abs_pool,
    build_edge_detector,
    build_gabor_pyramid,
    decompose_mask,
    default_gabor_mask,
    quantize_kernel,
    static_mask_response,
)
from .oracle import SimilarityReport, analytic_subtractor, compare, convolve2d, gabor_kernel
from .images import load_pgm, save_pgm, bars_and_disk, step_edge_row

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "Network",
    "PulseTrain",
    "SimConfig",
    "iaf_step",
    "regular_train",
    "DendriteRuleParams",
    "MembraneRuleParams",
    "SynapseState",
    "dendrite_update",
    "membrane_update",
    "CorrelationStats",
    "Microcircuit",
    "MicrocircuitParams",
    "build_microcircuit",
    "correlation",
    "run_subtractor",
    "sweep_subtractor",
    "MicrocircuitBank",
    "SummationArray",
    "OpticsModel",
    "PixelCell",
    "PixelCellArray",
    "brightness_to_rate",
    "pixel_step",
    "smooth_image",
    "AddressEvent",
    "PulseHistogram",
    "RoutingTable",
    "histogram_to_image",
    "route",
    "EdgeDetectorBank",
    "GaborPyramid",
    "IntegerMask",
    "MaskDecomposition",
    "PyramidConfig",
    "abs_pool",
    "build_edge_detector",
    "build_gabor_pyramid",
    "decompose_mask",
    "default_gabor_mask",
    "quantize_kernel",
    "static_mask_response",
    "SimilarityReport",
    "analytic_subtractor",
    "compare",
    "convolve2d",
    "gabor_kernel",
    "load_pgm",
    "save_pgm",
    "bars_and_disk",
    "step_edge_row",
    "__version__",
]
