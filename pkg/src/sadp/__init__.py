"""Spike-agreement-dependent plasticity lab.

Bit-packed spike trains, Cohen's-kappa agreement, bounded learning kernels
(linear, analytical, device-derived splines), LIF dynamics, baseline rules,
a downstream classifier, and a benchmark harness.
"""

from .agreement import kappa, kappa_batch
from .encoding import EncoderConfig, encode_batch, encode_image, encode_labels
from .kernels import (
    DeviceTrace,
    IdealSadpKernel,
    LinearKernel,
    SplineKernel,
    StdpParams,
    eval_kernel,
    export_kernel,
    extract_updates,
    fit_spline_kernel,
    ideal_sadp_kernel,
    import_kernel,
    linear_kernel,
    stdp_kernel,
)
from .layers import HebbianLayer, MlpClassifier, SadpLayer, StdpBaselineLayer
from .lif import LifConfig, forward
from .plasticity import (
    HebbianConfig,
    SadpConfig,
    StdpBaselineConfig,
    hebbian_update,
    sadp_update,
    stdp_pairwise_oracle,
    stdp_postpre_update,
)
from .spikes import SpikeTensor, SpikeTrain, WeightMatrix, init_rademacher, pack_train

__version__ = "0.1.0"

__all__ = [
    "DeviceTrace",
    "EncoderConfig",
    "HebbianConfig",
    "HebbianLayer",
    "IdealSadpKernel",
    "LifConfig",
    "LinearKernel",
    "MlpClassifier",
    "SadpConfig",
    "SadpLayer",
    "SpikeTensor",
    "SpikeTrain",
    "SplineKernel",
    "StdpBaselineConfig",
    "StdpBaselineLayer",
    "StdpParams",
    "WeightMatrix",
    "encode_batch",
    "encode_image",
    "encode_labels",
    "eval_kernel",
    "export_kernel",
    "extract_updates",
    "fit_spline_kernel",
    "forward",
    "hebbian_update",
    "ideal_sadp_kernel",
    "import_kernel",
    "init_rademacher",
    "kappa",
    "kappa_batch",
    "linear_kernel",
    "pack_train",
    "sadp_update",
    "stdp_kernel",
    "stdp_pairwise_oracle",
    "stdp_postpre_update",
]
