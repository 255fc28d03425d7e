"""Error-compensating optimizers for quantized training, with a validation lab.

The package trains directly on quantized parameters by injecting each step's
quantization error into the optimizer momentum, and ships the machinery to
verify the approach's provable properties at desk scale: exact-equivalence
trajectories, virtual-sequence dynamics, momentum bounds, stationary noise
floors, and memory accounting.
"""

from .numerics import RngKey, cosine_similarity, keyed_uniform, relative_norm
from .quantize import (
    Fp8E4M3,
    FixedStep,
    Granularity,
    Identity,
    IntSymmetric,
    NoiseModel,
    QuantOutcome,
    QuantSpec,
    Rounding,
    UniformMax,
    fp8_nearest,
)
from .optim import (
    AdamState,
    Eco,
    ExactInjection,
    Hyper,
    MasterWeights,
    Naive,
    ParamGroup,
    SgdmState,
    adam_update,
    eco_quantize_adam,
    eco_quantize_sgdm,
    exact_injection_init,
    exact_injection_sgdm_step,
    injection_strength,
    sgdm_update,
    train_step,
)
from .theory import (
    RegimeCoeffs,
    RegimeMoments,
    TheoryBounds,
    TheoryParams,
    bounds,
    check_virtual_dynamics,
    memory_bytes_per_param,
    moment_step,
    monte_carlo_1d,
    regime_coeffs,
    stability_check,
    stationary_grad_sq,
    stationary_moments,
    virtual_point,
)
from .harness import (
    ConstantSchedule,
    CosineSchedule,
    LinearRegression,
    Mlp2,
    Quadratic1D,
    QuadraticND,
    RunRecord,
    TrainConfig,
    consecutive_error_metrics,
    objective_eval,
    run_training,
)

__version__ = "0.1.0"
