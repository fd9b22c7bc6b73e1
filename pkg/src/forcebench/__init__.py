"""forcebench: discrete-time analysis and simulation workbench for
disturbance-observer based sensorless force control."""

from .analysis import (
    BodeIntegralResult,
    CriticalGainResult,
    FrequencyGrid,
    FrequencyResponse,
    LocusBranch,
    SweepGrid,
    SweepRecord,
    bode_integral,
    critical_gain,
    design_sweep,
    frequency_response,
    min_phase_boundary,
    root_locus,
    sensitivity_peak,
)
from .dlti import (
    Poly,
    RationalTF,
    StabilityReport,
    cancel,
    classify_stability,
    evaluate,
    poly_roots,
    step_response,
    tf_add,
    tf_feedback,
    tf_series,
)
from .models import (
    DerivedRatios,
    EnvModel,
    ForceLoopConfig,
    ObserverGains,
    ServoParams,
    derived_ratios,
    force_open_loop,
    inner_accel_tracking,
    inner_complementary,
    inner_open_loop,
    inner_sensitivity,
    phi_polys,
    rtob_estimation_error_tf,
    rtob_filter,
    unit_gain_force_loop,
)
from .oracle import (
    arbitrate_exponent_convention,
    compose_loop_numeric,
    mat_exp,
    reference_quadrature,
    ss_to_tf,
    zoh_ab,
)
from .simulate import (
    NoiseSpec,
    ResponseMetrics,
    SignalSpec,
    SimScenario,
    SimTrace,
    compute_metrics,
    linear_response_oracle,
    run_simulation,
    zoh_plant,
)

__version__ = "0.1.0"
