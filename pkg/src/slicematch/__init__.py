"""Slice-matching optimal transport maps for discrete measures on R^n."""

from .distances import (
    Sw2Estimate,
    UnsupportedInstanceError,
    distributions_equal,
    haar_sliced_expectation,
    optimal_assignment,
    sw2,
    w2_exact,
    w2sq_exact,
)
from .matching import (
    CompatibleMap,
    IterationTrace,
    MatrixSliceMap,
    PiecewiseLinear,
    SingleSliceMap,
    StepSchedule,
    apply_operator,
    compatible_residual,
    iterate,
    matrix_slice_map,
    shift_recursion,
    single_slice_map,
    sliced_residual,
    slope_estimate,
)
from .measure import DiscreteMeasure, MeasureError, Moments, from_image, moments, project, pushforward, to_image
from .ot1d import SliceMap1D, cdf, ot_map_1d, quantile, w2_1d
from .registration import (
    AxisScaling,
    DegenerateMeasureError,
    RegistrationReport,
    ScaleShift,
    haar_mean_scale_shift,
    register_axis_scaling,
    register_scale_shift,
    register_translation,
    registration_gap,
)
from .slicing import (
    NotOrthogonalError,
    make_rng,
    rotation,
    sample_direction,
    sample_directions,
    sample_haar_orthogonal,
    spawn_seeds,
    validate_orthogonal,
)

__version__ = "0.1.0"
