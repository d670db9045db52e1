from hafpn.core.gradcheck import (
    GradCheck,
    GradCheckResult,
    fd_grad,
    relative_error,
    run_gradcheck,
)
from hafpn.core.random import Rng, rand_uniform
from hafpn.core.tensor import (
    FormatError,
    NonFiniteError,
    Precision,
    ShapeError,
    Tensor,
    add,
    as_precision,
    check_finite,
    concat,
    fill,
    matmul,
    mul_elementwise,
    ones,
    permute,
    reduce_mean,
    reshape,
    zeros,
    zeros_like,
)
from hafpn.core.tree import map_tensors, named_tensors, replace_tensor

__all__ = [
    "FormatError",
    "GradCheck",
    "GradCheckResult",
    "NonFiniteError",
    "Precision",
    "Rng",
    "ShapeError",
    "Tensor",
    "add",
    "as_precision",
    "check_finite",
    "concat",
    "fd_grad",
    "fill",
    "map_tensors",
    "matmul",
    "mul_elementwise",
    "named_tensors",
    "ones",
    "permute",
    "rand_uniform",
    "reduce_mean",
    "relative_error",
    "replace_tensor",
    "reshape",
    "run_gradcheck",
    "zeros",
    "zeros_like",
]
