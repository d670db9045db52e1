from hafpn.networks.layers.activation import (
    hard_sigmoid,
    hard_sigmoid_backward,
    hard_sigmoid_forward,
    sigmoid,
    sigmoid_backward,
    sigmoid_forward,
    silu,
    silu_backward,
    silu_forward,
    tanh,
    tanh_backward,
    tanh_forward,
)
from hafpn.networks.layers.conv import (
    conv2d,
    conv2d_backward,
    conv2d_forward,
    dwconv3x3,
    dwconv3x3_backward,
    dwconv3x3_forward,
)
from hafpn.networks.layers.linear import linear, linear_backward, linear_forward
from hafpn.networks.layers.mlp import mlp, mlp_backward, mlp_forward
from hafpn.networks.layers.norm import (
    layer_norm_channels,
    layer_norm_channels_backward,
    layer_norm_channels_forward,
)
from hafpn.networks.layers.params import (
    Conv2dParams,
    LayerNormParams,
    LinearParams,
    MlpParams,
    init_conv2d,
    init_dwconv3x3,
    init_layer_norm,
    init_linear,
    init_mlp,
    zero_weights,
)
from hafpn.networks.layers.resample import (
    avg_pool_2x,
    avg_pool_2x_backward,
    global_avg_pool_h,
    global_avg_pool_h_backward,
    global_avg_pool_w,
    global_avg_pool_w_backward,
    upsample_nearest_2x,
    upsample_nearest_2x_backward,
)

__all__ = [
    "Conv2dParams",
    "LayerNormParams",
    "LinearParams",
    "MlpParams",
    "avg_pool_2x",
    "avg_pool_2x_backward",
    "conv2d",
    "conv2d_backward",
    "conv2d_forward",
    "dwconv3x3",
    "dwconv3x3_backward",
    "dwconv3x3_forward",
    "global_avg_pool_h",
    "global_avg_pool_h_backward",
    "global_avg_pool_w",
    "global_avg_pool_w_backward",
    "hard_sigmoid",
    "hard_sigmoid_backward",
    "hard_sigmoid_forward",
    "init_conv2d",
    "init_dwconv3x3",
    "init_layer_norm",
    "init_linear",
    "init_mlp",
    "layer_norm_channels",
    "layer_norm_channels_backward",
    "layer_norm_channels_forward",
    "linear",
    "linear_backward",
    "linear_forward",
    "mlp",
    "mlp_backward",
    "mlp_forward",
    "sigmoid",
    "sigmoid_backward",
    "sigmoid_forward",
    "silu",
    "silu_backward",
    "silu_forward",
    "tanh",
    "tanh_backward",
    "tanh_forward",
    "upsample_nearest_2x",
    "upsample_nearest_2x_backward",
    "zero_weights",
]
