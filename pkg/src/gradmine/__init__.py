"""gradmine: a miniature CPU deep-learning engine whose training loop
adds a third pass -- forward through the network's first-order
derivative -- so that an L1 penalty on input-gradient heatmaps can be
optimized together with the prediction loss."""

__version__ = "0.1.0"

from .errors import (ArgumentError, BuildError, ConfigError, ConformanceError,
                     FormatError, GradmineError, MetricError, PreprocessError,
                     ShapeError, StateError)
from .tensor import Rng, channel_q_norm, entrywise_mul_broadcast, flat_index, unflat_index
from .network import (NetworkSpec, LayerSpec, TrainConfig, Network, ParamStore,
                      build_network, builtin_spec, parse_network_spec,
                      forward_pass, backward_pass, loss_and_grad,
                      l0_loss_and_seed, forward_second_pass, adam_update,
                      train_step, train_step_plain)
from .checkpoint import save_checkpoint, load_checkpoint, apply_checkpoint, load_into
