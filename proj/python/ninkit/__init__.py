# Copyright 2026 The ninkit Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Python bindings for the ninkit Network-In-Network engine.

The module wraps the 64-bit build. It is meant for inspection: building
networks from config files, running forward passes on numpy arrays, reading
checkpoints written by the `ninkit` trainer, gradient checks and class-map
extraction. Training stays in the command-line tool.
"""

from ._ninkit import (
    ArgumentError,
    ConfigError,
    DataError,
    Error,
    Network,
    NetworkConfig,
    ShapeError,
    downscale_config,
    extract_maps,
    gcn,
    gradcheck,
    lcn,
    load_config,
    load_dataset,
    load_mnist,
    parse_config,
    save_dataset,
    threshold_keep_count,
    top_indices,
    with_fc_head,
)

__all__ = [
    "ArgumentError",
    "ConfigError",
    "DataError",
    "Error",
    "Network",
    "NetworkConfig",
    "ShapeError",
    "downscale_config",
    "extract_maps",
    "gcn",
    "gradcheck",
    "lcn",
    "load_config",
    "load_dataset",
    "load_mnist",
    "parse_config",
    "save_dataset",
    "threshold_keep_count",
    "top_indices",
    "with_fc_head",
]
