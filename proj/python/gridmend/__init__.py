# SPDX-License-Identifier: Apache-2.0
"""Python surface of the gridmend C++ core."""

import json

from ._core import (
    ConfigError,
    Environment,
    Error,
    ParseError,
    ValidationError,
    gae,
    ppo_clip_loss,
    train_rewards,
)
from ._core import sample_outage_json as _sample_outage_json
from ._core import solve_step_json as _solve_step_json

__all__ = [
    "ConfigError",
    "Environment",
    "Error",
    "ParseError",
    "ValidationError",
    "gae",
    "ppo_clip_loss",
    "sample_outage",
    "solve_step",
    "train_rewards",
]


def solve_step(network_path, inputs=None, time_limit_s=10.0):
    """Solve one restoration step; `inputs` follows the opf JSON layout."""
    return json.loads(_solve_step_json(str(network_path), json.dumps(inputs or {}), time_limit_s))


def sample_outage(network_path, scenario_path, seed):
    return json.loads(_sample_outage_json(str(network_path), str(scenario_path), seed))
