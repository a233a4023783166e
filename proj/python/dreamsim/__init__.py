"""Python bindings for the dreamsim DRAM address-mapping simulator."""

import json

from ._core import *  # noqa: F401,F403
from ._core import _simulate


def simulate(trace, controller="fixed:baseline", config=None):
    """Run one controller over a list of (gap, op, address) tuples; returns the report dict."""
    text = json.dumps(config) if config else ""
    return json.loads(_simulate(trace, controller, text))
