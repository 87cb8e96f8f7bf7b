"""Aggregation-GNN power allocation for wireless networks.

Thin Python layer over the C++ core. Configs are dicts of overrides keyed
like the ``wagnn`` command-line flags; values may be str, int, float or bool.
"""

from . import _core
from ._core import (
    ChannelProcess,
    ConfigError,
    DivergenceError,
    FilterTensor,
    IoError,
    ShapeError,
    aggregate,
    config_keys,
    default_config,
    equal_power,
    generate_adhoc,
    generate_cellular,
    init_filters,
    init_near_identity,
    load_config,
    load_filters,
    random_power,
    sample_policy,
    sparsify,
    sumrate,
    uniform_layers,
    wmmse,
)


def _text(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _overrides(config=None, **kwargs):
    merged = dict(config or {})
    merged.update(kwargs)
    return {k: _text(v) for k, v in merged.items()}


def resolve_config(config=None, **kwargs):
    """Defaults with overrides applied, validated; raises ConfigError."""
    return _core.resolve_config(_overrides(config, **kwargs))


def train(config=None, **kwargs):
    """Train on the configured network; returns filters, traces and summaries."""
    return _core.train(_overrides(config, **kwargs))


def permutation_test(filters, trials=100, config=None, **kwargs):
    """Per-trial (readout deviation, reward deviation) under random relabelings."""
    return _core.permutation_test(_overrides(config, **kwargs), filters, trials)


def transfer(filters, m_prime, trials=20, scaled=False, config=None, **kwargs):
    """Frozen-policy summaries on fresh networks of m_prime pairs."""
    return _core.transfer(_overrides(config, **kwargs), filters, scaled, m_prime, trials)


def run_command(name, config=None, **kwargs):
    """Run a CLI subcommand in-process; returns its JSON summary text."""
    return _core.run_command(name, _overrides(config, **kwargs))


__all__ = [
    "ChannelProcess",
    "ConfigError",
    "DivergenceError",
    "FilterTensor",
    "IoError",
    "ShapeError",
    "aggregate",
    "config_keys",
    "default_config",
    "equal_power",
    "generate_adhoc",
    "generate_cellular",
    "init_filters",
    "init_near_identity",
    "load_config",
    "load_filters",
    "permutation_test",
    "random_power",
    "resolve_config",
    "run_command",
    "sample_policy",
    "sparsify",
    "sumrate",
    "train",
    "transfer",
    "uniform_layers",
    "wmmse",
]
