"""Power counting, Wick algebra and renormalisation constants for a Phi^4_3 model
driven by non-Gaussian noise."""

import json

from . import _nguniv
from ._nguniv import (
    __version__,
    check_pitchfork,
    classify_divergence,
    estimate_constant,
    fit_log_divergence,
    homogeneity,
    noise_contract,
    numeric_schedule,
    pairings,
    pretty,
    symbolic_cancellation,
    wick_polynomial,
)


def symbols(m, cap="3/2", negative_only=False):
    return json.loads(_nguniv.symbols_json(m, cap, negative_only))


def check_first_order(k, n):
    return json.loads(_nguniv.check_first_order_json(k, n))


def check_second_order(k, l):
    return [json.loads(s) for s in _nguniv.check_second_order_json(k, l)]


__all__ = [
    "__version__",
    "check_first_order",
    "check_pitchfork",
    "check_second_order",
    "classify_divergence",
    "estimate_constant",
    "fit_log_divergence",
    "homogeneity",
    "noise_contract",
    "numeric_schedule",
    "pairings",
    "pretty",
    "symbolic_cancellation",
    "symbols",
    "wick_polynomial",
]
