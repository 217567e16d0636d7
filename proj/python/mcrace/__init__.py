"""Explicit-state data race checker with partial order reduction."""

import json as _json

from ._mcrace import LoweringError, ParseError, Program, __version__, pretty_print
from ._mcrace import run as _run
from ._mcrace import run_corpus

__all__ = [
    "LoweringError",
    "ParseError",
    "Program",
    "__version__",
    "check",
    "compare",
    "oracle",
    "pretty_print",
    "run",
    "run_corpus",
]


def _ranges(inputs):
    out = {}
    for name, value in (inputs or {}).items():
        if isinstance(value, int):
            out[name] = (value, value)
        else:
            lo, hi = value
            out[name] = (lo, hi)
    return out


def run(mode, source, name="<input>", inputs=None, json=True, **limits):
    """Runs a mode on program text. Returns (exit_code, report text)."""
    return _run(mode, source, name, _ranges(inputs), json=json, **limits)


def _report(mode, source, name, inputs, limits):
    code, text = run(mode, source, name, inputs, json=True, **limits)
    return code, _json.loads(text)


def check(source, name="<input>", inputs=None, **limits):
    """Reduced-graph check. Returns (exit_code, parsed JSON report)."""
    return _report("check", source, name, inputs, limits)


def oracle(source, name="<input>", inputs=None, **limits):
    """Full interleaving exploration. Returns (exit_code, parsed JSON report)."""
    return _report("oracle", source, name, inputs, limits)


def compare(source, name="<input>", inputs=None, **limits):
    """Runs both explorers. Returns (exit_code, parsed JSON report)."""
    return _report("compare", source, name, inputs, limits)
