"""
Plain-text study configuration: one ``key = value`` per line, ``#`` comments.

Keys mirror `StudyConfig` fields. Lists (h_values, q0, p0, metrics) are
comma- or space-separated. System parameters go either in one line,
``params = k=2, m=1``, or one per line as ``param.k = 2``.
"""
import configparser
import dataclasses
import re

from .studies import StudyConfig

_SECTION = "study"
_FLOAT_LISTS = {"h_values", "q0", "p0"}
_INTS = {"degree", "dense", "steps"}
_FLOATS = {"t_end", "h_ref", "floor_factor", "newton_tol"}


def _split(text):
    return [t for t in re.split(r"[,\s]+", text.strip()) if t]


def parse_params(items):
    """``["k=2", "m=1.5"]`` -> ``{"k": 2.0, "m": 1.5}``."""
    out = {}
    for item in items:
        if "=" not in item:
            raise ValueError(f"parameter {item!r} is not of the form name=value")
        key, value = item.split("=", 1)
        out[key.strip()] = _number(value.strip())
    return out


def _number(text):
    try:
        return int(text)
    except ValueError:
        return float(text)


def parse_config_text(text):
    """Dictionary of StudyConfig keyword arguments from config text."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    parser.optionxform = str
    parser.read_string(f"[{_SECTION}]\n" + text)
    fields = {f.name for f in dataclasses.fields(StudyConfig)}
    out, params = {}, {}
    for key, raw in parser.items(_SECTION):
        value = raw.strip()
        if key.startswith("param."):
            params[key[len("param."):]] = _number(value)
        elif key == "params":
            params.update(parse_params([p for p in re.split(r"[,\s]+", value) if p]))
        elif key not in fields:
            raise ValueError(f"unknown config key {key!r}")
        elif key in _FLOAT_LISTS:
            out[key] = tuple(float(v) for v in _split(value))
        elif key == "metrics":
            out[key] = tuple(_split(value))
        elif key in _INTS:
            out[key] = int(value)
        elif key in _FLOATS:
            out[key] = float(value)
        else:
            out[key] = value
    if params:
        out["params"] = params
    return out


def load_config(path):
    with open(path) as fh:
        return parse_config_text(fh.read())
