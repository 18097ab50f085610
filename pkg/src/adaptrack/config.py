"""Tracker configuration: typed defaults, a flat `key = value` file format,
and override merging (file first, then explicit overrides such as CLI flags).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from adaptrack.formats import FormatError
from adaptrack.lifecycle import LifecycleConfig
from adaptrack.stage1 import Stage1Config
from adaptrack.stage2 import Stage2Config

STAGE1_MODES = ("adaptive", "hungarian", "off")
STAGE2_PROVIDERS = ("cosine", "precomputed", "none")

_BOOL_WORDS = {"true": True, "yes": True, "on": True, "1": True,
               "false": False, "no": False, "off": False, "0": False}


def _parse_bool(text: str) -> bool:
    try:
        return _BOOL_WORDS[text.strip().lower()]
    except KeyError:
        raise ValueError(f"not a boolean: {text!r}") from None


def _parse_choice(options):
    def parse(text: str) -> str:
        text = text.strip()
        if text not in options:
            raise ValueError(f"expected one of {options}, got {text!r}")
        return text
    return parse


# key -> (parser, TrackerConfig attribute path)
KNOWN_KEYS = {
    "stage1.t_n1": (int, ("stage1", "t_n1")),
    "stage1.throd_min": (float, ("stage1", "throd_min")),
    "stage1.match_min": (float, ("stage1", "match_min")),
    "stage1.norm_cap": (float, ("stage1", "norm_cap")),
    "baseline.gate": (float, ("baseline_gate",)),
    "stage2.provider": (_parse_choice(STAGE2_PROVIDERS), ("stage2_provider",)),
    "stage2.sim_min": (float, ("stage2", "sim_min")),
    "stage2.scores_path": (str, ("scores_path",)),
    "lifecycle.enabled_mv_aware": (_parse_bool, ("lifecycle", "mv_aware")),
    "lifecycle.throd_del1": (int, ("lifecycle", "throd_del1")),
    "lifecycle.throd_del2": (int, ("lifecycle", "throd_del2")),
    "lifecycle.t_n2": (int, ("lifecycle", "t_n2")),
    "lifecycle.boundary_factor": (float, ("lifecycle", "boundary_factor")),
    "tracker.min_confidence": (float, ("min_confidence",)),
}


@dataclass
class TrackerConfig:
    stage1: Stage1Config = field(default_factory=Stage1Config)
    stage2: Stage2Config = field(default_factory=Stage2Config)
    lifecycle: LifecycleConfig = field(default_factory=LifecycleConfig)
    baseline_gate: float = 0.7          # max cost (1 - IOU) for the Hungarian baseline
    stage1_mode: str = "adaptive"       # adaptive | hungarian | off
    stage2_provider: str = "none"       # cosine | precomputed | none
    scores_path: str | None = None      # score table for the precomputed provider
    min_confidence: float = 0.0         # detections below this are dropped up front

    def __post_init__(self):
        if self.stage1_mode not in STAGE1_MODES:
            raise ValueError(f"stage1_mode must be one of {STAGE1_MODES}")
        if self.stage2_provider not in STAGE2_PROVIDERS:
            raise ValueError(f"stage2_provider must be one of {STAGE2_PROVIDERS}")
        if not 0.0 <= self.baseline_gate <= 1.0:
            raise ValueError(f"baseline.gate must be in [0, 1], got {self.baseline_gate}")
        if not 0.0 <= self.min_confidence <= 1.0:
            raise ValueError(f"min_confidence must be in [0, 1], got {self.min_confidence}")


def parse_config_file(path) -> dict:
    """Read `key = value` lines (# comments allowed) into {key: raw string}.

    Unknown keys are an error: silently ignoring a typo like
    `stage1.throd_mim` would change tracking behavior without a trace.
    """
    path = Path(path)
    values = {}
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise FormatError(f"{path}:{line_no}: expected `key = value`")
            key, _, raw = line.partition("=")
            key = key.strip()
            if key not in KNOWN_KEYS:
                raise FormatError(f"{path}:{line_no}: unknown config key {key!r}")
            values[key] = raw.strip()
    return values


def build_config(file_values: dict | None = None,
                 overrides: dict | None = None) -> TrackerConfig:
    """Assemble a TrackerConfig from defaults, file values, then overrides.

    Both mappings use the flat config keys; overrides may hold already-typed
    values (CLI flags) or raw strings.
    """
    merged: dict = {}
    for source in (file_values or {}), (overrides or {}):
        for key, value in source.items():
            if key not in KNOWN_KEYS:
                raise FormatError(f"unknown config key {key!r}")
            merged[key] = value

    cfg = TrackerConfig()
    touched = []
    for key, value in merged.items():
        parse, path = KNOWN_KEYS[key]
        if isinstance(value, str):
            try:
                value = parse(value)
            except ValueError as exc:
                raise FormatError(f"config key {key}: {exc}") from None
        target = cfg
        for attr in path[:-1]:
            target = getattr(target, attr)
        setattr(target, path[-1], value)
        if not any(t is target for t in touched):
            touched.append(target)
    # Re-check invariants only once everything is applied, so that value pairs
    # like throd_del1/throd_del2 can move together.
    for target in touched:
        try:
            target.__post_init__()
        except ValueError as exc:
            raise FormatError(str(exc)) from None
    return cfg
