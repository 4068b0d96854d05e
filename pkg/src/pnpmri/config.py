"""Experiment configuration read from JSON with positioned diagnostics."""

import json
import re
from dataclasses import dataclass, field, fields

import numpy as np

from .benchmark import METHODS, BenchmarkConfig
from .grappa import CALIBRATION_SHIFTS
from .simulate import PHANTOM_KINDS

REGIONS = ("support", "full")


class ConfigError(ValueError):
    """Invalid experiment configuration (exit code 2)."""


@dataclass
class ExperimentConfig(BenchmarkConfig):
    """Everything a CLI command needs; JSON keys map one-to-one onto fields.

    ``masks`` lists the acceleration settings swept by ``compare``; each
    entry is an integer R or an ``[R, R']`` pair.  ``factors`` is the
    single setting used by the other commands.
    """

    method: str = "pnp"
    methods: list = field(default_factory=lambda: list(METHODS))
    masks: list = field(default_factory=lambda: [4])
    checkpoint: str = None
    out_dir: str = "out"
    region: str = "support"
    png: bool = False

    def validate(self):
        """Raise :class:`ConfigError` naming the first offending field."""
        check = _Checker()
        check.positive_int("rows", self.rows, minimum=16)
        check.positive_int("cols", self.cols, minimum=16)
        check.positive_int("coils", self.coils)
        check.factors("factors", self.factors)
        check.positive_int("acs", self.acs, minimum=0)
        check.nonneg("noise_sigma", self.noise_sigma)
        check.choice("phantom_kind", self.phantom_kind, PHANTOM_KINDS)
        check.nonneg("jitter", self.jitter)
        for name in ("seed", "maps_seed"):
            check.positive_int(name, getattr(self, name), minimum=0)
        check.positive_int("num_test", self.num_test)
        check.positive_int("num_train", self.num_train, minimum=0)
        check.positive("lam", self.lam)
        check.positive_int("iters", self.iters, minimum=0)
        check.positive("cg_tol", self.cg_tol)
        check.positive_int("cg_max_iters", self.cg_max_iters)
        check.nonneg("train_noise_sigma", self.train_noise_sigma)
        check.positive_int("num_levels", self.num_levels)
        check.positive_int("base_filters", self.base_filters)
        if not isinstance(self.residual, bool):
            raise ConfigError("residual must be true or false")
        check.positive_int("epochs", self.epochs, minimum=0)
        check.positive_int("batch_size", self.batch_size)
        check.positive_int("patch_size", self.patch_size, minimum=0)
        check.positive("learning_rate", self.learning_rate)
        check.positive_int("num_source_lines", self.num_source_lines, minimum=2)
        check.positive_int("kernel_readout_width", self.kernel_readout_width)
        if self.kernel_readout_width % 2 == 0:
            raise ConfigError("kernel_readout_width must be odd")
        check.nonneg("tikhonov", self.tikhonov)
        check.choice("calibration_shifts", self.calibration_shifts, CALIBRATION_SHIFTS)
        check.choice("method", self.method, METHODS)
        if not isinstance(self.methods, list) or not self.methods:
            raise ConfigError("methods must be a non-empty list")
        for m in self.methods:
            check.choice("methods", m, METHODS)
        if not isinstance(self.masks, list) or not self.masks:
            raise ConfigError("masks must be a non-empty list")
        for m in self.masks:
            check.factors("masks", m)
        if self.checkpoint is not None and not isinstance(self.checkpoint, str):
            raise ConfigError("checkpoint must be a path string")
        if not isinstance(self.out_dir, str) or not self.out_dir:
            raise ConfigError("out_dir must be a non-empty path string")
        check.choice("region", self.region, REGIONS)
        if not isinstance(self.png, bool):
            raise ConfigError("png must be true or false")
        return self

    def with_factors(self, factors):
        doc = {f.name: getattr(self, f.name) for f in fields(self)}
        doc["factors"] = tuple(factors) if np.ndim(factors) else factors
        return ExperimentConfig(**doc)


class _Checker:
    @staticmethod
    def _is_int(v):
        return isinstance(v, (int, np.integer)) and not isinstance(v, bool)

    @staticmethod
    def _is_num(v):
        return isinstance(v, (int, float, np.number)) and not isinstance(v, bool)

    def positive_int(self, name, v, minimum=1):
        if not self._is_int(v) or v < minimum:
            raise ConfigError(f"{name} must be an integer >= {minimum}, got {v!r}")

    def positive(self, name, v):
        if not self._is_num(v) or not np.isfinite(v) or v <= 0:
            raise ConfigError(f"{name} must be a positive number, got {v!r}")

    def nonneg(self, name, v):
        if not self._is_num(v) or not np.isfinite(v) or v < 0:
            raise ConfigError(f"{name} must be a non-negative number, got {v!r}")

    def choice(self, name, v, options):
        if v not in options:
            raise ConfigError(f"{name} must be one of {list(options)}, got {v!r}")

    def factors(self, name, v):
        if self._is_int(v) and v >= 1:
            return
        if (
            isinstance(v, (list, tuple))
            and len(v) == 2
            and all(self._is_int(f) and f >= 1 for f in v)
        ):
            return
        raise ConfigError(f"{name} entries must be an integer R >= 1 or a pair [R, R'], got {v!r}")


FIELD_NAMES = tuple(f.name for f in fields(ExperimentConfig))


def _position(text, key):
    m = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    if m is None:
        return None
    line = text.count("\n", 0, m.start()) + 1
    col = m.start() - (text.rfind("\n", 0, m.start()) + 1) + 1
    return line, col


def parse_config(text, source="<config>"):
    """Build an :class:`ExperimentConfig` from JSON text.

    Syntax errors, unknown keys and invalid values raise
    :class:`ConfigError` with a ``source:line:column:`` prefix.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{source}:1:1: top level must be a JSON object")
    for key in doc:
        if key not in FIELD_NAMES:
            line, col = _position(text, key) or (1, 1)
            raise ConfigError(f"{source}:{line}:{col}: unknown key {key!r}")
    try:
        return apply_overrides(ExperimentConfig(), doc)
    except ConfigError as exc:
        key = next((k for k in doc if str(exc).startswith(k + " ")), None)
        line, col = (_position(text, key) if key else None) or (1, 1)
        raise ConfigError(f"{source}:{line}:{col}: {exc}") from None


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), source=str(path))


def apply_overrides(cfg, overrides):
    """Return a validated copy of ``cfg`` with ``overrides`` (``None`` values skipped)."""
    doc = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    for key, value in overrides.items():
        if value is not None:
            doc[key] = value
    if isinstance(doc["factors"], list):
        doc["factors"] = tuple(doc["factors"])
    return ExperimentConfig(**doc).validate()
