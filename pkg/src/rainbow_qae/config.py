"""YAML run configuration with line-anchored validation errors.

A run file has three sections::

    market:
      s0: [193.97, 189.12]
      mu_daily: [5.096e-4, 6.255e-4]
      covariance: [[3.35e-4, 2.57e-4], [2.57e-4, 4.18e-4]]
      strike: 190
      horizon_days: 250
    quantum:
      m: 2            # Gaussian qubits per asset
      P: 3            # fraction bits of the maximum register
      R: auto         # register width, or an integer
      method: direct
    output:
      format: json

Every error names the offending field and the line it came from.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from .payoff import PayoffMethod
from .pricing import ConfigurationError, MarketModel, PricingConfig

__all__ = ["ConfigError", "RunConfig", "OutputConfig", "load_config", "parse_config", "bundled_config"]

BUNDLED = ("paper_experiment", "small", "single_asset")


class ConfigError(ConfigurationError):
    """Invalid run file; the message carries ``source:line: field``."""


@dataclass(frozen=True)
class OutputConfig:
    format: str = "json"
    report: str | None = None
    telemetry: str | None = None

    def __post_init__(self) -> None:
        if self.format not in ("json", "csv"):
            raise ValueError(f"format must be 'json' or 'csv', got {self.format!r}")


@dataclass(frozen=True)
class RunConfig:
    market: MarketModel
    pricing: PricingConfig
    output: OutputConfig = field(default_factory=OutputConfig)
    source: str = "<string>"

    def resolved(self) -> dict[str, Any]:
        """Plain-data view of every setting after defaults are filled in."""
        pricing = dataclasses.asdict(self.pricing)
        pricing["method"] = self.pricing.method.value
        return {
            "market": dataclasses.asdict(self.market),
            "quantum": pricing,
            "output": dataclasses.asdict(self.output),
        }

    def replace(self, **pricing_overrides) -> RunConfig:
        """Copy with selected :class:`PricingConfig` fields overridden (``None`` is ignored)."""
        updates = {k: v for k, v in pricing_overrides.items() if v is not None}
        return dataclasses.replace(self, pricing=dataclasses.replace(self.pricing, **updates))


# --- YAML with source positions -------------------------------------------------


def _construct(node: yaml.Node, path: str, marks: dict[str, int], line: int | None = None) -> Any:
    marks[path] = line or node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        out = {}
        for key_node, value_node in node.value:
            key = str(key_node.value)
            if key in out:
                raise ConfigError(f"line {key_node.start_mark.line + 1}: duplicate key {key!r}")
            out[key] = _construct(
                value_node, f"{path}.{key}" if path else key, marks, key_node.start_mark.line + 1
            )
        return out
    if isinstance(node, yaml.SequenceNode):
        return [_construct(v, f"{path}[{i}]", marks) for i, v in enumerate(node.value)]
    value = yaml.safe_load(yaml.serialize(node))
    if isinstance(value, str):
        # YAML 1.1 reads exponents without a decimal point (1e-4) as strings
        try:
            return float(value) if value.strip().lower() not in ("nan", "inf", "-inf", "+inf") else value
        except ValueError:
            pass
    return value


class _Reader:
    """Typed field access that reports failures at the field's source line."""

    def __init__(self, data: dict, marks: dict[str, int], source: str):
        self.data, self.marks, self.source = data, marks, source

    def where(self, path: str) -> str:
        probe = path
        while probe and probe not in self.marks:
            probe = probe.rpartition(".")[0]
        line = self.marks.get(probe, 1)
        return f"{self.source}:{line}: {path}"

    def fail(self, path: str, message: str) -> ConfigError:
        return ConfigError(f"{self.where(path)}: {message}")

    def section(self, name: str, required: bool = True) -> dict:
        value = self.data.get(name)
        if value is None:
            if required:
                raise self.fail(name, "missing section")
            return {}
        if not isinstance(value, dict):
            raise self.fail(name, "expected a mapping")
        unknown = set(value) - set(_FIELDS[name])
        if unknown:
            bad = sorted(unknown)[0]
            raise self.fail(f"{name}.{bad}", f"unknown field (allowed: {', '.join(_FIELDS[name])})")
        return value

    def number(self, section: dict, path: str, *, required=True, default=None, integer=False):
        key = path.rpartition(".")[2]
        if key not in section or section[key] is None:
            if required:
                raise self.fail(path, "missing required field")
            return default
        value = section[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self.fail(path, f"expected a number, got {value!r}")
        if integer:
            if int(value) != value:
                raise self.fail(path, f"expected an integer, got {value!r}")
            return int(value)
        return float(value)

    def vector(self, section: dict, path: str) -> list[float]:
        key = path.rpartition(".")[2]
        value = section.get(key)
        if value is None:
            raise self.fail(path, "missing required field")
        if not isinstance(value, list) or not value:
            raise self.fail(path, "expected a non-empty list of numbers")
        for i, v in enumerate(value):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise self.fail(f"{path}[{i}]", f"expected a number, got {v!r}")
        return [float(v) for v in value]


_FIELDS = {
    "market": ("s0", "mu_daily", "covariance", "strike", "horizon_days"),
    "quantum": (
        "m", "P", "R", "truncation", "grid", "method", "epsilon", "alpha",
        "shots", "seed", "max_power", "mc_paths",
    ),
    "output": ("format", "report", "telemetry"),
}


def _market(rd: _Reader) -> MarketModel:
    sec = rd.section("market")
    s0 = rd.vector(sec, "market.s0")
    mu = rd.vector(sec, "market.mu_daily")
    n = len(s0)
    if len(mu) != n:
        raise rd.fail("market.mu_daily", f"expected {n} entries (one per asset), got {len(mu)}")
    cov = sec.get("covariance")
    if cov is None:
        raise rd.fail("market.covariance", "missing required field")
    if not isinstance(cov, list):
        raise rd.fail("market.covariance", "expected a list of rows")
    if len(cov) != n:
        raise rd.fail("market.covariance", f"expected {n} rows, got {len(cov)}")
    rows = []
    for i, row in enumerate(cov):
        path = f"market.covariance[{i}]"
        if not isinstance(row, list) or len(row) != n:
            raise rd.fail(path, f"row {i} must list {n} numbers")
        rows.append(_row(rd, row, path))
    strike = rd.number(sec, "market.strike")
    horizon = rd.number(sec, "market.horizon_days")
    try:
        return MarketModel(tuple(s0), tuple(mu), tuple(map(tuple, rows)), strike, horizon)
    except ConfigurationError as exc:
        raise rd.fail(_blame(str(exc)), str(exc)) from None


def _row(rd: _Reader, row: list, path: str) -> list[float]:
    for j, v in enumerate(row):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise rd.fail(f"{path}[{j}]", f"expected a number, got {v!r}")
    return [float(v) for v in row]


def _blame(message: str) -> str:
    """Best guess at the market field a model-level error refers to."""
    for key in ("covariance", "strike", "horizon", "s0", "mu_daily"):
        if key in message:
            return "market." + ("horizon_days" if key == "horizon" else key)
    return "market"


def _pricing(rd: _Reader) -> PricingConfig:
    sec = rd.section("quantum", required=False)
    defaults = PricingConfig()
    kw: dict[str, Any] = {}
    for key, attr, integer in (
        ("m", "m", True), ("P", "frac_bits", True), ("truncation", "truncation", False),
        ("epsilon", "epsilon", False), ("alpha", "alpha", False), ("shots", "shots", True),
        ("seed", "seed", True), ("max_power", "max_power", True), ("mc_paths", "mc_paths", True),
    ):
        kw[attr] = rd.number(
            sec, f"quantum.{key}", required=False, default=getattr(defaults, attr), integer=integer
        )
    width = sec.get("R", "auto")
    if width is None or width == "auto":
        kw["width"] = None
    else:
        kw["width"] = rd.number(sec, "quantum.R", integer=True)
    for key in ("grid", "method"):
        if key in sec and sec[key] is not None:
            if not isinstance(sec[key], str):
                raise rd.fail(f"quantum.{key}", f"expected a string, got {sec[key]!r}")
            kw[key] = sec[key]
    if "method" in kw:
        try:
            kw["method"] = PayoffMethod(kw["method"])
        except ValueError:
            raise rd.fail("quantum.method", "must be 'direct' or 'integration'") from None
    try:
        return PricingConfig(**kw)
    except ValueError as exc:
        field_name = _pricing_blame(str(exc))
        raise rd.fail(field_name, str(exc)) from None


def _pricing_blame(message: str) -> str:
    names = {"frac_bits": "P", "width": "R", "max_power": "max_power", "mc_paths": "mc_paths"}
    for attr in ("frac_bits", "width", "truncation", "grid", "epsilon", "alpha", "shots",
                 "max_power", "mc_paths", "m"):
        if attr in message:
            return "quantum." + names.get(attr, attr)
    return "quantum"


def _output(rd: _Reader) -> OutputConfig:
    sec = rd.section("output", required=False)
    kw = {}
    for key in _FIELDS["output"]:
        if sec.get(key) is not None:
            if not isinstance(sec[key], str):
                raise rd.fail(f"output.{key}", f"expected a string, got {sec[key]!r}")
            kw[key] = sec[key]
    try:
        return OutputConfig(**kw)
    except ValueError as exc:
        raise rd.fail("output.format", str(exc)) from None


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    """Parse and validate a run file.

    Raises:
        ConfigError: with ``source:line: field: reason``.
    """
    try:
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else 1
        raise ConfigError(f"{source}:{line}: malformed YAML: {getattr(exc, 'problem', exc)}") from None
    if root is None:
        raise ConfigError(f"{source}:1: empty configuration")
    marks: dict[str, int] = {}
    data = _construct(root, "", marks)
    if not isinstance(data, dict):
        raise ConfigError(f"{source}:1: top level must be a mapping")
    rd = _Reader(data, marks, source)
    unknown = sorted(set(data) - set(_FIELDS))
    if unknown:
        raise rd.fail(unknown[0], f"unknown section (allowed: {', '.join(_FIELDS)})")
    return RunConfig(_market(rd), _pricing(rd), _output(rd), source)


def load_config(path: str | Path) -> RunConfig:
    """Read a run file from disk, or a bundled one by name (see :data:`BUNDLED`)."""
    if str(path) in BUNDLED:
        return bundled_config(str(path))
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read configuration: {exc.strerror}") from None
    return parse_config(text, str(p))


def bundled_config(name: str) -> RunConfig:
    if name not in BUNDLED:
        raise ConfigError(f"no bundled configuration named {name!r}")
    text = resources.files(__package__).joinpath("configs", f"{name}.yaml").read_text()
    return parse_config(text, f"{name}.yaml")
