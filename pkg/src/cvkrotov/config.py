"""Experiment configuration: INI-style files, presets and ``section.key=value`` overrides."""

import configparser
from dataclasses import dataclass, fields, replace
from typing import Optional

from .krotov import SHAPES, KrotovConfig
from .optomech import Axis, BathSpec, OptomechParams, Preset, preset


class ConfigError(ValueError):
    pass


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional_int(text: str) -> Optional[int]:
    return None if text.strip().lower() in ("", "none", "off") else int(text)


def _optional_str(text: str) -> Optional[str]:
    return text.strip() or None


@dataclass(frozen=True)
class ExperimentConfig:
    omega_m: float = 1.0
    G: float = 0.1
    r: float = 1.25
    t_f: float = 60.0
    n_steps: int = 6000
    lambda_a: float = 8000.0
    tol_d2: float = 1e-4
    max_iters: int = 2000
    spectral_cutoff: Optional[int] = None
    shape: str = "blackman"
    bath: bool = False
    eta: float = 0.5
    omega_shift: float = 0.0
    lambda_o: float = 0.0
    lambda_m: float = 0.0
    markov: bool = False
    guess_value: float = 0.0
    guess_file: Optional[str] = None
    out_dir: str = "out"
    seed: int = 0

    def validate(self) -> "ExperimentConfig":
        if not self.omega_m > 0:
            raise ConfigError(f"model.omega_m must be positive, got {self.omega_m}")
        if not self.t_f > 0:
            raise ConfigError(f"schedule.t_f must be positive, got {self.t_f}")
        if self.n_steps < 2:
            raise ConfigError(f"schedule.n_steps must be >= 2, got {self.n_steps}")
        if self.shape not in SHAPES:
            raise ConfigError(f"optimizer.shape must be one of {SHAPES}, got {self.shape!r}")
        if self.bath and not self.markov and not self.eta > 0:
            raise ConfigError(f"bath.eta must be positive, got {self.eta}")
        if self.spectral_cutoff is not None and not 1 <= self.spectral_cutoff <= self.n_steps:
            raise ConfigError(f"optimizer.spectral_cutoff out of range: {self.spectral_cutoff}")
        try:
            self.krotov()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self

    def params(self) -> OptomechParams:
        return OptomechParams(self.omega_m, self.G)

    def krotov(self) -> KrotovConfig:
        return KrotovConfig(self.lambda_a, self.tol_d2, self.max_iters, self.spectral_cutoff)

    def bath_spec(self) -> Optional[BathSpec]:
        if not self.bath:
            return None
        return BathSpec(self.lambda_o, self.lambda_m, self.eta, self.omega_shift, self.markov)


# dotted config key -> (attribute, parser)
SCHEMA = {
    "model.omega_m": ("omega_m", float),
    "model.G": ("G", float),
    "target.r": ("r", float),
    "schedule.t_f": ("t_f", float),
    "schedule.n_steps": ("n_steps", int),
    "optimizer.lambda_a": ("lambda_a", float),
    "optimizer.tol_d2": ("tol_d2", float),
    "optimizer.max_iters": ("max_iters", int),
    "optimizer.spectral_cutoff": ("spectral_cutoff", _optional_int),
    "optimizer.shape": ("shape", str),
    "bath.enabled": ("bath", _parse_bool),
    "bath.eta": ("eta", float),
    "bath.omega_shift": ("omega_shift", float),
    "bath.lambda_o": ("lambda_o", float),
    "bath.lambda_m": ("lambda_m", float),
    "bath.markov": ("markov", _parse_bool),
    "guess.value": ("guess_value", float),
    "guess.field_file": ("guess_file", _optional_str),
    "output.dir": ("out_dir", str),
    "run.seed": ("seed", int),
}

SCAN_KEYS = {
    f"scan.axis{i}{suffix}"
    for i in (1, 2)
    for suffix in ("", "_min", "_max", "_count")
}

SCAN_PARAMS = {k for k, (_, parser) in SCHEMA.items() if parser in (float, int)}


@dataclass(frozen=True)
class ScanSpec:
    axis1: Axis
    axis2: Axis
    template: ExperimentConfig

    def __post_init__(self):
        for ax in (self.axis1, self.axis2):
            if ax.name not in SCAN_PARAMS:
                raise ConfigError(f"cannot scan over {ax.name!r}")
            if ax.count < 2:
                raise ConfigError(f"axis {ax.name} needs at least 2 points")

    @property
    def replays_field(self) -> bool:
        """Bath scans replay one closed-system field instead of re-optimizing per point."""
        return any(ax.name.startswith("bath.") for ax in (self.axis1, self.axis2))

    def point(self, v1: float, v2: float) -> ExperimentConfig:
        cfg = self.template
        for ax, v in ((self.axis1, v1), (self.axis2, v2)):
            cfg = apply_overrides(cfg, {ax.name: repr(float(v))})
            if ax.name == "schedule.t_f":
                # keep the template time step
                dt = self.template.t_f / self.template.n_steps
                cfg = replace(cfg, n_steps=max(2, int(round(v / dt))))
        if self.replays_field:
            cfg = replace(cfg, bath=True)
        return cfg


def apply_overrides(cfg: ExperimentConfig, items: dict) -> ExperimentConfig:
    changes = {}
    for key, text in items.items():
        if key not in SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        attr, parser = SCHEMA[key]
        try:
            changes[attr] = parser(text)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from None
        if key.startswith("bath.") and key != "bath.enabled":
            changes.setdefault("bath", True)
    return replace(cfg, **changes)


def from_preset(p: Preset) -> ExperimentConfig:
    b = p.bath
    k = p.krotov
    return ExperimentConfig(
        omega_m=p.params.omega_m,
        G=p.params.G,
        r=p.r,
        t_f=p.t_f,
        n_steps=p.n_steps,
        lambda_a=k.lambda_a,
        tol_d2=k.tol_d2,
        max_iters=k.max_iters,
        spectral_cutoff=k.spectral_cutoff,
        shape=p.shape,
        bath=b is not None,
        eta=b.eta if b else 0.5,
        omega_shift=b.omega_shift if b else 0.0,
        lambda_o=b.lambda_o if b else 0.0,
        lambda_m=b.lambda_m if b else 0.0,
        markov=b.markov if b else False,
        guess_value=p.guess,
    )


def _read_ini(path: str) -> tuple[dict, dict]:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    parser.optionxform = str  # keep "G" distinct from "g"
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    items, scan = {}, {}
    for section in parser.sections():
        for key, value in parser.items(section):
            dotted = f"{section}.{key}"
            if dotted in SCAN_KEYS:
                scan[dotted] = value
            elif dotted in SCHEMA:
                items[dotted] = value
            else:
                raise ConfigError(f"unknown config key {dotted!r} in {path}")
    return items, scan


def parse_set(pairs) -> tuple[dict, dict]:
    items, scan = {}, {}
    for pair in pairs or ():
        key, sep, value = pair.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"--set expects section.key=value, got {pair!r}")
        if key in SCAN_KEYS:
            scan[key] = value.strip()
        elif key in SCHEMA:
            items[key] = value.strip()
        else:
            raise ConfigError(f"unknown config key {key!r}")
    return items, scan


def load(preset_name=None, config_path=None, sets=None, out_dir=None):
    """Build a validated config from a preset, a config file and overrides (in that order).

    Returns ``(config, scan_items, preset_or_None)``.
    """
    p = None
    cfg = ExperimentConfig()
    if preset_name:
        try:
            p = preset(preset_name)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        cfg = from_preset(p)
    scan = {}
    if config_path:
        items, scan_items = _read_ini(config_path)
        cfg = apply_overrides(cfg, items)
        scan.update(scan_items)
    items, scan_items = parse_set(sets)
    cfg = apply_overrides(cfg, items)
    scan.update(scan_items)
    if out_dir:
        cfg = replace(cfg, out_dir=out_dir)
    return cfg.validate(), scan, p


def build_scan(cfg: ExperimentConfig, scan_items: dict, p: Optional[Preset], resolution=None) -> ScanSpec:
    axes = list(p.axes) if p is not None and p.axes else [None, None]
    for i in (1, 2):
        name = scan_items.get(f"scan.axis{i}")
        base = axes[i - 1]
        if name is None and base is None:
            raise ConfigError(f"scan.axis{i} is not defined (use a *_scan preset or a [scan] section)")
        try:
            lo = float(scan_items.get(f"scan.axis{i}_min", base.lo if base else "nan"))
            hi = float(scan_items.get(f"scan.axis{i}_max", base.hi if base else "nan"))
            count = int(scan_items.get(f"scan.axis{i}_count", base.count if base else 24))
        except ValueError as exc:
            raise ConfigError(f"bad scan.axis{i} bounds: {exc}") from None
        if resolution is not None:
            count = resolution
        if not (lo == lo and hi == hi):
            raise ConfigError(f"scan.axis{i}_min and scan.axis{i}_max are required")
        try:
            axes[i - 1] = Axis(name or base.name, lo, hi, count)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    return ScanSpec(axes[0], axes[1], cfg)


def as_dict(cfg: ExperimentConfig) -> dict:
    return {f.name: getattr(cfg, f.name) for f in fields(cfg)}

