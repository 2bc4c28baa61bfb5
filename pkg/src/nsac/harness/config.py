"""Line-based ``key = value`` run configuration."""

from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass, field, fields, replace

from ..allen_cahn import ModeError, check_mode
from ..channel import GridError, build_grid
from ..energetics import PhysParams

PRESETS = ("stationary", "perturbed-flat", "band", "snapshot")


class ConfigError(ValueError):
    """Invalid configuration; the message names the key and line."""


@dataclass(frozen=True)
class RunConfig:
    nx: int
    nz: int
    dt: float
    t_end: float
    dim: int = 2
    ny: int = 0
    lx: float = 2 * math.pi
    ly: float = 2 * math.pi
    params: PhysParams = field(default_factory=PhysParams)
    mode: str = "dynamic"
    picard_iters: int = 1
    init: str = "perturbed-flat"
    init_path: str = ""
    init_mean: float = 0.9
    init_amplitude: float = 0.05
    init_wavenumber: int = 1
    init_velocity: float = 0.0
    init_noise: float = 0.0
    init_sign: float = 1.0
    rescale_to_eps0: bool = False
    output_dir: str = "output"
    output_every: int = 1
    seed: int = 0
    decay_t0: float = 0.5

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_end / self.dt)))

    def grid(self):
        if self.dim == 2:
            return build_grid(2, [self.nx], self.nz, [self.lx])
        return build_grid(3, [self.nx, self.ny], self.nz, [self.lx, self.ly])

    def with_params(self, **changes) -> "RunConfig":
        return replace(self, params=replace(self.params, **changes))


_PARAM_KEYS = {f.name for f in fields(PhysParams)}
_RUN_FIELDS = {f.name: f for f in fields(RunConfig) if f.name != "params"}
_INT_KEYS = {"nx", "nz", "dim", "ny", "picard_iters", "init_wavenumber", "output_every", "seed"}
_BOOL_KEYS = {"rescale_to_eps0"}
_STR_KEYS = {"mode", "init", "init_path", "output_dir"}
_REQUIRED = ("nx", "nz", "dt", "t_end")

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}


def _eval_number(text: str) -> float:
    """Evaluate a number or small arithmetic expression in ``pi``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        raise ValueError(text)

    return ev(ast.parse(text.strip(), mode="eval"))


def _convert(key: str, raw: str, lineno: int):
    where = f"key '{key}' (line {lineno})"
    if key in _STR_KEYS:
        return raw
    if key in _BOOL_KEYS:
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{where}: expected a boolean, got {raw!r}")
    if key in _INT_KEYS:
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{where}: expected an integer, got {raw!r}") from None
    try:
        return _eval_number(raw)
    except (ValueError, SyntaxError, ZeroDivisionError):
        raise ConfigError(f"{where}: expected a number, got {raw!r}") from None


def parse_config(text: str) -> RunConfig:
    """Parse and validate a configuration text.

    Lines are ``key = value``; ``#`` starts a comment.  Omitted keys take the
    documented defaults, except ``gamma`` which defaults to 0.1 only for
    ``mode = dynamic`` and to 0 otherwise.
    """
    values: dict[str, object] = {}
    lines: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _RUN_FIELDS and key not in _PARAM_KEYS:
            raise ConfigError(f"unknown key '{key}' (line {lineno})")
        if key in lines:
            raise ConfigError(f"duplicate key '{key}' (line {lineno}, first on line {lines[key]})")
        values[key] = _convert(key, raw, lineno)
        lines[key] = lineno

    def line_of(key):
        return f"line {lines[key]}" if key in lines else "default"

    for key in _REQUIRED:
        if key not in values:
            raise ConfigError(f"missing required key '{key}'")

    mode = values.get("mode", "dynamic")
    pvals = {k: values.pop(k) for k in list(values) if k in _PARAM_KEYS}
    pvals.setdefault("gamma", 0.1 if mode == "dynamic" else 0.0)
    try:
        params = PhysParams(**pvals)
    except ValueError as exc:
        name = str(exc).split()[0]
        raise ConfigError(f"key '{name}' ({line_of(name)}): {exc}") from None
    try:
        check_mode(mode, params)
    except ModeError as exc:
        raise ConfigError(f"key 'mode' ({line_of('mode')}): {exc}") from None

    cfg = RunConfig(params=params, **values)
    _validate(cfg, line_of)
    return cfg


def _validate(cfg: RunConfig, line_of) -> None:
    def fail(key, msg):
        raise ConfigError(f"key '{key}' ({line_of(key)}): {msg}")

    if cfg.dim not in (2, 3):
        fail("dim", f"must be 2 or 3, got {cfg.dim}")
    if cfg.dim == 3 and cfg.ny == 0:
        fail("ny", "required when dim = 3")
    if cfg.dim == 2 and cfg.ny != 0:
        fail("ny", "only allowed when dim = 3")
    try:
        cfg.grid()
    except GridError as exc:
        key = "nz" if "wall-normal" in str(exc) else ("ny" if "dimension y" in str(exc) else "nx")
        if "invalid period" in str(exc):
            key = "lx" if "dimension x" in str(exc) else "ly"
        fail(key, str(exc))
    if not cfg.dt > 0:
        fail("dt", f"must be > 0, got {cfg.dt}")
    if not cfg.t_end >= cfg.dt:
        fail("t_end", f"must be >= dt, got {cfg.t_end}")
    if cfg.picard_iters < 1:
        fail("picard_iters", f"must be >= 1, got {cfg.picard_iters}")
    if cfg.output_every < 1:
        fail("output_every", f"must be >= 1, got {cfg.output_every}")
    if cfg.init not in PRESETS:
        fail("init", f"unknown preset {cfg.init!r}; expected one of {PRESETS}")
    if cfg.init == "snapshot" and not cfg.init_path:
        fail("init_path", "required when init = snapshot")
    if cfg.init_sign not in (1.0, -1.0):
        fail("init_sign", f"must be +1 or -1, got {cfg.init_sign}")
    if cfg.init_wavenumber < 0:
        fail("init_wavenumber", f"must be >= 0, got {cfg.init_wavenumber}")
    if cfg.decay_t0 < 0:
        fail("decay_t0", f"must be >= 0, got {cfg.decay_t0}")


def serialize_config(cfg: RunConfig) -> str:
    """Render a config as text that :func:`parse_config` maps back to ``cfg``."""
    out = []
    for name in _RUN_FIELDS:
        value = getattr(cfg, name)
        if name == "ny" and cfg.dim == 2:
            continue
        out.append(f"{name} = {_fmt(value)}")
    for name in _PARAM_KEYS_ORDERED:
        out.append(f"{name} = {_fmt(getattr(cfg.params, name))}")
    return "\n".join(out) + "\n"


_PARAM_KEYS_ORDERED = [f.name for f in fields(PhysParams)]


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
