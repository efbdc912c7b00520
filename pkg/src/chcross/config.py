"""``key = value`` run configuration and the small field-expression language.

Expressions may use numeric literals, ``x``, ``y``, ``pi``, the operators
``+ - * /``, parentheses, and ``cos``/``sin``.  They are parsed with
:mod:`ast` and compiled into vectorised callables; nothing is ``eval``-ed.
"""

from __future__ import annotations

import ast
import math
from dataclasses import asdict, dataclass, fields
from typing import Callable, Optional

import numpy as np

from .errors import ArgumentError
from .initial_data import PRESETS, random_perturbation
from .potential import Potential

__all__ = ["ConfigError", "RunConfig", "parse_config", "parse_expression", "format_config"]


class ConfigError(ArgumentError):
    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
}
_FUNCS = {"cos": np.cos, "sin": np.sin}


def _compile(node: ast.AST, allow_xy: bool) -> Callable:
    if isinstance(node, ast.Expression):
        return _compile(node.body, allow_xy)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        v = float(node.value)
        return lambda x, y: v
    if isinstance(node, ast.Name):
        if node.id == "pi":
            return lambda x, y: math.pi
        if allow_xy and node.id == "x":
            return lambda x, y: x
        if allow_xy and node.id == "y":
            return lambda x, y: y
        raise ArgumentError(f"unknown name {node.id!r}")
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        op = _BINOPS[type(node.op)]
        a, b = _compile(node.left, allow_xy), _compile(node.right, allow_xy)
        return lambda x, y: op(a(x, y), b(x, y))
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        a = _compile(node.operand, allow_xy)
        sign = -1.0 if isinstance(node.op, ast.USub) else 1.0
        return lambda x, y: sign * a(x, y)
    if (
        isinstance(node, ast.Call)
        and isinstance(node.func, ast.Name)
        and node.func.id in _FUNCS
        and len(node.args) == 1
        and not node.keywords
    ):
        fn, a = _FUNCS[node.func.id], _compile(node.args[0], allow_xy)
        return lambda x, y: fn(a(x, y))
    raise ArgumentError(f"unsupported expression element: {ast.dump(node)[:40]}")


def parse_expression(text: str, allow_xy: bool = True) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """Compile ``text`` into ``f(x, y)``; raises :class:`ArgumentError` on bad input."""
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ArgumentError(f"cannot parse expression {text!r}") from exc
    fn = _compile(tree, allow_xy)

    def field_fn(x, y):
        return np.broadcast_to(np.asarray(fn(x, y), dtype=float), np.shape(x))

    field_fn.source = text.strip()
    return field_fn


def _number(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        pass
    try:
        return float(parse_expression(text, allow_xy=False)(0.0, 0.0))
    except ArgumentError:
        raise ValueError(f"not a number: {text!r}") from None


@dataclass
class RunConfig:
    """Every field maps to one config key of the same name."""

    x0: float = 0.0
    x1: float = 2 * math.pi
    y0: float = 0.0
    y1: float = 2 * math.pi
    nx: int = 128
    ny: int = 128
    tau: float = 1e-3
    T: float = 0.128
    eps: float = 0.3
    S: float = 1.0
    g: float = 1.0
    # "none" or a truncation level M >= 1
    truncation: Optional[float] = None
    K1: Optional[float] = None
    K2: Optional[float] = None
    initial: str = "paper-exp1"
    phi0: Optional[str] = None
    c0: Optional[str] = None
    phi_mean: float = 0.3
    c_mean: float = 0.5
    noise: float = 0.05
    seed: int = 0
    snapshot_every: int = 0
    out: str = "out"
    tau_ref: Optional[float] = None
    n_ref: Optional[int] = None
    sweep: Optional[tuple[float, ...]] = None

    def potential(self) -> Potential:
        return Potential(self.truncation)

    def initial_fields(self):
        """``(phi0, c0)`` callables after applying expression overrides."""
        if self.initial in PRESETS:
            phi, c = PRESETS[self.initial]
        elif self.initial == "random":
            phi = random_perturbation(self.phi_mean, self.noise, self.seed)
            c = random_perturbation(self.c_mean, self.noise, self.seed + 1)
        elif self.initial == "constant":
            phi = parse_expression(repr(self.phi_mean))
            c = parse_expression(repr(self.c_mean))
        else:
            raise ConfigError(f"unknown initial condition {self.initial!r}")
        if self.phi0 is not None:
            phi = parse_expression(self.phi0)
        if self.c0 is not None:
            c = parse_expression(self.c0)
        return phi, c


_INT_KEYS = {"nx", "ny", "seed", "snapshot_every", "n_ref"}
_STR_KEYS = {"initial", "phi0", "c0", "out"}
_OPTIONAL = {"truncation", "K1", "K2", "tau_ref", "n_ref", "sweep"}
_KEYS = {f.name for f in fields(RunConfig)}


def _convert(key: str, raw: str):
    if key in ("phi0", "c0"):
        if raw.lower() == "none":
            return None
        parse_expression(raw)
        return raw
    if key in _STR_KEYS:
        return raw
    if key in _OPTIONAL and raw.lower() == "none":
        return None
    if key == "sweep":
        return tuple(_number(v) for v in raw.split(",") if v.strip())
    if key in _INT_KEYS:
        v = _number(raw)
        if not float(v).is_integer():
            raise ValueError(f"{key} must be an integer")
        return int(v)
    return _number(raw)


def parse_config(text: str, base: Optional[RunConfig] = None) -> RunConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if not raw:
            raise ConfigError(f"missing value for {key!r}", lineno)
        try:
            values[key] = _convert(key, raw)
        except (ValueError, ArgumentError) as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", lineno) from None
    cfg = base if base is not None else RunConfig()
    return RunConfig(**{**asdict(cfg), **values})


def _format_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, tuple):
        return ", ".join(repr(float(x)) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_config(cfg: RunConfig, only: Optional[set[str]] = None) -> str:
    """Serialise ``cfg`` back into ``key = value`` text."""
    lines = []
    for f in fields(cfg):
        if only is not None and f.name not in only:
            continue
        lines.append(f"{f.name} = {_format_value(getattr(cfg, f.name))}")
    return "\n".join(lines) + "\n"
