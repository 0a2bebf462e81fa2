"""
Potentials and Density Expressions

Closed-form scalar fields are written as expressions over named variables
(x1, x2 for potentials and densities, s for segment arclength) and compiled by a
small recursive-descent parser with constant folding. Sampled potentials are
read from .npz grids and interpolated bilinearly.

Grammar:
    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('+' | '-') unary | power
    power  := atom (('^' | '**') unary)?
    atom   := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'

Functions: exp, sin, cos, abs, indicator(x, lo, hi) (1 on the closed interval).
Constants: pi, e.
"""

import logging
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Sequence, Tuple, Union

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .exceptions import ConfigError

logger = logging.getLogger(__name__)

_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|([A-Za-z_][A-Za-z_0-9]*)|(\*\*|[-+*/^(),]))")

CONSTANTS = {"pi": math.pi, "e": math.e}


def _indicator(x, lo, hi):
    x = np.asarray(x, dtype=float)
    return ((x >= lo) & (x <= hi)).astype(float)


FUNCTIONS: Dict[str, Tuple[int, Callable]] = {
    "exp": (1, np.exp),
    "sin": (1, np.sin),
    "cos": (1, np.cos),
    "abs": (1, np.abs),
    "indicator": (3, _indicator),
}

_BINARY = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "/": np.divide,
    "^": np.power,
}


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    name: str
    args: Tuple["Node", ...]


Node = Union[Const, Var, Neg, BinOp, Call]


def _fold(node: Node) -> Node:
    """Replace constant subtrees by their value."""
    if isinstance(node, Neg) and isinstance(node.operand, Const):
        return Const(-node.operand.value)
    if isinstance(node, BinOp) and isinstance(node.left, Const) and isinstance(node.right, Const):
        with np.errstate(all="ignore"):
            return Const(float(_BINARY[node.op](node.left.value, node.right.value)))
    if isinstance(node, Call) and all(isinstance(a, Const) for a in node.args):
        _, fn = FUNCTIONS[node.name]
        return Const(float(fn(*(a.value for a in node.args))))
    return node


class _Parser:
    def __init__(self, source: str, variables: Sequence[str]):
        self.source = source
        self.variables = set(variables)
        self.tokens: List[Tuple[str, str, int]] = []
        pos = 0
        source = source.rstrip()
        while pos < len(source):
            match = _TOKEN.match(source, pos)
            if not match or match.end() == pos:
                raise ConfigError(f"unexpected character at position {pos} in expression '{self.source}'")
            number, name, op = match.groups()
            if number is not None:
                self.tokens.append(("num", number, pos))
            elif name is not None:
                self.tokens.append(("name", name, pos))
            else:
                self.tokens.append(("op", op, pos))
            pos = match.end()
        self.index = 0

    def _peek(self) -> Tuple[str, str, int]:
        if self.index < len(self.tokens):
            return self.tokens[self.index]
        return ("end", "", len(self.source))

    def _take(self) -> Tuple[str, str, int]:
        tok = self._peek()
        self.index += 1
        return tok

    def _expect(self, op: str) -> None:
        kind, value, pos = self._take()
        if kind != "op" or value != op:
            raise ConfigError(f"expected '{op}' at position {pos} in expression '{self.source}'")

    def parse(self) -> Node:
        node = self._expr()
        kind, value, pos = self._peek()
        if kind != "end":
            raise ConfigError(f"unexpected '{value}' at position {pos} in expression '{self.source}'")
        return node

    def _expr(self) -> Node:
        node = self._term()
        while self._peek()[0] == "op" and self._peek()[1] in "+-":
            op = self._take()[1]
            node = _fold(BinOp(op, node, self._term()))
        return node

    def _term(self) -> Node:
        node = self._unary()
        while self._peek()[0] == "op" and self._peek()[1] in ("*", "/"):
            op = self._take()[1]
            node = _fold(BinOp(op, node, self._unary()))
        return node

    def _unary(self) -> Node:
        kind, value, _ = self._peek()
        if kind == "op" and value in "+-":
            self._take()
            operand = self._unary()
            return operand if value == "+" else _fold(Neg(operand))
        return self._power()

    def _power(self) -> Node:
        node = self._atom()
        kind, value, _ = self._peek()
        if kind == "op" and value in ("^", "**"):
            self._take()
            node = _fold(BinOp("^", node, self._unary()))
        return node

    def _atom(self) -> Node:
        kind, value, pos = self._take()
        if kind == "num":
            return Const(float(value))
        if kind == "op" and value == "(":
            node = self._expr()
            self._expect(")")
            return node
        if kind == "name":
            if self._peek()[:2] == ("op", "("):
                if value not in FUNCTIONS:
                    raise ConfigError(f"unknown function '{value}' at position {pos}")
                self._take()
                args = [self._expr()]
                while self._peek()[:2] == ("op", ","):
                    self._take()
                    args.append(self._expr())
                self._expect(")")
                arity, _ = FUNCTIONS[value]
                if len(args) != arity:
                    raise ConfigError(f"{value} takes {arity} argument(s), got {len(args)}")
                return _fold(Call(value, tuple(args)))
            if value in self.variables:
                return Var(value)
            if value in CONSTANTS:
                return Const(CONSTANTS[value])
            raise ConfigError(f"unknown name '{value}' at position {pos} in expression '{self.source}'")
        raise ConfigError(f"unexpected '{value or 'end of input'}' at position {pos} in expression '{self.source}'")


def _evaluate(node: Node, env: Dict[str, np.ndarray]) -> np.ndarray:
    if isinstance(node, Const):
        return np.asarray(node.value)
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Neg):
        return -_evaluate(node.operand, env)
    if isinstance(node, BinOp):
        return _BINARY[node.op](_evaluate(node.left, env), _evaluate(node.right, env))
    _, fn = FUNCTIONS[node.name]
    return fn(*(_evaluate(a, env) for a in node.args))


class Expression:
    """
    Compiled expression over a fixed set of variable names.

    Example:
        Expression("2*indicator(x1, -1, 1)", ("x1", "x2"))(x1=xs, x2=ys)
    """

    def __init__(self, source: str, variables: Sequence[str] = ("x1", "x2")):
        self.source = source
        self.variables = tuple(variables)
        self.tree = _Parser(source, self.variables).parse()

    @property
    def is_constant(self) -> bool:
        return isinstance(self.tree, Const)

    @property
    def constant_value(self) -> float:
        if not self.is_constant:
            raise ValueError(f"expression '{self.source}' is not constant")
        return self.tree.value

    def __call__(self, **values) -> np.ndarray:
        arrays = {k: np.asarray(v, dtype=float) for k, v in values.items()}
        shape = np.broadcast(*arrays.values()).shape if arrays else ()
        with np.errstate(all="ignore"):
            out = _evaluate(self.tree, arrays)
        return np.broadcast_to(np.asarray(out, dtype=float), shape).copy()


class Potential:
    """Nonnegative scalar field V(x1, x2) on the closed strip."""

    description: str = ""

    def __call__(self, x1, x2) -> np.ndarray:
        raise NotImplementedError

    def scaled(self, factor: float) -> "Potential":
        return ScaledPotential(self, factor)

    def with_factor(self, factor: Callable[[np.ndarray, np.ndarray], np.ndarray], label: str) -> "Potential":
        return ProductPotential(self, factor, label)

    @property
    def is_zero(self) -> bool:
        return False


class ExpressionPotential(Potential):
    def __init__(self, source: str):
        self.expression = Expression(source, ("x1", "x2"))
        self.description = source

    def __call__(self, x1, x2) -> np.ndarray:
        return self.expression(x1=x1, x2=x2)

    @property
    def is_zero(self) -> bool:
        return self.expression.is_constant and self.expression.constant_value == 0.0


class GridPotential(Potential):
    """
    Bilinear interpolation of samples on a tensor grid; zero outside the grid box.
    """

    def __init__(self, x1: np.ndarray, x2: np.ndarray, values: np.ndarray, description: str = "grid"):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        values = np.asarray(values, dtype=float)
        if values.shape != (len(x1), len(x2)):
            raise ConfigError(f"grid values have shape {values.shape}, expected {(len(x1), len(x2))}")
        self.interpolator = RegularGridInterpolator((x1, x2), values, method="linear",
                                                    bounds_error=False, fill_value=0.0)
        self.description = description

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "GridPotential":
        path = Path(path)
        try:
            data = np.load(path)
        except (OSError, ValueError) as e:
            raise ConfigError(f"cannot read potential grid {path}: {e}") from e
        missing = {"x1", "x2", "values"} - set(data.files)
        if missing:
            raise ConfigError(f"potential grid {path} is missing arrays {sorted(missing)}")
        return cls(data["x1"], data["x2"], data["values"], description=str(path))

    def __call__(self, x1, x2) -> np.ndarray:
        x1, x2 = np.broadcast_arrays(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
        points = np.stack([x1.ravel(), x2.ravel()], axis=1)
        return self.interpolator(points).reshape(x1.shape)


class ScaledPotential(Potential):
    def __init__(self, base: Potential, factor: float):
        self.base = base
        self.factor = float(factor)
        self.description = f"{self.factor:g}*({base.description})"

    def __call__(self, x1, x2) -> np.ndarray:
        return self.factor * self.base(x1, x2)

    @property
    def is_zero(self) -> bool:
        return self.factor == 0.0 or self.base.is_zero


class ProductPotential(Potential):
    def __init__(self, base: Potential, factor: Callable, label: str):
        self.base = base
        self.factor = factor
        self.description = f"({base.description})*{label}"

    def __call__(self, x1, x2) -> np.ndarray:
        return self.base(x1, x2) * self.factor(x1, x2)


def zero_potential() -> Potential:
    return ExpressionPotential("0")


def check_nonnegative(potential: Potential, x1: np.ndarray, x2: np.ndarray) -> None:
    """
    Raises:
        ConfigError: if V is negative or non-finite at any sample point
    """
    values = potential(x1, x2)
    bad = ~np.isfinite(values) | (values < 0)
    if np.any(bad):
        i = int(np.flatnonzero(bad.ravel())[0])
        p = (float(np.ravel(x1)[i]), float(np.ravel(x2)[i]), float(values.ravel()[i]))
        raise ConfigError(f"potential {potential.description!r} is negative or non-finite at "
                          f"(x1={p[0]:g}, x2={p[1]:g}): {p[2]:g}")
