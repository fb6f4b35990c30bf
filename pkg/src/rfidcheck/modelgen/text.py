"""Reading and writing guarded-command models in their textual form.

Example::

    dtmc

    const double p = 0.3;

    module walker
      var x : [0..1] init 0;
      [step] x=0 -> p:(x'=1) + 1-p:true;
    endmodule

    label "done" = x=1;

    rewards "steps"
      x=0 : 1;
      [step] true : 2;
    endrewards

The ``var`` keyword is optional. Variable bounds are evaluated with the
constant definitions that precede the module.
"""

from lark import Token, v_args
from lark.exceptions import UnexpectedInput, VisitError
from pathlib import Path
from typing import IO, Any, List, Optional, Tuple, Union

from rfidcheck.errors import ModelError, ModelSyntaxError

from .expressions import Expression, Literal, evaluate_constant, format_expression
from .model import (
    Command,
    GuardedCommandModule,
    Model,
    RewardItem,
    RewardSpec,
    Update,
    Variable,
)
from .syntax import ExpressionBuilder, get_parser, syntax_error_from

__all__ = ("dump_model", "format_model", "load_model", "parse_model")


def _unquote(token: Token) -> str:
    return str(token)[1:-1]


class ModelBuilder(ExpressionBuilder):
    """Lowers the parse tree of a model into a :class:`Model`.

    Declarations are visited in the order they appear in the text, so
    variable bounds see the constants defined before them.
    """

    def __init__(self):
        super().__init__()
        self.result = Model()

    def model(self, _) -> Model:
        return self.result

    def _integer(self, expr: Expression, what: str) -> int:
        value = evaluate_constant(expr, self.result.constant_values())
        if isinstance(value, bool) or (
            isinstance(value, float) and not value.is_integer()
        ):
            raise ModelError(f"{what} must be an integer")
        return int(value)

    @v_args(inline=True)
    def const_type(self, token: Token) -> str:
        return str(token)

    def constant(self, children: List[Any]) -> None:
        kind: Optional[str] = children[0] if len(children) == 3 else None
        name, value = str(children[-2]), children[-1]
        if name in self.result.constants:
            raise ModelError(f"constant {name!r} defined twice")
        self.result.constants[name] = value
        if kind:
            self.result.constant_types[name] = kind

    @v_args(inline=True)
    def formula(self, name: Token, value: Expression) -> None:
        self.result.formulas[str(name)] = value

    @v_args(inline=True)
    def label(self, name: Token, value: Expression) -> None:
        self.result.labels[_unquote(name)] = value

    def variable(self, children: List[Any]) -> Variable:
        name = str(children[0])
        lo = self._integer(children[1], f"lower bound of {name!r}")
        hi = self._integer(children[2], f"upper bound of {name!r}")
        init = lo
        if len(children) > 3:
            init = self._integer(children[3], f"initial value of {name!r}")
        return Variable(name, lo, hi, init)

    def action(self, children: List[Token]) -> str:
        return str(children[0]) if children else ""

    @v_args(inline=True)
    def command(
        self, action: str, guard: Expression, updates: Tuple[Update, ...]
    ) -> Command:
        return Command(guard, updates, action or None)

    def updates(self, children: List[Update]) -> Tuple[Update, ...]:
        return tuple(children)

    @v_args(inline=True)
    def weighted_update(
        self, probability: Expression, assignments: Tuple[Tuple[str, Expression], ...]
    ) -> Update:
        return Update(probability, assignments)

    @v_args(inline=True)
    def certain_update(
        self, assignments: Tuple[Tuple[str, Expression], ...]
    ) -> Update:
        return Update(Literal(1), assignments)

    def no_assignments(self, _) -> Tuple[Tuple[str, Expression], ...]:
        return ()

    def assignments(
        self, children: List[Tuple[str, Expression]]
    ) -> Tuple[Tuple[str, Expression], ...]:
        return tuple(children)

    @v_args(inline=True)
    def assignment(self, name: Token, value: Expression) -> Tuple[str, Expression]:
        return str(name), value

    def module(self, children: List[Any]) -> None:
        name, items = str(children[0]), children[1:]
        variables = [item for item in items if isinstance(item, Variable)]
        commands = [item for item in items if isinstance(item, Command)]
        self.result.modules.append(
            GuardedCommandModule.create(name, variables, commands)
        )

    def reward_item(self, children: List[Any]) -> RewardItem:
        action: Optional[str] = children[0] if len(children) == 3 else None
        return RewardItem(children[-2], children[-1], action)

    def rewards(self, children: List[Any]) -> None:
        name, items = _unquote(children[0]), children[1:]
        self.result.rewards.append(RewardSpec(name, tuple(items)))


def parse_model(text: str) -> Model:
    """Parses a guarded-command model.

    Raises:
        ModelSyntaxError: if the text is malformed or a declaration is
            invalid; the message names the offending line
        ModelError: if names clash across declarations
    """
    try:
        tree = get_parser().parse(text, start="model")
    except UnexpectedInput as ex:
        raise syntax_error_from(ex, text) from None

    try:
        model = ModelBuilder().transform(tree)
    except VisitError as ex:
        if not isinstance(ex.orig_exc, ModelError):
            raise
        line = getattr(ex.obj.meta, "line", None)
        raise ModelSyntaxError(str(ex.orig_exc), line=line) from None

    model.validate()
    return model


def load_model(fp: Union[str, Path, IO[str]]) -> Model:
    """Reads a guarded-command model from a file or a file-like object."""
    if isinstance(fp, (str, Path)):
        text = Path(fp).read_text(encoding="utf-8")
    else:
        text = fp.read()
    return parse_model(text)


def _format_update(update: Update) -> str:
    if update.assignments:
        body = " & ".join(
            f"({name}'={format_expression(value)})"
            for name, value in update.assignments
        )
    else:
        body = "true"
    return f"{format_expression(update.probability)} : {body}"


def format_model(model: Model) -> str:
    """Formats a model in the textual form read by :func:`parse_model`."""
    lines: List[str] = ["dtmc", ""]

    if model.constants:
        for name, value in model.constants.items():
            kind = model.constant_types.get(name)
            prefix = f"const {kind} " if kind else "const "
            lines.append(f"{prefix}{name} = {format_expression(value)};")
        lines.append("")

    if model.formulas:
        for name, value in model.formulas.items():
            lines.append(f"formula {name} = {format_expression(value)};")
        lines.append("")

    for module in model.modules:
        lines.append(f"module {module.name}")
        for var in module.variables:
            lines.append(f"  {var.name} : [{var.lo}..{var.hi}] init {var.init};")
        if module.variables and module.commands:
            lines.append("")
        for command in module.commands:
            updates = " + ".join(_format_update(u) for u in command.updates)
            lines.append(
                f"  [{command.action or ''}] {format_expression(command.guard)} "
                f"-> {updates};"
            )
        lines.append("endmodule")
        lines.append("")

    if model.labels:
        for name, expr in model.labels.items():
            lines.append(f'label "{name}" = {format_expression(expr)};')
        lines.append("")

    for spec in model.rewards:
        lines.append(f'rewards "{spec.name}"')
        for item in spec.items:
            prefix = f"[{item.action}] " if item.action is not None else ""
            lines.append(
                f"  {prefix}{format_expression(item.guard)} : "
                f"{format_expression(item.value)};"
            )
        lines.append("endrewards")
        lines.append("")

    return "\n".join(lines).rstrip("\n") + "\n"


def dump_model(model: Model, fp: Union[str, Path, IO[str]]) -> None:
    """Writes a model to a file or a file-like object."""
    text = format_model(model)
    if isinstance(fp, (str, Path)):
        Path(fp).write_text(text, encoding="utf-8")
    else:
        fp.write(text)
