"""Navigation command language: grammar, parser, interpreter, attribute
extraction from natural-language commands, and the optional external
translator client.

Grammar::

    program := stmt*
    stmt    := IDENT '=' attrs_lit
             | FNAME '(' args? ')'
             | 'repeat' INT '{' stmt+ '}'
    args    := arg (',' arg)*
    arg     := STRING | NUMBER | 'none' | 'side' | IDENT | attrs_lit
    attrs_lit := 'attrs' '(' STRING ',' INT ',' (STRING | 'none') ')'

Comments run from '#' to end of line. Program files use the .nav extension.
"""

from __future__ import annotations

import logging
import re
import socket
from dataclasses import dataclass, field

from .nav import Agent

log = logging.getLogger(__name__)

TRANSLATE_TIMEOUT_S = 30.0


class NavSyntaxError(SyntaxError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


class NavRuntimeError(RuntimeError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


# -- AST ---------------------------------------------------------------------


@dataclass(frozen=True)
class AttrTriple:
    name: str
    instance_idx: int
    color: str | None


@dataclass(frozen=True)
class VarRef:
    name: str


class SideRef:
    """The `side` keyword: next side length of the active contour."""

    def __eq__(self, other):
        return isinstance(other, SideRef)

    def __hash__(self):
        return hash("side")

    def __repr__(self):
        return "SideRef()"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple
    line: int = 0
    col: int = 0

    def __eq__(self, other):
        return isinstance(other, Call) and (self.name, self.args) == (other.name, other.args)

    def __hash__(self):
        return hash((self.name, self.args))


@dataclass(frozen=True)
class Assign:
    var: str
    value: AttrTriple
    line: int = 0
    col: int = 0

    def __eq__(self, other):
        return isinstance(other, Assign) and (self.var, self.value) == (other.var, other.value)

    def __hash__(self):
        return hash((self.var, self.value))


@dataclass(frozen=True)
class Repeat:
    count: int
    body: tuple
    line: int = 0
    col: int = 0

    def __eq__(self, other):
        return isinstance(other, Repeat) and (self.count, self.body) == (other.count, other.body)

    def __hash__(self):
        return hash((self.count, self.body))


@dataclass
class NavProgram:
    statements: tuple

    def __eq__(self, other):
        return isinstance(other, NavProgram) and self.statements == other.statements


# Function name -> arity. Argument kinds are checked at interpretation time.
FUNCTIONS = {
    "get_nearest_obj_pos": 1,
    "get_obj_attributes": 3,
    "get_specified_obj_pos": 1,
    "get_nearest_obj_contour": 1,
    "move_to": 2,
    "move_to_object": 1,
    "move_to_left": 1,
    "move_to_right": 1,
    "with_object_on_left": 1,
    "with_object_on_right": 1,
    "move_in_between": 2,
    "turn": 1,
    "turn_absolute": 1,
    "face": 1,
    "move_north": 1,
    "move_south": 1,
    "move_east": 1,
    "move_west": 1,
    "move_forward": 1,
    "stop": 0,
}

KEYWORDS = {"repeat", "attrs", "side", "none"}


# -- lexer -------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t]+)
  | (?P<comment>\#[^\n]*)
  | (?P<nl>\n)
  | (?P<num>-?\d+(?:\.\d+)?)
  | (?P<str>"[^"\n]*"|'[^'\n]*')
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<sym>[(){},=])
    """,
    re.VERBOSE,
)


@dataclass
class _Token:
    kind: str
    value: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise NavSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        value = m.group()
        if kind == "nl":
            line += 1
            col = 1
        else:
            if kind not in ("ws", "comment"):
                tokens.append(_Token(kind, value, line, col))
            col += len(value)
        pos = m.end()
    tokens.append(_Token("eof", "", line, col))
    return tokens


# -- parser ------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str, value: str | None = None) -> _Token:
        tok = self.next()
        if tok.kind != kind or (value is not None and tok.value != value):
            want = value if value is not None else kind
            raise NavSyntaxError(f"expected {want!r}, got {tok.value!r}", tok.line, tok.col)
        return tok

    def parse_program(self) -> NavProgram:
        stmts = []
        while self.peek().kind != "eof":
            stmts.append(self.parse_stmt())
        return NavProgram(tuple(stmts))

    def parse_stmt(self):
        tok = self.peek()
        if tok.kind != "ident":
            raise NavSyntaxError(f"expected a statement, got {tok.value!r}", tok.line, tok.col)
        if tok.value == "repeat":
            return self.parse_repeat()
        # lookahead for assignment
        if self.tokens[self.pos + 1].kind == "sym" and self.tokens[self.pos + 1].value == "=":
            return self.parse_assign()
        return self.parse_call()

    def parse_repeat(self) -> Repeat:
        tok = self.expect("ident", "repeat")
        count_tok = self.next()
        if count_tok.kind != "num" or "." in count_tok.value or int(count_tok.value) < 1:
            raise NavSyntaxError(
                f"repeat count must be a positive integer, got {count_tok.value!r}",
                count_tok.line, count_tok.col,
            )
        self.expect("sym", "{")
        body = []
        while not (self.peek().kind == "sym" and self.peek().value == "}"):
            if self.peek().kind == "eof":
                raise NavSyntaxError("unterminated repeat block", tok.line, tok.col)
            body.append(self.parse_stmt())
        self.expect("sym", "}")
        if not body:
            raise NavSyntaxError("repeat body must not be empty", tok.line, tok.col)
        return Repeat(int(count_tok.value), tuple(body), tok.line, tok.col)

    def parse_assign(self) -> Assign:
        var_tok = self.next()
        if var_tok.value in KEYWORDS or var_tok.value in FUNCTIONS:
            raise NavSyntaxError(
                f"{var_tok.value!r} cannot be used as a variable name",
                var_tok.line, var_tok.col,
            )
        self.expect("sym", "=")
        head = self.peek()
        if head.kind != "ident" or head.value != "attrs":
            raise NavSyntaxError(
                "only attrs(...) results can be bound to a variable", head.line, head.col
            )
        value = self.parse_attrs_literal()
        return Assign(var_tok.value, value, var_tok.line, var_tok.col)

    def parse_attrs_literal(self) -> AttrTriple:
        self.expect("ident", "attrs")
        self.expect("sym", "(")
        name_tok = self.next()
        if name_tok.kind != "str":
            raise NavSyntaxError("attrs name must be a string", name_tok.line, name_tok.col)
        self.expect("sym", ",")
        idx_tok = self.next()
        if idx_tok.kind != "num" or "." in idx_tok.value or int(idx_tok.value) < 0:
            raise NavSyntaxError(
                "attrs instance index must be a non-negative integer", idx_tok.line, idx_tok.col
            )
        self.expect("sym", ",")
        color_tok = self.next()
        if color_tok.kind == "ident" and color_tok.value == "none":
            color = None
        elif color_tok.kind == "str":
            color = color_tok.value[1:-1]
            if color.lower() == "none":
                color = None
        else:
            raise NavSyntaxError(
                "attrs color must be a string or none", color_tok.line, color_tok.col
            )
        self.expect("sym", ")")
        return AttrTriple(name_tok.value[1:-1], int(idx_tok.value), color)

    def parse_call(self) -> Call:
        name_tok = self.next()
        name = name_tok.value
        if name not in FUNCTIONS:
            raise NavSyntaxError(f"unknown function {name!r}", name_tok.line, name_tok.col)
        self.expect("sym", "(")
        args = []
        if not (self.peek().kind == "sym" and self.peek().value == ")"):
            args.append(self.parse_arg())
            while self.peek().kind == "sym" and self.peek().value == ",":
                self.next()
                args.append(self.parse_arg())
        self.expect("sym", ")")
        if len(args) != FUNCTIONS[name]:
            raise NavSyntaxError(
                f"{name} takes {FUNCTIONS[name]} argument(s), got {len(args)}",
                name_tok.line, name_tok.col,
            )
        return Call(name, tuple(args), name_tok.line, name_tok.col)

    def parse_arg(self):
        tok = self.peek()
        if tok.kind == "num":
            self.next()
            return float(tok.value) if "." in tok.value else int(tok.value)
        if tok.kind == "str":
            self.next()
            return tok.value[1:-1]
        if tok.kind == "ident":
            if tok.value == "attrs":
                return self.parse_attrs_literal()
            self.next()
            if tok.value == "side":
                return SideRef()
            if tok.value == "none":
                return None
            if tok.value in FUNCTIONS or tok.value == "repeat":
                raise NavSyntaxError(
                    f"{tok.value!r} is not a valid argument", tok.line, tok.col
                )
            return VarRef(tok.value)
        raise NavSyntaxError(f"malformed argument {tok.value!r}", tok.line, tok.col)


def parse_program(text: str) -> NavProgram:
    return _Parser(text).parse_program()


# -- pretty printer ----------------------------------------------------------


def _format_arg(arg) -> str:
    if isinstance(arg, AttrTriple):
        color = f'"{arg.color}"' if arg.color is not None else "none"
        return f'attrs("{arg.name}", {arg.instance_idx}, {color})'
    if isinstance(arg, VarRef):
        return arg.name
    if isinstance(arg, SideRef):
        return "side"
    if arg is None:
        return "none"
    if isinstance(arg, str):
        return f'"{arg}"'
    if isinstance(arg, float) and arg.is_integer():
        return f"{arg:.1f}"
    return str(arg)


def pretty_print(program: NavProgram, indent: int = 0) -> str:
    lines = []
    pad = "    " * indent
    for stmt in program.statements:
        if isinstance(stmt, Assign):
            lines.append(f"{pad}{stmt.var} = {_format_arg(stmt.value)}")
        elif isinstance(stmt, Call):
            args = ", ".join(_format_arg(a) for a in stmt.args)
            lines.append(f"{pad}{stmt.name}({args})")
        elif isinstance(stmt, Repeat):
            lines.append(f"{pad}repeat {stmt.count} {{")
            lines.append(pretty_print(NavProgram(stmt.body), indent + 1))
            lines.append(f"{pad}}}")
    return "\n".join(lines)


# -- interpreter -------------------------------------------------------------


def interpret(program: NavProgram, agent: Agent):
    """Run a program against an agent. Halts on the first hard error,
    re-raised as NavRuntimeError with the statement's source span; the
    partial trajectory stays on the agent."""
    env: dict[str, object] = {}
    _run_block(program.statements, agent, env)
    return agent.trajectory


def _run_block(statements, agent: Agent, env: dict):
    for stmt in statements:
        if isinstance(stmt, Repeat):
            for _ in range(stmt.count):
                _run_block(stmt.body, agent, env)
            continue
        try:
            if isinstance(stmt, Assign):
                env[stmt.var] = agent.get_obj_attributes(
                    stmt.value.name, stmt.value.instance_idx, stmt.value.color
                )
            else:
                _run_call(stmt, agent, env)
        except (NavRuntimeError, NavSyntaxError):
            raise
        except Exception as exc:
            raise NavRuntimeError(str(exc), stmt.line, stmt.col) from exc


def _eval_arg(arg, agent: Agent, env: dict):
    if isinstance(arg, VarRef):
        if arg.name not in env:
            raise KeyError(f"undefined variable {arg.name!r}")
        return env[arg.name]
    if isinstance(arg, SideRef):
        return agent.next_contour_side()
    if isinstance(arg, AttrTriple):
        return agent.get_obj_attributes(arg.name, arg.instance_idx, arg.color)
    return arg


def _run_call(stmt: Call, agent: Agent, env: dict):
    args = [_eval_arg(a, agent, env) for a in stmt.args]
    if stmt.name == "move_to":
        agent.move_to((int(args[0]), int(args[1])))
    elif stmt.name in ("get_specified_obj_pos", "get_nearest_obj_contour",
                       "get_nearest_obj_pos", "get_obj_attributes"):
        getattr(agent, stmt.name)(*args)
    else:
        getattr(agent, stmt.name)(*args)


# -- attribute extraction ----------------------------------------------------


@dataclass
class AttrTuple:
    name: str
    instance_idx: int  # 0 = unspecified/nearest
    color: str | None
    span: tuple[int, int] = (0, 0)

    def as_triple(self) -> AttrTriple:
        return AttrTriple(self.name, self.instance_idx, self.color)


_ORDINAL_WORDS = {
    "first": 1, "second": 2, "third": 3, "fourth": 4, "fifth": 5,
    "sixth": 6, "seventh": 7, "eighth": 8, "ninth": 9, "tenth": 10,
    "nearest": 0,
}
_DIGIT_ORDINAL_RE = re.compile(r"^(\d+)(st|nd|rd|th)$")


def _ordinal_value(word: str) -> int | None:
    if word in _ORDINAL_WORDS:
        return _ORDINAL_WORDS[word]
    m = _DIGIT_ORDINAL_RE.match(word)
    if m:
        return int(m.group(1))
    return None


@dataclass
class ExtractionResult:
    attrs: list[AttrTuple] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def extract_attributes(command: str, categories, colors) -> ExtractionResult:
    """Best-effort attribute-tuple extraction from a command sentence.

    One tuple per recognized category noun, in order of appearance; an
    ordinal or color word applies to the next category noun after it.
    Case and trailing punctuation are ignored.
    """
    categories = {c.lower() for c in categories}
    colors = {c.lower() for c in colors}
    result = ExtractionResult()
    pending_ordinal: int | None = None
    pending_color: str | None = None
    for m in re.finditer(r"[A-Za-z0-9]+", command):
        word = m.group().lower()
        ordinal = _ordinal_value(word)
        if ordinal is not None:
            if pending_ordinal is not None:
                result.warnings.append(f"ordinal {word!r} overrides an earlier unattached ordinal")
            pending_ordinal = ordinal
        elif word in colors and word != "none":
            if pending_color is not None:
                result.warnings.append(f"color {word!r} overrides an earlier unattached color")
            pending_color = word
        elif word in categories:
            result.attrs.append(
                AttrTuple(word, pending_ordinal or 0, pending_color, (m.start(), m.end()))
            )
            pending_ordinal = None
            pending_color = None
    if pending_ordinal is not None:
        result.warnings.append("ordinal without a following object noun")
    if pending_color is not None:
        result.warnings.append("color word without a following object noun")
    return result


def fallback_program(attrs: list[AttrTuple]) -> NavProgram:
    """Visit the extracted landmarks in order, stopping at each."""
    stmts = []
    for i, a in enumerate(attrs):
        var = f"obj{i}"
        stmts.append(Assign(var, a.as_triple()))
        stmts.append(Call("move_to_object", (VarRef(var),)))
        stmts.append(Call("stop", ()))
    return NavProgram(tuple(stmts))


# -- external translator client ----------------------------------------------


def build_prompt(categories, colors) -> str:
    """Few-shot prompt block describing the command language for an
    external translator service. Must not contain blank lines."""
    lines = [
        "Translate the user's navigation command into the command language below.",
        "Functions: " + ", ".join(sorted(FUNCTIONS)),
        "Bind object attributes with: obj = attrs(\"name\", ordinal, \"color\")",
        "ordinal 0 means nearest/unspecified; color none means unspecified.",
        "Known categories: " + ", ".join(categories),
        "Known colors: " + ", ".join(colors),
        "Example command: navigate to the third yellow table",
        "Example program: obj = attrs(\"table\", 3, \"yellow\") ; face(obj)",
    ]
    return "\n".join(lines)


def external_translate(
    command: str,
    host: str,
    port: int,
    categories,
    colors,
    timeout_s: float = TRANSLATE_TIMEOUT_S,
) -> NavProgram:
    """Ask an external translator for a program over a line-delimited text
    protocol: request = command line + blank line + prompt block + blank
    line; response = program text terminated by a blank line. Any failure
    falls back to visiting the extracted attribute tuples in order."""
    extraction = extract_attributes(command, categories, colors)
    try:
        prompt = build_prompt(categories, colors)
        request = command.replace("\n", " ") + "\n\n" + prompt + "\n\n"
        with socket.create_connection((host, port), timeout=timeout_s) as conn:
            conn.settimeout(timeout_s)
            conn.sendall(request.encode("utf-8"))
            chunks = []
            while True:
                data = conn.recv(4096)
                if not data:
                    break
                chunks.append(data)
                if b"\n\n" in b"".join(chunks):
                    break
        text = b"".join(chunks).decode("utf-8")
        body = text.split("\n\n", 1)[0]
        return parse_program(body)
    except (OSError, NavSyntaxError) as exc:
        log.warning("external translation failed (%s); using fallback program", exc)
        return fallback_program(extraction.attrs)
