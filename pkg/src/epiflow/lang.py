"""The while-language with synchronous output: AST, parser, evaluation, steps.

Programs are deterministic and operate on a finite store.  The only
observable behaviour is the sequence of values emitted by ``out``
statements.  Release flags are write-once booleans that may appear solely
in ``release`` statements; the parser enforces that discipline so the
rest of the system can rely on it.

Concrete grammar (whitespace-insensitive, ``;`` separates statements)::

    P ::= "skip" | "out" E | "out" STRING | ID ":=" E | P ";" P
        | "if" E "then" "{" P "}" "else" "{" P "}"
        | "while" E "do" "{" P "}" | "release" ID
    E ::= literal | ID | "(" E ")" | "!" E | "-" E | E OP E | "hash" "(" E ")"
    OP ::= "&&" | "||" | "==" | "!=" | "<" | "<=" | ">=" | ">" | "+" | "-" | "*" | "mod"
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .domain import Domain, Label


class LangError(ValueError):
    """Semantic error in a program (flag misuse, bad literal, bad operator)."""


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


# --------------------------------------------------------------------------
# Expressions


class Expr:
    pass


@dataclass(frozen=True)
class Const(Expr):
    value: object


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Unary(Expr):
    op: str  # "!" | "-"
    arg: Expr


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class HashCall(Expr):
    arg: Expr


BOOL_OPS = {"&&", "||", "==", "!="}
INT_ONLY_OPS = {"<", "<=", ">", ">=", "+", "-", "*", "mod"}
ALL_OPS = BOOL_OPS | INT_ONLY_OPS


def expr_ids(e: Expr) -> tuple[str, ...]:
    """Identifiers of an expression, in first-occurrence order."""
    out: list[str] = []

    def walk(node: Expr) -> None:
        match node:
            case Const():
                pass
            case Var(name):
                if name not in out:
                    out.append(name)
            case Unary(_, arg) | HashCall(arg):
                walk(arg)
            case Binary(_, lhs, rhs):
                walk(lhs)
                walk(rhs)
            case _:
                raise TypeError(f"not an expression: {node!r}")

    walk(e)
    return tuple(out)


def eval_expr(store: dict, e: Expr, dom: Domain):
    """Value of ``e`` in ``store``; total on the configured domain.

    Integer results wrap into the canonical range, comparisons yield the
    domain's encoding of tt/ff, and ``x mod 0`` is defined as ``x``.
    """
    match e:
        case Const(v):
            return dom.bool_value(v) if isinstance(v, bool) else v
        case Var(name):
            return store[name]
        case Unary("!", arg):
            return dom.bool_value(not dom.truth(eval_expr(store, arg, dom)))
        case Unary("-", arg):
            return dom.normalize(-eval_expr(store, arg, dom))
        case HashCall(arg):
            return dom.hash_value(eval_expr(store, arg, dom))
        case Binary(op, lhs, rhs):
            a = eval_expr(store, lhs, dom)
            b = eval_expr(store, rhs, dom)
            match op:
                case "&&":
                    return dom.bool_value(dom.truth(a) and dom.truth(b))
                case "||":
                    return dom.bool_value(dom.truth(a) or dom.truth(b))
                case "==":
                    return dom.bool_value(a == b)
                case "!=":
                    return dom.bool_value(a != b)
                case "<":
                    return dom.bool_value(a < b)
                case "<=":
                    return dom.bool_value(a <= b)
                case ">":
                    return dom.bool_value(a > b)
                case ">=":
                    return dom.bool_value(a >= b)
                case "+":
                    return dom.normalize(a + b)
                case "-":
                    return dom.normalize(a - b)
                case "*":
                    return dom.normalize(a * b)
                case "mod":
                    return dom.normalize(a % b) if b != 0 else a
    raise TypeError(f"not an expression: {e!r}")


def validate_expr(e: Expr, dom: Domain, allowed: set[str] | None = None) -> None:
    """Check literals against the domain, operator shapes, and identifiers."""
    match e:
        case Const(v):
            # tt/ff literals are accepted everywhere as the truth encoding
            if not isinstance(v, bool) and v not in dom:
                raise LangError(f"literal {v!r} outside the {dom.spec()} domain")
        case Var(name):
            if allowed is not None and name not in allowed:
                raise LangError(f"unknown identifier {name!r}")
        case Unary(op, arg):
            if op == "-" and dom.kind == "bool":
                raise LangError("arithmetic negation is not boolean")
            validate_expr(arg, dom, allowed)
        case HashCall(arg):
            validate_expr(arg, dom, allowed)
        case Binary(op, lhs, rhs):
            if dom.kind == "bool" and op in INT_ONLY_OPS:
                raise LangError(f"operator {op!r} is not boolean")
            validate_expr(lhs, dom, allowed)
            validate_expr(rhs, dom, allowed)


# --------------------------------------------------------------------------
# Statements and programs


class Stmt:
    pass


@dataclass(frozen=True)
class Skip(Stmt):
    pass


@dataclass(frozen=True)
class Out(Stmt):
    expr: Expr


@dataclass(frozen=True)
class OutLit(Stmt):
    text: str


@dataclass(frozen=True)
class Assign(Stmt):
    name: str
    expr: Expr


@dataclass(frozen=True)
class Seq(Stmt):
    first: Stmt
    second: Stmt


@dataclass(frozen=True)
class If(Stmt):
    guard: Expr
    then: Stmt
    orelse: Stmt


@dataclass(frozen=True)
class While(Stmt):
    guard: Expr
    body: Stmt


@dataclass(frozen=True)
class Release(Stmt):
    flag: str


@dataclass(frozen=True)
class Identifier:
    name: str
    is_flag: bool = False


@dataclass(frozen=True)
class Program:
    body: Stmt
    signature: tuple[Identifier, ...]
    text: str | None = field(default=None, compare=False)

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(i.name for i in self.signature if not i.is_flag)

    @property
    def flags(self) -> tuple[str, ...]:
        return tuple(i.name for i in self.signature if i.is_flag)


def program_from_body(body: Stmt, text: str | None = None) -> Program:
    """Wrap a statement, deriving the store signature in occurrence order.

    Enforces the release-flag discipline: a flag identifier appears only in
    ``release`` statements, never in expressions or assignment targets.
    """
    order: list[str] = []
    flag_names: set[str] = set()
    var_names: set[str] = set()

    def see(name: str) -> None:
        if name not in order:
            order.append(name)

    def see_expr(e: Expr) -> None:
        for name in expr_ids(e):
            see(name)
            var_names.add(name)

    def walk(s: Stmt) -> None:
        match s:
            case Skip() | OutLit():
                pass
            case Out(expr):
                see_expr(expr)
            case Assign(name, expr):
                see(name)
                var_names.add(name)
                see_expr(expr)
            case Seq(a, b):
                walk(a)
                walk(b)
            case If(guard, then, orelse):
                see_expr(guard)
                walk(then)
                walk(orelse)
            case While(guard, inner):
                see_expr(guard)
                walk(inner)
            case Release(flag):
                see(flag)
                flag_names.add(flag)
            case _:
                raise TypeError(f"not a statement: {s!r}")

    walk(body)
    clash = flag_names & var_names
    if clash:
        name = sorted(clash)[0]
        raise LangError(f"release flag {name!r} used as an ordinary identifier")
    signature = tuple(Identifier(n, n in flag_names) for n in order)
    return Program(body, signature, text)


def validate_program(program: Program, dom: Domain) -> None:
    def walk(s: Stmt) -> None:
        match s:
            case Skip() | OutLit() | Release():
                pass
            case Out(expr):
                validate_expr(expr, dom)
            case Assign(_, expr):
                validate_expr(expr, dom)
            case Seq(a, b):
                walk(a)
                walk(b)
            case If(guard, then, orelse):
                validate_expr(guard, dom)
                walk(then)
                walk(orelse)
            case While(guard, inner):
                validate_expr(guard, dom)
                walk(inner)

    walk(program.body)


# --------------------------------------------------------------------------
# Small-step semantics


def step(p: Stmt, store: dict, dom: Domain):
    """One execution step, or None when the configuration is terminal.

    Returns ``(p', store', event)`` where ``event`` is the emitted output
    value, if any.  Deterministic: a configuration has at most one
    successor.  Sequencing drops finished heads so that each step
    corresponds to one base statement.
    """
    match p:
        case Skip():
            return None
        case Out(expr):
            return Skip(), store, eval_expr(store, expr, dom)
        case OutLit(text):
            return Skip(), store, Label(text)
        case Assign(name, expr):
            new = dict(store)
            new[name] = eval_expr(store, expr, dom)
            return Skip(), new, None
        case Release(flag):
            new = dict(store)
            new[flag] = dom.true_value
            return Skip(), new, None
        case If(guard, then, orelse):
            branch = then if dom.truth(eval_expr(store, guard, dom)) else orelse
            return branch, store, None
        case While(guard, body):
            if dom.truth(eval_expr(store, guard, dom)):
                return Seq(body, p), store, None
            return Skip(), store, None
        case Seq(first, second):
            head = step(first, store, dom)
            if head is None:  # first is a finished skip chain
                return step(second, store, dom)
            p1, store1, ev = head
            if isinstance(p1, Skip):
                return second, store1, ev
            return Seq(p1, second), store1, ev
    raise TypeError(f"not a statement: {p!r}")


# --------------------------------------------------------------------------
# Parser


_KEYWORDS = {
    "skip", "out", "if", "then", "else", "while", "do", "release",
    "mod", "hash", "tt", "ff", "true", "false",
}

_PUNCT = (":=", "&&", "||", "==", "!=", "<=", ">=", "->", "<", ">", "+", "-",
          "*", "!", "(", ")", "{", "}", ";", ",", ".")


@dataclass(frozen=True)
class _Token:
    kind: str  # "id" | "int" | "string" | "punct" | "kw" | "eof"
    value: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i, line, col = i + 1, line + 1, 1
            continue
        if c.isspace():
            i, col = i + 1, col + 1
            continue
        if c == "#":  # comment to end of line
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c == '"':
            j = text.find('"', i + 1)
            if j < 0:
                raise ParseError("unterminated string literal", line, col)
            tokens.append(_Token("string", text[i + 1:j], line, col))
            col += j + 1 - i
            i = j + 1
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(_Token("int", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            tokens.append(_Token("kw" if word in _KEYWORDS else "id", word, line, col))
            col += j - i
            i = j
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                tokens.append(_Token("punct", p, line, col))
                i += len(p)
                col += len(p)
                break
        else:
            raise ParseError(f"unexpected character {c!r}", line, col)
    tokens.append(_Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message: str, tok: _Token | None = None):
        tok = tok or self.peek()
        raise ParseError(message, tok.line, tok.column)

    def expect(self, kind: str, value: str | None = None) -> _Token:
        tok = self.peek()
        if tok.kind != kind or (value is not None and tok.value != value):
            want = value or kind
            self.fail(f"expected {want!r}, found {tok.value or tok.kind!r}")
        return self.next()

    def at_punct(self, value: str) -> bool:
        tok = self.peek()
        return tok.kind == "punct" and tok.value == value

    def at_kw(self, value: str) -> bool:
        tok = self.peek()
        return tok.kind == "kw" and tok.value == value

    # statements

    def sequence(self, stop: set[str]) -> Stmt:
        stmts = [self.statement()]
        while self.at_punct(";"):
            self.next()
            tok = self.peek()
            if tok.kind == "eof" or (tok.kind == "punct" and tok.value in stop):
                break  # trailing semicolon
            stmts.append(self.statement())
        node = stmts[-1]
        for s in reversed(stmts[:-1]):
            node = Seq(s, node)
        return node

    def statement(self) -> Stmt:
        tok = self.peek()
        if self.at_kw("skip"):
            self.next()
            return Skip()
        if self.at_kw("out"):
            self.next()
            if self.peek().kind == "string":
                return OutLit(self.next().value)
            return Out(self.expression())
        if self.at_kw("if"):
            self.next()
            guard = self.expression()
            self.expect("kw", "then")
            self.expect("punct", "{")
            then = self.sequence({"}"})
            self.expect("punct", "}")
            self.expect("kw", "else")
            self.expect("punct", "{")
            orelse = self.sequence({"}"})
            self.expect("punct", "}")
            return If(guard, then, orelse)
        if self.at_kw("while"):
            self.next()
            guard = self.expression()
            self.expect("kw", "do")
            self.expect("punct", "{")
            body = self.sequence({"}"})
            self.expect("punct", "}")
            return While(guard, body)
        if self.at_kw("release"):
            self.next()
            name = self.expect("id")
            return Release(name.value)
        if tok.kind == "id":
            name = self.next()
            self.expect("punct", ":=")
            return Assign(name.value, self.expression())
        self.fail(f"expected a statement, found {tok.value or tok.kind!r}")

    # expressions

    def expression(self) -> Expr:
        return self.or_expr()

    def or_expr(self) -> Expr:
        node = self.and_expr()
        while self.at_punct("||"):
            self.next()
            node = Binary("||", node, self.and_expr())
        return node

    def and_expr(self) -> Expr:
        node = self.cmp_expr()
        while self.at_punct("&&"):
            self.next()
            node = Binary("&&", node, self.cmp_expr())
        return node

    def cmp_expr(self) -> Expr:
        node = self.add_expr()
        tok = self.peek()
        if tok.kind == "punct" and tok.value in ("==", "!=", "<", "<=", ">", ">="):
            self.next()
            node = Binary(tok.value, node, self.add_expr())
            again = self.peek()
            if again.kind == "punct" and again.value in ("==", "!=", "<", "<=", ">", ">="):
                self.fail("comparisons do not chain; parenthesize")
        return node

    def add_expr(self) -> Expr:
        node = self.mul_expr()
        while True:
            tok = self.peek()
            if tok.kind == "punct" and tok.value in ("+", "-"):
                self.next()
                node = Binary(tok.value, node, self.mul_expr())
            else:
                return node

    def mul_expr(self) -> Expr:
        node = self.unary_expr()
        while True:
            tok = self.peek()
            if (tok.kind == "punct" and tok.value == "*") or (tok.kind == "kw" and tok.value == "mod"):
                self.next()
                node = Binary("mod" if tok.value == "mod" else "*", node, self.unary_expr())
            else:
                return node

    def unary_expr(self) -> Expr:
        if self.at_punct("!"):
            self.next()
            return Unary("!", self.unary_expr())
        if self.at_punct("-"):
            self.next()
            arg = self.unary_expr()
            if isinstance(arg, Const) and not isinstance(arg.value, bool):
                return Const(-arg.value)  # negative literal
            return Unary("-", arg)
        return self.primary()

    def primary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "int":
            self.next()
            return Const(int(tok.value))
        if tok.kind == "kw" and tok.value in ("tt", "true"):
            self.next()
            return Const(True)
        if tok.kind == "kw" and tok.value in ("ff", "false"):
            self.next()
            return Const(False)
        if tok.kind == "kw" and tok.value == "hash":
            self.next()
            self.expect("punct", "(")
            arg = self.expression()
            self.expect("punct", ")")
            return HashCall(arg)
        if tok.kind == "id":
            self.next()
            return Var(tok.value)
        if self.at_punct("("):
            self.next()
            node = self.expression()
            self.expect("punct", ")")
            return node
        self.fail(f"expected an expression, found {tok.value or tok.kind!r}")


def parse_expression(text: str) -> Expr:
    parser = _Parser(_tokenize(text))
    node = parser.expression()
    tok = parser.peek()
    if tok.kind != "eof":
        parser.fail(f"trailing input {tok.value!r}")
    return node


def parse(text: str, dom: Domain | None = None) -> Program:
    """Parse a program; with a domain, also validate literals and operators.

    Boolean literals ``tt``/``ff``/``true``/``false`` are accepted in every
    domain and denote the domain's truth encoding.
    """
    parser = _Parser(_tokenize(text))
    body = parser.sequence(set())
    tok = parser.peek()
    if tok.kind != "eof":
        parser.fail(f"trailing input {tok.value!r}")
    program = program_from_body(body, text)
    if dom is not None:
        validate_program(program, dom)
    return program


# --------------------------------------------------------------------------
# Unparser, used by reports and counterexample bundles


def expr_to_source(e: Expr, dom: Domain | None = None) -> str:
    def fmt(v) -> str:
        if isinstance(v, bool):
            return "tt" if v else "ff"
        if dom is not None:
            return dom.format_value(v)
        return str(v)

    match e:
        case Const(v):
            return fmt(v)
        case Var(name):
            return name
        case Unary(op, arg):
            return f"{op}{_paren(arg, dom)}"
        case HashCall(arg):
            return f"hash({expr_to_source(arg, dom)})"
        case Binary(op, lhs, rhs):
            return f"{_paren(lhs, dom)} {op} {_paren(rhs, dom)}"
    raise TypeError(f"not an expression: {e!r}")


def _paren(e: Expr, dom: Domain | None) -> str:
    src = expr_to_source(e, dom)
    return src if isinstance(e, (Const, Var, HashCall)) else f"({src})"


def to_source(s: Stmt, dom: Domain | None = None) -> str:
    match s:
        case Skip():
            return "skip"
        case Out(expr):
            return f"out {expr_to_source(expr, dom)}"
        case OutLit(text):
            return f'out "{text}"'
        case Assign(name, expr):
            return f"{name} := {expr_to_source(expr, dom)}"
        case Seq(a, b):
            return f"{to_source(a, dom)}; {to_source(b, dom)}"
        case If(guard, then, orelse):
            return (f"if {expr_to_source(guard, dom)} then {{ {to_source(then, dom)} }}"
                    f" else {{ {to_source(orelse, dom)} }}")
        case While(guard, body):
            return f"while {expr_to_source(guard, dom)} do {{ {to_source(body, dom)} }}"
        case Release(flag):
            return f"release {flag}"
    raise TypeError(f"not a statement: {s!r}")
