"""Linear-time epistemic logic without Next: syntax, expansion, satisfaction.

Core formulas are built from the atoms ``e1 = e2`` (current store) and
``init_x(e)`` (the initial value of ``x`` equals the current value of
``e``), conjunction, negation, the knowledge operator K, and strong
until.  Everything else -- or, implication, truth constants, the finite
quantifiers, the possibility operator L, future, globally, weak until --
is sugar that :func:`expand` removes:

    forall id. p  =  AND_{v in Val} p[v/id]      exists dually
    L p  =  !K !p        F p  =  tt U p          G p  =  !F !p
    p W q  =  (p U q) || G p

Satisfaction is evaluated over a fully built model.  K quantifies over
every point of the model whose trace equals the current one; until ranges
over the remaining (finite, terminated) suffix of the current execution.
Callers must refuse tainted models before asking for satisfaction.

Evaluation memoizes per node, keyed as coarsely as soundness allows: an
``init`` atom over a constant is fixed along an execution, a K/L formula
is constant across an epoch, and big conjunctions of guarded implications
(the shape the policy encoders emit) dispatch on the initial store instead
of scanning every conjunct.  ``optimize=False`` disables all of that and
evaluates naively; verdicts must not change.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

from .domain import Domain
from .lang import Binary, Const, Expr, HashCall, Unary, Var, eval_expr, expr_ids
from .model import Execution, Model, Point
from .verdicts import Outcome, Stats, Verdict, Witness


class LogicError(ValueError):
    pass


# Memoization granularity, ordered by how much of a point's identity the
# value depends on.  EXEC and EPOCH are incomparable; their join is POINT.
_CONST, _EXEC, _EPOCH, _POINT = 0, 1, 2, 3


def _join(a: int, b: int) -> int:
    if {a, b} == {_EXEC, _EPOCH}:
        return _POINT
    return max(a, b)


class Formula:
    level: int = _POINT


def _expr_varfree(e: Expr) -> bool:
    return not expr_ids(e)


@dataclass(eq=False)
class Eq(Formula):
    lhs: Expr
    rhs: Expr

    def __post_init__(self) -> None:
        self.level = _CONST if _expr_varfree(self.lhs) and _expr_varfree(self.rhs) else _POINT


@dataclass(eq=False)
class Init(Formula):
    name: str
    expr: Expr

    def __post_init__(self) -> None:
        self.level = _EXEC if _expr_varfree(self.expr) else _POINT


@dataclass(eq=False)
class And(Formula):
    children: tuple[Formula, ...]
    tags: tuple | None = None  # per-child (identifier, value) binding pairs

    def __post_init__(self) -> None:
        level = _CONST
        for c in self.children:
            level = _join(level, c.level)
        self.level = level


@dataclass(eq=False)
class Not(Formula):
    child: Formula

    def __post_init__(self) -> None:
        self.level = self.child.level


@dataclass(eq=False)
class K(Formula):
    child: Formula

    def __post_init__(self) -> None:
        self.level = _CONST if self.child.level == _CONST else _EPOCH


@dataclass(eq=False)
class Until(Formula):
    lhs: Formula
    rhs: Formula

    def __post_init__(self) -> None:
        level = _join(self.lhs.level, self.rhs.level)
        self.level = level if level <= _EXEC else _POINT


CORE_NODES = (Eq, Init, And, Not, K, Until)


# Sugar nodes, removed by expand().


@dataclass(eq=False)
class Tt(Formula):
    pass


@dataclass(eq=False)
class Ff(Formula):
    pass


@dataclass(eq=False)
class Or(Formula):
    children: tuple[Formula, ...]


@dataclass(eq=False)
class Implies(Formula):
    lhs: Formula
    rhs: Formula


@dataclass(eq=False)
class Forall(Formula):
    var: str
    body: Formula


@dataclass(eq=False)
class Exists(Formula):
    var: str
    body: Formula


@dataclass(eq=False)
class L(Formula):
    child: Formula


@dataclass(eq=False)
class F(Formula):
    child: Formula


@dataclass(eq=False)
class G(Formula):
    child: Formula


@dataclass(eq=False)
class W(Formula):
    lhs: Formula
    rhs: Formula


def is_core(f: Formula) -> bool:
    match f:
        case Eq() | Init():
            return True
        case And(children):
            return all(is_core(c) for c in children)
        case Not(child) | K(child):
            return is_core(child)
        case Until(lhs, rhs):
            return is_core(lhs) and is_core(rhs)
    return False


def formula_size(f: Formula) -> int:
    """Distinct nodes reachable from the root (shared subtrees count once)."""
    seen: set[int] = set()

    def walk(node: Formula) -> None:
        if id(node) in seen:
            return
        seen.add(id(node))
        match node:
            case And(children) | Or(children):
                for c in children:
                    walk(c)
            case Not(child) | K(child) | L(child) | F(child) | G(child):
                walk(child)
            case Until(lhs, rhs) | Implies(lhs, rhs) | W(lhs, rhs):
                walk(lhs)
                walk(rhs)
            case Forall(_, body) | Exists(_, body):
                walk(body)
            case _:
                pass

    walk(f)
    return len(seen)


def struct_eq(a: Formula, b: Formula) -> bool:
    """Structural equality; node identity is deliberately not equality."""
    if type(a) is not type(b):
        return False
    match a:
        case Eq(l1, r1):
            return (l1, r1) == (b.lhs, b.rhs)
        case Init(n1, e1):
            return n1 == b.name and e1 == b.expr
        case And(cs) | Or(cs):
            return len(cs) == len(b.children) and all(
                struct_eq(x, y) for x, y in zip(cs, b.children))
        case Not(c) | K(c) | L(c) | F(c) | G(c):
            return struct_eq(c, b.child)
        case Until(l1, r1) | Implies(l1, r1) | W(l1, r1):
            return struct_eq(l1, b.lhs) and struct_eq(r1, b.rhs)
        case Forall(v, body) | Exists(v, body):
            return v == b.var and struct_eq(body, b.body)
        case Tt() | Ff():
            return True
    return False


# --------------------------------------------------------------------------
# Construction helpers (used by the policy encoders)


def conj(children, tags=None) -> Formula:
    """Conjunction that drops trivial truths; empty means tt."""
    kept = []
    kept_tags = [] if tags is not None else None
    for idx, c in enumerate(children):
        if isinstance(c, Tt):
            continue
        if isinstance(c, And) and not c.children:
            continue
        kept.append(c)
        if kept_tags is not None:
            kept_tags.append(tags[idx])
    if len(kept) == 1 and (kept_tags is None or kept_tags[0] is None):
        return kept[0]
    return And(tuple(kept), tuple(kept_tags) if kept_tags is not None else None)


def disj(children) -> Formula:
    kept = [c for c in children if not isinstance(c, Ff)]
    if not kept:
        return Ff()
    if len(kept) == 1:
        return kept[0]
    return Or(tuple(kept))


def implies(lhs: Formula, rhs: Formula) -> Formula:
    if isinstance(lhs, Tt) or (isinstance(lhs, And) and not lhs.children):
        return rhs
    return Implies(lhs, rhs)


def foralls(vars_: list[str], body: Formula) -> Formula:
    for v in reversed(vars_):
        body = Forall(v, body)
    return body


# --------------------------------------------------------------------------
# Substitution and expansion


def subst_expr(e: Expr, var: str, value) -> Expr:
    match e:
        case Const():
            return e
        case Var(name):
            return Const(value) if name == var else e
        case Unary(op, arg):
            return Unary(op, subst_expr(arg, var, value))
        case HashCall(arg):
            return HashCall(subst_expr(arg, var, value))
        case Binary(op, lhs, rhs):
            return Binary(op, subst_expr(lhs, var, value), subst_expr(rhs, var, value))
    raise TypeError(f"not an expression: {e!r}")


def subst(f: Formula, var: str, value) -> Formula:
    match f:
        case Eq(lhs, rhs):
            return Eq(subst_expr(lhs, var, value), subst_expr(rhs, var, value))
        case Init(name, expr):
            return Init(name, subst_expr(expr, var, value))
        case And(children, tags):
            return And(tuple(subst(c, var, value) for c in children), tags)
        case Not(child):
            return Not(subst(child, var, value))
        case K(child):
            return K(subst(child, var, value))
        case Until(lhs, rhs):
            return Until(subst(lhs, var, value), subst(rhs, var, value))
        case Tt() | Ff():
            return f
        case Or(children):
            return Or(tuple(subst(c, var, value) for c in children))
        case Implies(lhs, rhs):
            return Implies(subst(lhs, var, value), subst(rhs, var, value))
        case Forall(v, body) | Exists(v, body):
            if v == var:
                raise LogicError(f"quantifier shadows {var!r}; rename the inner binder")
            inner = subst(body, var, value)
            return Forall(v, inner) if isinstance(f, Forall) else Exists(v, inner)
        case L(child):
            return L(subst(child, var, value))
        case F(child):
            return F(subst(child, var, value))
        case G(child):
            return G(subst(child, var, value))
        case W(lhs, rhs):
            return W(subst(lhs, var, value), subst(rhs, var, value))
    raise TypeError(f"not a formula: {f!r}")


EXPANSION_WARN = 8 ** 4
DEFAULT_EXPANSION_CAP = 5_000_000


def expand(f: Formula, dom: Domain, cap: int = DEFAULT_EXPANSION_CAP) -> Formula:
    """Rewrite to core nodes only; quantifiers become finite conjunctions.

    Shared subtrees stay shared: the encoders rely on that for both memory
    and the evaluator's per-node memoization.
    """
    state = {"instances": 1, "warned": False}
    memo: dict[tuple, Formula] = {}

    def quantify(var: str, body: Formula, bound: frozenset) -> list[Formula]:
        if var in bound:
            raise LogicError(f"quantifier shadows {var!r}; rename the inner binder")
        state["instances"] += dom.size
        if state["instances"] > cap:
            raise LogicError(
                f"quantifier expansion exceeds {cap} instances; "
                "shrink the domain or raise the cap")
        if state["instances"] > EXPANSION_WARN and not state["warned"]:
            state["warned"] = True
            warnings.warn(
                f"quantifier expansion beyond {EXPANSION_WARN} instances; "
                "evaluation may be slow", stacklevel=2)
        return [walk(subst(body, var, v), bound | {var}) for v in dom.values]

    def walk(node: Formula, bound: frozenset) -> Formula:
        # key by identity, pinning the node: ids of dead temporaries recycle
        key = (id(node), bound)
        done = memo.get(key)
        if done is not None and done[0] is node:
            return done[1]
        result = _walk(node, bound)
        memo[key] = (node, result)
        return result

    def _walk(node: Formula, bound: frozenset) -> Formula:
        match node:
            case Eq() | Init():
                return node
            case And(children, tags):
                return And(tuple(walk(c, bound) for c in children), tags)
            case Not(child):
                return Not(walk(child, bound))
            case K(child):
                return K(walk(child, bound))
            case Until(lhs, rhs):
                return Until(walk(lhs, bound), walk(rhs, bound))
            case Tt():
                return And(())
            case Ff():
                return Not(And(()))
            case Or(children):
                return Not(And(tuple(Not(walk(c, bound)) for c in children)))
            case Implies(lhs, rhs):
                return Not(And((walk(lhs, bound), Not(walk(rhs, bound)))))
            case Forall(var, body):
                parts = quantify(var, body, bound)
                return And(tuple(parts), tuple(((var, v),) for v in dom.values))
            case Exists(var, body):
                parts = quantify(var, body, bound)
                return Not(And(tuple(Not(p) for p in parts),
                               tuple(((var, v),) for v in dom.values)))
            case L(child):
                return Not(K(Not(walk(child, bound))))
            case F(child):
                return Until(And(()), walk(child, bound))
            case G(child):
                return Not(Until(And(()), Not(walk(child, bound))))
            case W(lhs, rhs):
                return walk(Or((Until(lhs, rhs), G(lhs))), bound)
        raise TypeError(f"not a formula: {node!r}")

    return walk(f, frozenset())


def formula_identifiers(f: Formula) -> set[str]:
    """Free identifiers: expression variables plus init subjects."""
    names: set[str] = set()
    bound: list[str] = []

    def walk(node: Formula) -> None:
        match node:
            case Eq(lhs, rhs):
                names.update(n for n in expr_ids(lhs) + expr_ids(rhs) if n not in bound)
            case Init(name, expr):
                names.add(name)
                names.update(n for n in expr_ids(expr) if n not in bound)
            case And(children) | Or(children):
                for c in children:
                    walk(c)
            case Not(child) | K(child) | L(child) | F(child) | G(child):
                walk(child)
            case Until(lhs, rhs) | Implies(lhs, rhs) | W(lhs, rhs):
                walk(lhs)
                walk(rhs)
            case Forall(var, body) | Exists(var, body):
                bound.append(var)
                walk(body)
                bound.pop()
            case Tt() | Ff():
                pass

    walk(f)
    return names


# --------------------------------------------------------------------------
# Satisfaction


class Evaluation:
    """Memoizing evaluator for core formulas over a single model."""

    def __init__(self, model: Model, optimize: bool = True, cache: bool = True):
        self.model = model
        self.optimize = optimize
        self.cache = cache
        self._variables = model.variables
        self._varset = set(model.variables)
        self.memo_const: dict[int, bool] = {}
        self.memo_exec: dict[tuple[int, int], bool] = {}
        self.memo_epoch: dict[tuple[int, int], bool] = {}
        self.memo_point: dict[tuple[int, int, int], bool] = {}
        self._dispatch: dict[int, tuple | None] = {}
        self._init_vec: dict[int, tuple | None] = {}
        self.points_visited = 0
        self.cache_hits = 0

    def stats(self, formula_nodes: int = 0) -> Stats:
        return Stats(self.points_visited, self.cache_hits, formula_nodes)

    def holds(self, f: Formula, ex: Execution, i: int) -> bool:
        if not self.cache:
            self.points_visited += 1
            return self._compute(f, ex, i)
        level = f.level
        if level == _CONST:
            key = id(f)
            memo = self.memo_const
        elif level == _EXEC:
            key = (id(f), ex.index)
            memo = self.memo_exec
        elif level == _EPOCH:
            key = (id(f), ex.trace_ids[i])
            memo = self.memo_epoch
        else:
            key = (id(f), ex.index, i)
            memo = self.memo_point
        cached = memo.get(key)
        if cached is not None:
            self.cache_hits += 1
            return cached
        self.points_visited += 1
        value = self._compute(f, ex, i)
        memo[key] = value
        return value

    def _compute(self, f: Formula, ex: Execution, i: int) -> bool:
        dom = self.model.domain
        match f:
            case Eq(lhs, rhs):
                store = ex.stores[i]
                return eval_expr(store, lhs, dom) == eval_expr(store, rhs, dom)
            case Init(name, expr):
                return ex.stores[0][name] == eval_expr(ex.stores[i], expr, dom)
            case And():
                return self._and(f, ex, i)
            case Not(child):
                return not self.holds(child, ex, i)
            case K(child):
                return self._knows(child, ex, i)
            case Until(lhs, rhs):
                j = i
                last = len(ex)
                while j <= last:
                    if self.holds(rhs, ex, j):
                        return True
                    if not self.holds(lhs, ex, j):
                        return False
                    j += 1
                return False
        raise LogicError(f"not a core formula node: {f!r}")

    # -- conjunction dispatch ------------------------------------------------

    def _and(self, f: And, ex: Execution, i: int) -> bool:
        if self.optimize and len(f.children) >= 16:
            plan = self._dispatch_plan(f)
            if plan is not None:
                names, table, rest = plan
                init = ex.stores[0]
                key = tuple(init[n] for n in names)
                for idx in table.get(key, ()):
                    if not self.holds(f.children[idx], ex, i):
                        return False
                for idx in rest:
                    if not self.holds(f.children[idx], ex, i):
                        return False
                return True
        for c in f.children:
            if not self.holds(c, ex, i):
                return False
        return True

    def _dispatch_plan(self, f: And):
        """Index children of the form !(guard && !body) by their guard values.

        A guard made of init atoms over constants pins the initial store, so
        a child whose guard disagrees with the current execution is true and
        can be skipped wholesale.
        """
        plan = self._dispatch.get(id(f))
        if plan is not None or id(f) in self._dispatch:
            return plan
        names: tuple[str, ...] | None = None
        table: dict[tuple, list[int]] = {}
        rest: list[int] = []
        guarded = 0
        for idx, child in enumerate(f.children):
            guard = self._guard_values(child)
            if guard is None:
                rest.append(idx)
                continue
            g_names, g_vals = guard
            if names is None:
                names = g_names
            if g_names != names:
                self._dispatch[id(f)] = None
                return None
            table.setdefault(g_vals, []).append(idx)
            guarded += 1
        plan = (names, table, rest) if names is not None and guarded >= 16 else None
        self._dispatch[id(f)] = plan
        return plan

    def _guard_values(self, child: Formula):
        if not (isinstance(child, Not) and isinstance(child.child, And)):
            return None
        inner = child.child.children
        if len(inner) != 2 or not isinstance(inner[1], Not):
            return None
        atoms = self._init_atoms(inner[0])
        if not atoms:
            return None
        names = tuple(sorted(atoms))
        return names, tuple(atoms[n] for n in names)

    @staticmethod
    def _init_atoms(guard: Formula) -> dict | None:
        parts: tuple[Formula, ...]
        if isinstance(guard, Init):
            parts = (guard,)
        elif isinstance(guard, And):
            parts = guard.children
        else:
            return None
        atoms: dict[str, object] = {}
        for p in parts:
            if not (isinstance(p, Init) and isinstance(p.expr, Const)):
                return None
            if p.name in atoms and atoms[p.name] != p.expr.value:
                return None  # contradictory guard; leave to the slow path
            atoms[p.name] = p.expr.value
        return atoms

    # -- knowledge -----------------------------------------------------------

    def _knows(self, child: Formula, ex: Execution, i: int) -> bool:
        model = self.model
        tid = ex.trace_ids[i]
        if self.optimize:
            vec = self._init_vector(child)
            if vec is not None:
                # K !init_vec: true unless the pinned execution visits this epoch.
                names, vals, contradiction = vec
                if contradiction:
                    return True
                target = model.exec_by_values.get(vals)
                return target is None or tid not in target.trace_id_set
            if child.level <= _EXEC:
                executions = model.executions
                return all(
                    self.holds(child, executions[j], 0)
                    for j in model.epoch_exec_ids[tid])
        for pt in model.epochs[tid]:
            if not self.holds(child, pt.execution, pt.index):
                return False
        return True

    def _init_vector(self, child: Formula):
        """Recognize !(init_x1(c1) && ... && init_xk(ck)) pinning all variables."""
        cached = self._init_vec.get(id(child))
        if cached is not None or id(child) in self._init_vec:
            return cached
        result = None
        if isinstance(child, Not):
            atoms = self._init_atoms(child.child)
            if atoms is not None and set(atoms) == self._varset:
                vals = tuple(atoms[n] for n in self._variables)
                result = (self._variables, vals, False)
            elif atoms is None and isinstance(child.child, (And, Init)):
                contradictory = self._contradictory_vector(child.child)
                if contradictory:
                    result = ((), (), True)
        self._init_vec[id(child)] = result
        return result

    @staticmethod
    def _contradictory_vector(guard: Formula) -> bool:
        parts = guard.children if isinstance(guard, And) else (guard,)
        seen: dict[str, object] = {}
        for p in parts:
            if not (isinstance(p, Init) and isinstance(p.expr, Const)):
                return False
            if p.name in seen and seen[p.name] != p.expr.value:
                return True
            seen[p.name] = p.expr.value
        return False


def satisfies(model: Model, pt: Point, f: Formula, optimize: bool = True,
              cache: bool = True) -> bool:
    """Does the core formula hold at the point?  The model must be clean."""
    if model.tainted:
        raise LogicError("satisfaction undefined on models with non-terminated executions")
    if not is_core(f):
        raise LogicError("satisfies expects a core formula; call expand first")
    return Evaluation(model, optimize, cache).holds(f, pt.execution, pt.index)


def model_satisfies(model: Model, f: Formula, optimize: bool = True,
                    cap: int = DEFAULT_EXPANSION_CAP) -> Verdict:
    """Expand and evaluate at the first point of every execution.

    Fails fast with a witness; refuses tainted models.
    """
    if model.tainted:
        bad = next(e for e in model.executions if e.status.value != "terminated")
        return Verdict(
            Outcome.BOUND_EXCEEDED, None, Stats(),
            f"execution from {_store_note(model, bad)} is {bad.status.value}")
    core = expand(f, model.domain, cap)
    size = formula_size(core)
    ev = Evaluation(model, optimize)
    for ex in model.executions:
        if not ev.holds(core, ex, 0):
            witness = _extract_witness(ev, core, ex)
            return Verdict(Outcome.FAILS, witness, ev.stats(size))
    return Verdict(Outcome.HOLDS, None, ev.stats(size))


def _store_note(model: Model, ex: Execution) -> str:
    dom = model.domain
    pairs = ", ".join(
        f"{n}={dom.format_value(ex.init_store[n])}" for n in model.variables)
    return f"({pairs})"


def _extract_witness(ev: Evaluation, core: Formula, ex: Execution) -> Witness:
    """Chase the falsified formula to a concrete point and its bindings.

    Follows first-false children through conjunctions (collecting quantifier
    tags), unwraps negations, and resolves until-scans to the decisive
    index.  Stops at epistemic leaves: their failure is the whole epoch's.
    """
    bindings: list[tuple[str, object]] = []
    node, i, expect = core, 0, False

    while True:
        match node:
            case Not(child):
                node, expect = child, not expect
            case And(children, tags) if not expect:
                found = None
                for idx, child in enumerate(children):
                    if not ev.holds(child, ex, i):
                        found = idx
                        break
                if found is None:
                    break
                if tags is not None and tags[found] is not None:
                    bindings.extend(tags[found])
                node = children[found]
            case And(children) if expect and len(children) == 2 and isinstance(children[1], Not):
                # implication shape: guard true, body false
                if not ev.holds(children[0], ex, i):
                    break
                node = children[1]
            case Until(lhs, rhs) if expect:
                j = i
                while j <= len(ex):
                    if ev.holds(rhs, ex, j):
                        node, i, expect = rhs, j, True
                        break
                    if not ev.holds(lhs, ex, j):
                        node, i, expect = lhs, j, False
                        break
                    j += 1
                else:
                    break
            case _:
                break

    return Witness(
        kind="epistemic",
        stores=(("initial", tuple(
            (n, ex.init_store[n]) for n in ev.model.variables)),),
        point_index=i,
        trace=ev.model.trace_tuple(ex.trace_ids[i]),
        bindings=tuple(bindings),
    )


# --------------------------------------------------------------------------
# Concrete syntax for formulas
#
# atoms:        e1 == e2   e1 != e2   init(x, e)   true   false
# connectives:  !p   p && q   p || q   p -> q (right-assoc)
# epistemic:    K p   L p
# temporal:     F p   G p   p U q   p W q (right-assoc, bind tighter than &&)
# quantifiers:  forall v . p   exists v . p (body extends right)
#
# Comparisons other than ==/!= live at the expression level; parenthesize
# them into an atom, e.g. (x < y) == tt.  A leading ! negates the formula,
# so expression-level negation on the left of == needs parentheses.


def parse_formula(text: str) -> Formula:
    from .lang import _Parser, _tokenize

    p = _Parser(_tokenize(text))
    f = _parse_quantified(p)
    tok = p.peek()
    if tok.kind != "eof":
        p.fail(f"trailing input {tok.value!r}")
    return f


def _at_word(p, *words: str) -> bool:
    tok = p.peek()
    return tok.kind == "id" and tok.value in words


def _parse_quantified(p) -> Formula:
    if _at_word(p, "forall", "exists"):
        word = p.next().value
        var = p.expect("id").value
        p.expect("punct", ".")
        body = _parse_quantified(p)
        return Forall(var, body) if word == "forall" else Exists(var, body)
    return _parse_implies(p)


def _parse_implies(p) -> Formula:
    lhs = _parse_or(p)
    if p.at_punct("->"):
        p.next()
        return Implies(lhs, _parse_quantified(p))
    return lhs


def _parse_or(p) -> Formula:
    parts = [_parse_and(p)]
    while p.at_punct("||"):
        p.next()
        parts.append(_parse_and(p))
    return parts[0] if len(parts) == 1 else Or(tuple(parts))


def _parse_and(p) -> Formula:
    parts = [_parse_until(p)]
    while p.at_punct("&&"):
        p.next()
        parts.append(_parse_until(p))
    return parts[0] if len(parts) == 1 else And(tuple(parts))


def _parse_until(p) -> Formula:
    lhs = _parse_unary(p)
    if _at_word(p, "U", "W"):
        word = p.next().value
        rhs = _parse_until(p)
        return Until(lhs, rhs) if word == "U" else W(lhs, rhs)
    return lhs


def _parse_unary(p) -> Formula:
    if p.at_punct("!"):
        p.next()
        return Not(_parse_unary(p))
    if _at_word(p, "K", "L", "F", "G"):
        word = p.next().value
        child = _parse_unary(p)
        return {"K": K, "L": L, "F": F, "G": G}[word](child)
    return _parse_atom(p)


def _parse_atom(p) -> Formula:
    from .lang import ParseError

    tok = p.peek()
    if tok.kind == "kw" and tok.value in ("tt", "true"):
        p.next()
        return Tt()
    if tok.kind == "kw" and tok.value in ("ff", "false"):
        p.next()
        return Ff()
    if _at_word(p, "init"):
        p.next()
        p.expect("punct", "(")
        name = p.expect("id").value
        p.expect("punct", ",")
        expr = p.expression()
        p.expect("punct", ")")
        return Init(name, expr)
    if p.at_punct("("):
        save = p.pos
        try:
            return _comparison(p)
        except ParseError:
            p.pos = save
        p.next()
        inner = _parse_quantified(p)
        p.expect("punct", ")")
        return inner
    return _comparison(p)


def _comparison(p) -> Formula:
    from .lang import Binary

    lhs = p.cmp_expr()
    if isinstance(lhs, Binary) and lhs.op == "==":
        return Eq(lhs.lhs, lhs.rhs)
    if isinstance(lhs, Binary) and lhs.op == "!=":
        return Not(Eq(lhs.lhs, lhs.rhs))
    p.fail("formula atom must compare two expressions")


def formula_to_source(f: Formula, dom: Domain | None = None) -> str:
    from .lang import expr_to_source

    def p(node: Formula) -> str:
        src = formula_to_source(node, dom)
        if isinstance(node, (Eq, Init, Tt, Ff, Not, K, L, F, G)):
            return src
        return f"({src})"

    match f:
        case Eq(lhs, rhs):
            return f"{expr_to_source(lhs, dom)} == {expr_to_source(rhs, dom)}"
        case Init(name, expr):
            return f"init({name}, {expr_to_source(expr, dom)})"
        case And(children):
            return " && ".join(p(c) for c in children) if children else "true"
        case Or(children):
            return " || ".join(p(c) for c in children) if children else "false"
        case Not(child):
            return f"!{p(child)}"
        case K(child):
            return f"K {p(child)}"
        case L(child):
            return f"L {p(child)}"
        case F(child):
            return f"F {p(child)}"
        case G(child):
            return f"G {p(child)}"
        case Until(lhs, rhs):
            return f"{p(lhs)} U {p(rhs)}"
        case W(lhs, rhs):
            return f"{p(lhs)} W {p(rhs)}"
        case Implies(lhs, rhs):
            return f"{p(lhs)} -> {p(rhs)}"
        case Forall(var, body):
            return f"forall {var} . {formula_to_source(body, dom)}"
        case Exists(var, body):
            return f"exists {var} . {formula_to_source(body, dom)}"
        case Tt():
            return "true"
        case Ff():
            return "false"
    raise TypeError(f"not a formula: {f!r}")
