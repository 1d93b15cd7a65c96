"""Epistemic security conditions as formulas over execution models.

The two workhorse formulas say, at a point, that the observer has not
narrowed down the initial secrets:

* ``esp``: within the current epoch, for the actual initial public values,
  every initial secret vector is still possible.
* ``espm``: the same, but only secret vectors that agree with the actual
  one on a set of declassified properties need to remain possible.

On top of them sit the five conditions: absence of knowledge (plain, and
modulo a declassified predicate, an abstraction pair, write-once release
flags, or condition-triggered temporal declassifications).

``espm`` is emitted pre-expanded: the agreement side-conditions are
decided on concrete value vectors while encoding, so the formula itself
stays inside the plain logic (equality and init atoms only).  Quantified
initial values are named after the identifier they constrain: ``x'`` for
the premise value, ``x''`` for the epistemic alternative.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable

from .domain import Domain
from .lang import (Binary, Const, Expr, Out, Program, Seq, Stmt, Var, eval_expr,
                   expr_ids, expr_to_source, program_from_body, validate_expr)
from .logic import (And, Eq, Formula, G, Init, L, Not, W, conj, disj,
                    foralls, implies)


class PolicyError(ValueError):
    pass


DEFAULT_ESPM_BUDGET = 2_000_000
MAX_POWERSET = 6


def primed(name: str) -> str:
    return name + "'"


def alt_primed(name: str) -> str:
    return name + "''"


@dataclass(frozen=True)
class FlowSpec:
    """Split of the ordinary identifiers into public (low) and secret (high)."""

    low: tuple[str, ...]
    high: tuple[str, ...]

    @staticmethod
    def from_low(program: Program, low: Iterable[str]) -> "FlowSpec":
        low = tuple(low)
        names = program.variables
        unknown = [n for n in low if n not in names]
        if unknown:
            raise PolicyError(f"low identifier {unknown[0]!r} not in the program")
        if len(set(low)) != len(low):
            raise PolicyError("duplicate low identifier")
        ordered_low = tuple(n for n in names if n in low)
        high = tuple(n for n in names if n not in low)
        return FlowSpec(ordered_low, high)

    def check_against(self, program: Program) -> None:
        names = program.variables
        if set(self.low) & set(self.high):
            raise PolicyError("an identifier cannot be both low and high")
        if set(self.low) | set(self.high) != set(names):
            raise PolicyError("flow spec must cover exactly the ordinary identifiers")


@dataclass(frozen=True)
class InitPredicate:
    """Total function from an initial store to a comparable value.

    Either an expression evaluated on the initial store, or one of the
    named abstractions Id, Sign, Par applied pointwise to identifiers.
    """

    label: str
    ids: tuple[str, ...]
    fn: Callable[[dict], object]

    def __call__(self, store: dict):
        return self.fn(store)

    @staticmethod
    def from_expression(expr: Expr, dom: Domain, label: str | None = None) -> "InitPredicate":
        validate_expr(expr, dom)
        ids = expr_ids(expr)
        return InitPredicate(
            label or expr_to_source(expr, dom), ids,
            lambda store: eval_expr(store, expr, dom))

    @staticmethod
    def abstraction(name: str, ids: Iterable[str], dom: Domain) -> "InitPredicate":
        ids = tuple(ids)
        fn = abstraction_fn(name, dom)
        return InitPredicate(
            f"{name}({', '.join(ids)})", ids,
            lambda store: tuple(fn(store[i]) for i in ids))


ABSTRACTIONS = ("Id", "Sign", "Par")


def abstraction_fn(name: str, dom: Domain) -> Callable:
    if name == "Id":
        return lambda v: v
    if name == "Sign":
        if dom.kind != "int":
            raise PolicyError("Sign applies to integer domains only")
        return lambda v: 1 if v >= 0 else 0
    if name == "Par":
        if dom.kind != "int":
            raise PolicyError("Par applies to integer domains only")
        return lambda v: v % 2
    raise PolicyError(f"unknown abstraction {name!r}; expected one of {ABSTRACTIONS}")


def abstraction_expr(name: str, target: Expr) -> Expr:
    """The abstraction as an expression, for placing it in output statements."""
    if name == "Id":
        return target
    if name == "Sign":
        return Binary(">=", target, Const(0))
    if name == "Par":
        return Binary("mod", target, Const(2))
    raise PolicyError(f"unknown abstraction {name!r}")


@dataclass(frozen=True)
class ReleaseSpec:
    """Write-once release flags paired with the expressions they disclose."""

    items: tuple[tuple[str, Expr], ...]

    def __post_init__(self) -> None:
        flags = [f for f, _ in self.items]
        if len(set(flags)) != len(flags):
            raise PolicyError("duplicate release flag")

    def check_against(self, program: Program, dom: Domain) -> None:
        flags = set(program.flags)
        names = set(program.variables)
        for flag, expr in self.items:
            if flag not in flags:
                raise PolicyError(f"release flag {flag!r} never released in the program")
            for n in expr_ids(expr):
                if n not in names:
                    raise PolicyError(
                        f"release expression for {flag!r} mentions unknown {n!r}")
            validate_expr(expr, dom)


@dataclass(frozen=True)
class TemporalDeclassification:
    """When the state condition has held, the initial property may be known."""

    condition: Expr  # over the current store
    declassified: InitPredicate


# --------------------------------------------------------------------------
# The knowledge formulas


def init_atoms(names: Iterable[str], exprs: Iterable[Expr]) -> Formula:
    return conj(tuple(Init(n, e) for n, e in zip(names, exprs)))


def esp(fs: FlowSpec, dom: Domain) -> Formula:
    """Every initial secret is possible, for the actual public inputs.

    forall l'. (init_l(l') -> forall h''. L(init_l(l') && init_h(h'')))
    """
    low_vars = [primed(n) for n in fs.low]
    high_vars = [alt_primed(n) for n in fs.high]
    premise = init_atoms(fs.low, [Var(v) for v in low_vars])
    possible = L(conj(
        tuple(Init(n, Var(v)) for n, v in zip(fs.low, low_vars))
        + tuple(Init(n, Var(v)) for n, v in zip(fs.high, high_vars))))
    return foralls(low_vars, implies(premise, foralls(high_vars, possible)))


def espm(fixed_low: Iterable[str], high: Iterable[str],
         predicates: Iterable[InitPredicate], dom: Domain,
         budget: int = DEFAULT_ESPM_BUDGET) -> Formula:
    """Every initial secret agreeing on the predicates is possible.

    Emitted fully expanded: one guarded implication per (public, secret)
    value vector, whose body requires each agreeing alternative secret to
    be epistemically possible.  Agreement is computed here, on concrete
    vectors, never inside the formula.
    """
    fixed_low = tuple(fixed_low)
    high = tuple(high)
    predicates = tuple(predicates)
    known = set(fixed_low) | set(high)
    for p in predicates:
        outside = [n for n in p.ids if n not in known]
        if outside:
            raise PolicyError(
                f"declassification {p.label!r} mentions {outside[0]!r}, "
                "which is neither fixed-public nor secret")

    weight = dom.size ** (len(fixed_low) + 2 * len(high))
    if weight > budget:
        raise PolicyError(
            f"espm expansion would need up to {weight} possibility atoms "
            f"(budget {budget}); shrink the domain or the identifier split")

    values = dom.values
    children: list[Formula] = []
    tags: list = []
    possible_cache: dict[tuple, Formula] = {}

    def possibility(low_vals: tuple, high_vals: tuple) -> Formula:
        key = (low_vals, high_vals)
        node = possible_cache.get(key)
        if node is None:
            node = L(init_atoms(fixed_low + high,
                                [Const(v) for v in low_vals + high_vals]))
            possible_cache[key] = node
        return node

    for low_vals in itertools.product(values, repeat=len(fixed_low)):
        # group secret vectors by their declassified-property values
        classes: dict[tuple, list[tuple]] = {}
        keys: dict[tuple, tuple] = {}
        for high_vals in itertools.product(values, repeat=len(high)):
            store = dict(zip(fixed_low, low_vals))
            store.update(zip(high, high_vals))
            key = tuple(p(store) for p in predicates)
            classes.setdefault(key, []).append(high_vals)
            keys[high_vals] = key

        bodies: dict[tuple, Formula] = {}
        for key, members in classes.items():
            bodies[key] = conj(
                tuple(possibility(low_vals, alt) for alt in members),
                tuple(tuple(zip(map(alt_primed, high), alt)) for alt in members))

        for high_vals in itertools.product(values, repeat=len(high)):
            guard = init_atoms(fixed_low + high,
                               [Const(v) for v in low_vals + high_vals])
            body = bodies[keys[high_vals]]
            children.append(Not(And((guard, Not(body)))))
            tags.append(tuple(zip(map(primed, fixed_low + high), low_vals + high_vals)))

    return conj(tuple(children), tuple(tags))


# --------------------------------------------------------------------------
# Security conditions


def encode_ak(fs: FlowSpec, dom: Domain) -> Formula:
    """Absence of knowledge: the observer never learns anything high."""
    return G(esp(fs, dom))


def _as_predicates(phi, dom: Domain) -> tuple[InitPredicate, ...]:
    if isinstance(phi, InitPredicate):
        return (phi,)
    if isinstance(phi, Expr):
        return (InitPredicate.from_expression(phi, dom),)
    return tuple(
        p if isinstance(p, InitPredicate) else InitPredicate.from_expression(p, dom)
        for p in phi)


def encode_akd(fs: FlowSpec, phi, dom: Domain,
               budget: int = DEFAULT_ESPM_BUDGET) -> Formula:
    """Absence of knowledge beyond the declassified predicate(s)."""
    return G(espm(fs.low, fs.high, _as_predicates(phi, dom), dom, budget))


def encode_aak(program: Program, fs: FlowSpec, eta: str | Expr, phi: str | Expr,
               rho: str | Expr, dom: Domain, fix_low: bool = False,
               budget: int = DEFAULT_ESPM_BUDGET) -> tuple[Program, Formula]:
    """Abstract absence of knowledge, as a transformed program plus formula.

    The program gains a final output of the ``rho``-abstracted public
    results.  By default no identifier is pinned exactly: public inputs
    vary within their ``eta``-class and secrets within their ``phi``-class,
    both encoded as agreement predicates.  ``fix_low`` switches to the
    variant that pins public inputs exactly (making ``eta`` vacuous).
    """
    body: Stmt = program.body
    if isinstance(rho, Expr):
        for n in expr_ids(rho):
            if n not in fs.low:
                raise PolicyError(f"output abstraction mentions non-public {n!r}")
        body = Seq(body, Out(rho))
    else:
        if not fs.low:
            raise PolicyError("abstract output needs at least one public identifier")
        for name in fs.low:
            body = Seq(body, Out(abstraction_expr(rho, Var(name))))
    transformed = program_from_body(body, program.text)

    eta_pred = (InitPredicate.from_expression(eta, dom) if isinstance(eta, Expr)
                else InitPredicate.abstraction(eta, fs.low, dom))
    phi_pred = (InitPredicate.from_expression(phi, dom) if isinstance(phi, Expr)
                else InitPredicate.abstraction(phi, fs.high, dom))
    if fix_low:
        formula = espm(fs.low, fs.high, (eta_pred, phi_pred), dom, budget)
    else:
        ordered = fs.low + fs.high
        in_order = tuple(n for n in transformed.variables if n in ordered)
        formula = espm((), in_order, (eta_pred, phi_pred), dom, budget)
    return transformed, G(formula)


def _powerset(items: tuple) -> list[tuple]:
    if len(items) > MAX_POWERSET:
        raise PolicyError(
            f"powerset construction capped at {MAX_POWERSET} elements; got {len(items)}")
    out = []
    for mask in range(1 << len(items)):
        out.append(tuple(x for i, x in enumerate(items) if mask >> i & 1))
    return out


def encode_akr(fs: FlowSpec, rs: ReleaseSpec, dom: Domain,
               budget: int = DEFAULT_ESPM_BUDGET) -> Formula:
    """Absence of knowledge beyond what the set flags have released.

    At each point exactly one disjunct applies: the one whose flag pattern
    matches the store, requiring uncertainty modulo the expressions
    released so far (evaluated on initial stores).
    """
    disjuncts = []
    for chosen in _powerset(rs.items):
        chosen_flags = {f for f, _ in chosen}
        preds = tuple(
            InitPredicate.from_expression(e, dom, label=f"released {expr_to_source(e, dom)}")
            for _, e in chosen)
        pattern = [Eq(Var(f), Const(dom.true_value)) for f, _ in rs.items if f in chosen_flags]
        pattern += [Eq(Var(f), Const(dom.false_value)) for f, _ in rs.items
                    if f not in chosen_flags]
        disjuncts.append(conj((espm(fs.low, fs.high, preds, dom, budget),) + tuple(pattern)))
    return G(disj(disjuncts))


def encode_aktd(fs: FlowSpec, tds: Iterable[TemporalDeclassification], dom: Domain,
                budget: int = DEFAULT_ESPM_BUDGET) -> Formula:
    """Absence of knowledge under condition-triggered declassifications.

    For every subset of the declassifications, uncertainty modulo that
    subset must hold at least until the condition of one of the remaining
    declassifications fires (an empty remainder never fires).
    """
    tds = tuple(tds)
    conjuncts = []
    for chosen in _powerset(tds):
        chosen_ids = {id(td) for td in chosen}
        body = espm(fs.low, fs.high, tuple(td.declassified for td in chosen), dom, budget)
        # "fired" means truthy, so compare against false rather than true
        released_later = disj(tuple(
            Not(Eq(td.condition, Const(dom.false_value)))
            for td in tds if id(td) not in chosen_ids))
        conjuncts.append(W(body, released_later))
    return conj(tuple(conjuncts))
