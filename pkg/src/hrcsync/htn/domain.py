"""Text domain format: parsing and static validation.

The grammar (EBNF, also in docs/domain_grammar.md)::

    domain     = "(" "domain" NAME { decl } ")" ;
    decl       = primitive | task | method ;
    primitive  = "(" "primitive" PRIM { VAR } ")" ;
    task       = "(" "task" NAME { VAR } ")" ;
    method     = "(" "method" NAME ":task" head [ ":pre" "(" { literal } ")" ]
                 ":subtasks" "(" subtask { subtask } ")" ")" ;
    head       = "(" NAME { VAR } ")" ;
    literal    = "(" PRED { term } ")" | "(" "not" literal ")" ;
    subtask    = "(" NAME { term } ")" ;
    term       = VAR | CTX | NAME | "(" ("at" | "pose") term { term } ")" ;
    VAR        = "?" NAME ;   CTX = "$" NAME ;
    comment    = ";" to end of line ;
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

# fixed schemata: primitive name -> parameter roles
PRIMITIVE_ARITY = {
    "grasp": ("arm", "obj"),
    "release": ("obj",),
    "move": ("arm", "target"),
    "manipulate": ("obj", "effect"),
    "wait": ("intent",),
    "perceive": ("channel",),
}
PREDICATES = {
    "free": 1,  # (free ARM)
    "holding": 2,  # (holding ARM OBJ)
    "graspable": 1,
    "delivered": 1,
    "exists": 1,
    "nonempty": 1,
    "kind": 2,  # (kind OBJ KIND)
    "side": 2,  # (side OBJ left|right)
    "intent": 1,
}
TARGET_FORMS = ("at", "pose")
CONTEXT_VARS = ("channel",)


class DomainParseError(ValueError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col


class DomainValidationError(ValueError):
    def __init__(self, msg: str, method: str | None = None):
        super().__init__(f"method {method}: {msg}" if method else msg)
        self.method = method


@dataclass(frozen=True)
class Tok:
    text: str
    line: int
    col: int


@dataclass
class SList:
    items: list
    line: int
    col: int


def tokenize(text: str) -> list[Tok]:
    toks = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        if ch == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch in "()":
            toks.append(Tok(ch, line, col))
            i += 1
            col += 1
            continue
        start, scol = i, col
        while i < n and not text[i].isspace() and text[i] not in "();":
            i += 1
            col += 1
        toks.append(Tok(text[start:i], line, scol))
    return toks


def read_sexpr(text: str) -> SList:
    toks = tokenize(text)
    if not toks:
        raise DomainParseError("empty domain file", 1, 1)
    pos = 0

    def parse():
        nonlocal pos
        tok = toks[pos]
        if tok.text == ")":
            raise DomainParseError("unexpected ')'", tok.line, tok.col)
        if tok.text != "(":
            pos += 1
            return tok
        pos += 1
        items = []
        while True:
            if pos >= len(toks):
                raise DomainParseError("unclosed '('", tok.line, tok.col)
            if toks[pos].text == ")":
                pos += 1
                return SList(items, tok.line, tok.col)
            items.append(parse())

    tree = parse()
    if pos != len(toks):
        t = toks[pos]
        raise DomainParseError("trailing input after domain", t.line, t.col)
    if not isinstance(tree, SList):
        raise DomainParseError("domain must be a parenthesised form", tree.line, tree.col)
    return tree


# -- domain model -----------------------------------------------------------


@dataclass(frozen=True)
class Literal:
    pred: str
    args: tuple
    negated: bool = False


@dataclass(frozen=True)
class Subtask:
    name: str
    args: tuple  # strings ('?x', '$ctx', 'sym') or tuples for target forms


@dataclass(frozen=True)
class Method:
    name: str
    task: str
    params: tuple[str, ...]
    pre: tuple[Literal, ...]
    subtasks: tuple[Subtask, ...]
    line: int = 0


@dataclass
class Domain:
    name: str
    primitives: dict[str, tuple[str, ...]] = field(default_factory=dict)
    tasks: dict[str, tuple[str, ...]] = field(default_factory=dict)
    methods: list[Method] = field(default_factory=list)

    def methods_for(self, task: str) -> list[Method]:
        return [m for m in self.methods if m.task == task]

    def summary(self) -> str:
        return (
            f"domain {self.name}: {len(self.tasks)} tasks, {len(self.methods)} methods, "
            f"{len(self.primitives)} primitive schemata"
        )


def _atom(x, what: str) -> Tok:
    if isinstance(x, SList):
        raise DomainParseError(f"expected {what}, got a list", x.line, x.col)
    return x


def _list(x, what: str) -> SList:
    if not isinstance(x, SList):
        raise DomainParseError(f"expected {what} list, got {x.text!r}", x.line, x.col)
    return x


def _term(x):
    if isinstance(x, SList):
        if not x.items:
            raise DomainParseError("empty term", x.line, x.col)
        head = _atom(x.items[0], "target form").text
        if head not in TARGET_FORMS:
            raise DomainParseError(f"unknown target form {head!r}", x.line, x.col)
        if len(x.items) < 2:
            raise DomainParseError(f"({head} ...) needs an argument", x.line, x.col)
        return (head, *(_term(a) for a in x.items[1:]))
    return x.text


def _literal(x) -> Literal:
    x = _list(x, "precondition literal")
    if not x.items:
        raise DomainParseError("empty literal", x.line, x.col)
    head = _atom(x.items[0], "predicate").text
    if head == "not":
        if len(x.items) != 2:
            raise DomainParseError("(not ...) takes one literal", x.line, x.col)
        inner = _literal(x.items[1])
        return Literal(inner.pred, inner.args, not inner.negated)
    return Literal(head, tuple(_term(a) for a in x.items[1:]))


def _method(form: SList) -> Method:
    items = form.items
    if len(items) < 2:
        raise DomainParseError("method needs a name", form.line, form.col)
    name = _atom(items[1], "method name").text
    task_head = pre = subtasks = None
    i = 2
    while i < len(items):
        key = _atom(items[i], "method keyword")
        if i + 1 >= len(items):
            raise DomainParseError(f"{key.text} needs a value", key.line, key.col)
        val = _list(items[i + 1], key.text)
        if key.text == ":task":
            task_head = val
        elif key.text == ":pre":
            pre = val
        elif key.text == ":subtasks":
            subtasks = val
        else:
            raise DomainParseError(f"unknown method keyword {key.text!r}", key.line, key.col)
        i += 2
    if task_head is None or subtasks is None:
        raise DomainParseError(f"method {name} needs :task and :subtasks", form.line, form.col)
    if not task_head.items:
        raise DomainParseError("empty :task head", task_head.line, task_head.col)
    tname = _atom(task_head.items[0], "task name").text
    params = tuple(_atom(p, "parameter").text for p in task_head.items[1:])
    subs = []
    for st in subtasks.items:
        st = _list(st, "subtask")
        if not st.items:
            raise DomainParseError("empty subtask", st.line, st.col)
        subs.append(Subtask(_atom(st.items[0], "subtask name").text, tuple(_term(a) for a in st.items[1:])))
    lits = tuple(_literal(x) for x in pre.items) if pre is not None else ()
    return Method(name, tname, params, lits, tuple(subs), form.line)


def parse_domain(text: str) -> Domain:
    tree = read_sexpr(text)
    items = tree.items
    if len(items) < 2 or _atom(items[0], "'domain'").text != "domain":
        raise DomainParseError("file must start with (domain NAME ...)", tree.line, tree.col)
    dom = Domain(_atom(items[1], "domain name").text)
    for form in items[2:]:
        form = _list(form, "declaration")
        if not form.items:
            raise DomainParseError("empty declaration", form.line, form.col)
        kind = _atom(form.items[0], "declaration keyword")
        if kind.text in ("primitive", "task"):
            if len(form.items) < 2:
                raise DomainParseError(f"{kind.text} needs a name", form.line, form.col)
            name = _atom(form.items[1], f"{kind.text} name").text
            params = tuple(_atom(p, "parameter").text for p in form.items[2:])
            table = dom.primitives if kind.text == "primitive" else dom.tasks
            if name in table:
                raise DomainParseError(f"duplicate {kind.text} {name!r}", form.line, form.col)
            table[name] = params
        elif kind.text == "method":
            dom.methods.append(_method(form))
        else:
            raise DomainParseError(f"unknown declaration {kind.text!r}", kind.line, kind.col)
    return dom


# -- static validation --------------------------------------------------------


def _vars_in(term) -> list[str]:
    if isinstance(term, tuple):
        return [v for t in term[1:] for v in _vars_in(t)]
    return [term] if term.startswith("?") else []


def _check_term_refs(term, bound, method: str):
    if isinstance(term, tuple):
        for t in term[1:]:
            _check_term_refs(t, bound, method)
        return
    if term.startswith("?") and term not in bound:
        raise DomainValidationError(f"unbound variable {term}", method)
    if term.startswith("$") and term[1:] not in CONTEXT_VARS:
        raise DomainValidationError(f"unknown context variable {term}", method)


def validate_domain(dom: Domain) -> None:
    for name, params in dom.primitives.items():
        if name not in PRIMITIVE_ARITY:
            raise DomainValidationError(f"unknown primitive {name!r}")
        if len(params) != len(PRIMITIVE_ARITY[name]):
            raise DomainValidationError(
                f"primitive {name} takes {len(PRIMITIVE_ARITY[name])} parameters, declared {len(params)}"
            )
    overlap = set(dom.primitives) & set(dom.tasks)
    if overlap:
        raise DomainValidationError(f"names declared as both task and primitive: {sorted(overlap)}")
    names = [m.name for m in dom.methods]
    dup = {n for n in names if names.count(n) > 1}
    if dup:
        raise DomainValidationError(f"duplicate method names {sorted(dup)}")

    for m in dom.methods:
        if m.task not in dom.tasks:
            raise DomainValidationError(f"undeclared task {m.task!r}", m.name)
        if len(m.params) != len(dom.tasks[m.task]):
            raise DomainValidationError(
                f"task {m.task} has arity {len(dom.tasks[m.task])}, head gives {len(m.params)}", m.name
            )
        if not all(p.startswith("?") for p in m.params) or len(set(m.params)) != len(m.params):
            raise DomainValidationError("head parameters must be distinct ?variables", m.name)
        if not m.subtasks:
            raise DomainValidationError("empty subtask list", m.name)
        bound = set(m.params)
        for lit in m.pre:
            if lit.pred not in PREDICATES:
                raise DomainValidationError(f"unknown predicate {lit.pred!r}", m.name)
            if len(lit.args) != PREDICATES[lit.pred]:
                raise DomainValidationError(
                    f"predicate {lit.pred} takes {PREDICATES[lit.pred]} arguments", m.name
                )
            for a in lit.args:
                if isinstance(a, tuple):
                    raise DomainValidationError("target forms are not allowed in preconditions", m.name)
                _check_term_refs(a, bound, m.name)
        for st in m.subtasks:
            if st.name in dom.primitives:
                arity = len(PRIMITIVE_ARITY[st.name])
            elif st.name in dom.tasks:
                arity = len(dom.tasks[st.name])
            else:
                raise DomainValidationError(f"undeclared task or primitive {st.name!r}", m.name)
            if len(st.args) != arity:
                raise DomainValidationError(f"{st.name} takes {arity} arguments, got {len(st.args)}", m.name)
            for k, a in enumerate(st.args):
                _check_term_refs(a, bound, m.name)
                role = PRIMITIVE_ARITY.get(st.name, ())[k:k + 1]
                if isinstance(a, tuple) and role != ("target",):
                    raise DomainValidationError(f"target form only allowed as a move target", m.name)

    for t in dom.tasks:
        if not dom.methods_for(t):
            raise DomainValidationError(f"task {t!r} has no decomposition method")
    _check_cycles(dom)


def _check_cycles(dom: Domain) -> None:
    """Reject task cycles that can recur before any primitive is consumed."""
    edges: dict[str, list[tuple[str, str]]] = {t: [] for t in dom.tasks}
    for m in dom.methods:
        for st in m.subtasks:
            if st.name in dom.primitives:
                break
            edges[m.task].append((st.name, m.name))
    state: dict[str, int] = {}

    def visit(t: str):
        state[t] = 1
        for nxt, via in edges[t]:
            if state.get(nxt) == 1:
                raise DomainValidationError(f"decomposition cycle through task {nxt!r}", via)
            if nxt not in state:
                visit(nxt)
        state[t] = 2

    for t in dom.tasks:
        if t not in state:
            visit(t)


def load_domain(text: str) -> Domain:
    dom = parse_domain(text)
    validate_domain(dom)
    return dom


def load_domain_file(path) -> Domain:
    return load_domain(Path(path).read_text())
