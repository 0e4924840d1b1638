"""Structural complexity of a code snapshot: coupling, lack of cohesion, LOC.

A snapshot is described by a small declarative fact file rather than parsed
source. One statement per line, ``#`` starts a comment::

    loc 1200
    class Parser
    field Parser.buffer
    field Parser.lexer Lexer        # optional declared type, counts as coupling
    method Parser.parse
    access Parser.parse buffer
    ref Parser.parse Token

Declarations must precede their uses. Class names may be dotted (qualified);
the member name is whatever follows the last dot.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field

__all__ = [
    "FactSyntaxError",
    "MethodFacts",
    "ClassFacts",
    "CodeModel",
    "ComplexitySnapshot",
    "parse_code_model",
    "class_coupling",
    "class_lack_of_cohesion",
    "project_complexity",
    "count_loc",
]

_IDENT = r"[A-Za-z_$][\w$]*"
_NAME_RE = re.compile(rf"^{_IDENT}(?:\.{_IDENT})*$")
_MEMBER_RE = re.compile(rf"^{_IDENT}(?:/\d+)?$")


class FactSyntaxError(ValueError):
    """Malformed or inconsistent fact file. ``lineno`` is 1-based."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


@dataclass
class MethodFacts:
    name: str
    accessed_fields: set[str] = field(default_factory=set)
    referenced_classes: set[str] = field(default_factory=set)


@dataclass
class ClassFacts:
    name: str
    # field name -> declared type (None when untyped)
    fields: dict[str, str | None] = field(default_factory=dict)
    methods: dict[str, MethodFacts] = field(default_factory=dict)

    def referenced_classes(self) -> set[str]:
        refs = {t for t in self.fields.values() if t is not None}
        for m in self.methods.values():
            refs |= m.referenced_classes
        refs.discard(self.name)
        return refs


@dataclass
class CodeModel:
    classes: dict[str, ClassFacts] = field(default_factory=dict)
    loc: int = 0

    @property
    def external_classes(self) -> set[str]:
        """Referenced class names that are not declared in the model."""
        out: set[str] = set()
        for cls in self.classes.values():
            out |= cls.referenced_classes()
        return out - set(self.classes)

    def get(self, name: str) -> ClassFacts:
        try:
            return self.classes[name]
        except KeyError:
            raise KeyError(f"unknown class {name!r}") from None


@dataclass(frozen=True)
class ComplexitySnapshot:
    cpl: float
    lcoh: float
    cplxlcoh: float
    loc: int

    @classmethod
    def from_components(cls, cpl: float, lcoh: float, loc: int) -> "ComplexitySnapshot":
        return cls(cpl=float(cpl), lcoh=float(lcoh), cplxlcoh=float(cpl) * float(lcoh), loc=int(loc))


def _split_member(token: str, lineno: int) -> tuple[str, str]:
    if "." not in token:
        raise FactSyntaxError(f"expected <Class>.<member>, got {token!r}", lineno)
    owner, member = token.rsplit(".", 1)
    if not _NAME_RE.match(owner) or not _MEMBER_RE.match(member):
        raise FactSyntaxError(f"bad identifier in {token!r}", lineno)
    return owner, member


def parse_code_model(text: str) -> CodeModel:
    """Parse fact-file text into a :class:`CodeModel`.

    Raises
    ------
    FactSyntaxError
        On unknown statements, bad identifiers, duplicate declarations,
        uses before declaration and accesses to undeclared fields.
    """
    model = CodeModel()
    loc_seen = False

    def owner_class(name: str, lineno: int) -> ClassFacts:
        if name not in model.classes:
            raise FactSyntaxError(f"undeclared class {name!r}", lineno)
        return model.classes[name]

    def owner_method(token: str, lineno: int) -> tuple[ClassFacts, MethodFacts]:
        cname, mname = _split_member(token, lineno)
        cls = owner_class(cname, lineno)
        if mname not in cls.methods:
            raise FactSyntaxError(f"undeclared method {token!r}", lineno)
        return cls, cls.methods[mname]

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        kw, *args = line.split()

        if kw == "loc":
            if len(args) != 1 or not args[0].isdigit():
                raise FactSyntaxError("loc takes one non-negative integer", lineno)
            if loc_seen:
                raise FactSyntaxError("duplicate loc declaration", lineno)
            model.loc = int(args[0])
            loc_seen = True

        elif kw == "class":
            if len(args) != 1 or not _NAME_RE.match(args[0]):
                raise FactSyntaxError("class takes one class name", lineno)
            if args[0] in model.classes:
                raise FactSyntaxError(f"duplicate class {args[0]!r}", lineno)
            model.classes[args[0]] = ClassFacts(args[0])

        elif kw == "field":
            if len(args) not in (1, 2):
                raise FactSyntaxError("field takes <Class>.<field> [<Type>]", lineno)
            cname, fname = _split_member(args[0], lineno)
            cls = owner_class(cname, lineno)
            if fname in cls.fields:
                raise FactSyntaxError(f"duplicate field {args[0]!r}", lineno)
            ftype = None
            if len(args) == 2:
                if not _NAME_RE.match(args[1]):
                    raise FactSyntaxError(f"bad type name {args[1]!r}", lineno)
                ftype = args[1]
            cls.fields[fname] = ftype

        elif kw == "method":
            if len(args) != 1:
                raise FactSyntaxError("method takes <Class>.<method>", lineno)
            cname, mname = _split_member(args[0], lineno)
            cls = owner_class(cname, lineno)
            if mname in cls.methods:
                raise FactSyntaxError(f"duplicate method {args[0]!r}", lineno)
            cls.methods[mname] = MethodFacts(mname)

        elif kw == "access":
            if len(args) != 2:
                raise FactSyntaxError("access takes <Class>.<method> <field>", lineno)
            cls, meth = owner_method(args[0], lineno)
            if args[1] not in cls.fields:
                raise FactSyntaxError(
                    f"undeclared field {args[1]!r} in class {cls.name!r}", lineno
                )
            meth.accessed_fields.add(args[1])

        elif kw == "ref":
            if len(args) != 2 or not _NAME_RE.match(args[1]):
                raise FactSyntaxError("ref takes <Class>.<method> <OtherClass>", lineno)
            _, meth = owner_method(args[0], lineno)
            meth.referenced_classes.add(args[1])

        else:
            raise FactSyntaxError(f"unknown statement {kw!r}", lineno)

    return model


def class_coupling(model: CodeModel, name: str, mode: str = "distinct") -> float:
    """Coupling of one class to other classes.

    ``mode="distinct"`` counts distinct referenced classes (self excluded).
    ``mode="instance"`` counts one per (method, referenced class) pair and
    one per typed field, so the same target reached from two methods
    counts twice.
    """
    cls = model.get(name)
    if mode == "distinct":
        return float(len(cls.referenced_classes()))
    if mode == "instance":
        n = sum(1 for t in cls.fields.values() if t is not None and t != cls.name)
        n += sum(len(m.referenced_classes - {cls.name}) for m in cls.methods.values())
        return float(n)
    raise ValueError(f"unknown coupling mode {mode!r}")


def class_lack_of_cohesion(model: CodeModel, name: str) -> float:
    """Henderson-Sellers LCOM* on a 0..100 scale.

    ``100 * (abar - m) / (1 - m)`` with ``m`` methods, ``a`` fields and
    ``abar`` the mean number of methods touching a field. Classes with at
    most one method or without fields score 0. Fields that no method touches
    can push the raw ratio above 1; the result is clipped to 100.
    """
    cls = model.get(name)
    m = len(cls.methods)
    a = len(cls.fields)
    if m <= 1 or a == 0:
        return 0.0
    touches = sum(len(meth.accessed_fields) for meth in cls.methods.values())
    abar = touches / a
    value = 100.0 * (abar - m) / (1 - m)
    return min(100.0, max(0.0, value))


def project_complexity(model: CodeModel, coupling_mode: str = "distinct") -> ComplexitySnapshot:
    """Per-class means of coupling and lack of cohesion, and their product."""
    if not model.classes:
        raise ValueError("cannot compute complexity of a model with no classes")
    names = list(model.classes)
    cpl = sum(class_coupling(model, n, coupling_mode) for n in names) / len(names)
    lcoh = sum(class_lack_of_cohesion(model, n) for n in names) / len(names)
    return ComplexitySnapshot.from_components(cpl, lcoh, model.loc)


def count_loc(source: str) -> int:
    """Count physical lines holding code outside C-family comments.

    Blank lines and lines containing only ``//`` or ``/* ... */`` comments
    are skipped. String and char literals are honoured so a ``//`` inside
    quotes does not start a comment. An unterminated block comment swallows
    the rest of the input and triggers a warning.
    """
    count = 0
    in_block = False
    for line in source.splitlines():
        has_code = False
        i, n = 0, len(line)
        quote = None
        while i < n:
            ch = line[i]
            if in_block:
                if line.startswith("*/", i):
                    in_block = False
                    i += 2
                else:
                    i += 1
                continue
            if quote is not None:
                has_code = True
                if ch == "\\":
                    i += 2
                    continue
                if ch == quote:
                    quote = None
                i += 1
                continue
            if line.startswith("//", i):
                break
            if line.startswith("/*", i):
                in_block = True
                i += 2
                continue
            if ch in "\"'":
                quote = ch
                has_code = True
            elif not ch.isspace():
                has_code = True
            i += 1
        if has_code:
            count += 1
    if in_block:
        warnings.warn("unterminated block comment; remaining lines counted as comment", stacklevel=2)
    return count
