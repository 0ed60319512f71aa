"""Signature, labelled example atoms and quantified constraints.

Constraint files hold one rule per line; ``#`` starts a comment::

    forall x,y: rides(x,y) -> !car(x)          # negative domain
    forall x,y: rides(x,y) -> !tree(y)         # negative range
    forall x,y: above(x,y) -> below(y,x)

Connectives, loosest first: ``->`` (right associative), ``|``, ``&``, ``!``.
Variables range over ordered tuples of distinct boxes of one image.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .errors import ConsistencyError, InvalidArgument, ParseError, SchemaError
from .fuzzy import And, Atom, Formula, Implies, Not, Or, atoms_of, substitute
from .numeric import Rng


@dataclass(frozen=True)
class Signature:
    unary: Tuple[str, ...]
    binary: Tuple[str, ...]
    images: Mapping[str, Tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "unary", tuple(self.unary))
        object.__setattr__(self, "binary", tuple(self.binary))
        names = self.unary + self.binary
        if len(set(names)) != len(names):
            raise SchemaError("predicate names must be unique across unary and binary sets")
        seen = set()
        for image_id, consts in self.images.items():
            for c in consts:
                if c in seen:
                    raise SchemaError(f"constant {c!r} belongs to more than one image")
                seen.add(c)

    @property
    def predicates(self) -> Tuple[str, ...]:
        return self.unary + self.binary

    @property
    def constants(self) -> List[str]:
        return [c for consts in self.images.values() for c in consts]

    def arity(self, predicate: str) -> int:
        if predicate in self.unary:
            return 1
        if predicate in self.binary:
            return 2
        raise SchemaError(f"unknown predicate {predicate!r}")

    def restrict(self, image_ids: Iterable[str]) -> "Signature":
        ids = set(image_ids)
        return Signature(self.unary, self.binary,
                         {k: v for k, v in self.images.items() if k in ids})

    def compatible_with(self, other: "Signature") -> bool:
        return self.unary == other.unary and self.binary == other.binary


@dataclass(frozen=True)
class ExampleAtom:
    predicate: str
    args: Tuple[str, ...]
    positive: bool = True

    @property
    def atom(self) -> Atom:
        return Atom(self.predicate, tuple(self.args))

    @property
    def formula(self) -> Formula:
        return self.atom if self.positive else Not(self.atom)


@dataclass(frozen=True)
class Constraint:
    variables: Tuple[str, ...]
    body: Formula
    text: str = ""

    def __str__(self):
        return self.text or f"forall {','.join(self.variables)}: {self.body}"


# --- parsing ------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(->|[!&|(),:]|[A-Za-z_][A-Za-z0-9_]*)")


def _tokenize(text: str) -> List[str]:
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos:pos + 1]!r} at column {pos}")
        out.append(m.group(1))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, tokens):
        self.toks = tokens
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, expected=None):
        tok = self.peek()
        if tok is None or (expected is not None and tok != expected):
            raise ParseError(f"expected {expected or 'token'}, got {tok!r}")
        self.i += 1
        return tok

    def constraint(self) -> Tuple[Tuple[str, ...], Formula]:
        self.take("forall")
        variables = [self.take()]
        while self.peek() == ",":
            self.take(",")
            variables.append(self.take())
        self.take(":")
        body = self.implication()
        if self.peek() is not None:
            raise ParseError(f"trailing input at {self.peek()!r}")
        return tuple(variables), body

    def implication(self):
        left = self.disjunction()
        if self.peek() == "->":
            self.take("->")
            return Implies(left, self.implication())
        return left

    def disjunction(self):
        f = self.conjunction()
        while self.peek() == "|":
            self.take("|")
            f = Or(f, self.conjunction())
        return f

    def conjunction(self):
        f = self.unary()
        while self.peek() == "&":
            self.take("&")
            f = And(f, self.unary())
        return f

    def unary(self):
        tok = self.peek()
        if tok == "!":
            self.take("!")
            return Not(self.unary())
        if tok == "(":
            self.take("(")
            f = self.implication()
            self.take(")")
            return f
        name = self.take()
        if not re.match(r"[A-Za-z_]", name):
            raise ParseError(f"expected predicate name, got {name!r}")
        self.take("(")
        args = [self.take()]
        while self.peek() == ",":
            self.take(",")
            args.append(self.take())
        self.take(")")
        return Atom(name, tuple(args))


def parse_constraint(text: str, signature: Optional[Signature] = None) -> Constraint:
    variables, body = _Parser(_tokenize(text)).constraint()
    if len(set(variables)) != len(variables):
        raise ParseError(f"repeated quantified variable in {text!r}")
    for atom in atoms_of(body):
        for a in atom.args:
            if a not in variables:
                raise ParseError(f"variable {a!r} is not quantified in {text!r}")
        if signature is not None:
            try:
                arity = signature.arity(atom.predicate)
            except SchemaError:
                raise ParseError(f"unknown predicate {atom.predicate!r} in {text!r}") from None
            if arity != len(atom.args):
                raise ParseError(f"{atom.predicate} takes {arity} arguments in {text!r}")
    return Constraint(variables, body, text.strip())


def parse_constraints(text: str, signature: Optional[Signature] = None) -> List[Constraint]:
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            out.append(parse_constraint(line, signature))
        except ParseError as exc:
            raise ParseError(f"line {lineno}: {exc}", index=lineno) from None
    return out


def load_constraints(path, signature: Optional[Signature] = None) -> List[Constraint]:
    return parse_constraints(Path(path).read_text(), signature)


# --- examples and grounding ------------------------------------------------------

def build_examples(scenes, signature: Signature, rate: float = 1.0,
                   rng: Optional[Rng] = None) -> List[ExampleAtom]:
    """Positive atoms for every annotation, negatives for everything else.

    Negatives are kept independently with probability ``rate``; ``rng`` is
    only consulted when ``rate < 1``.
    """
    if not 0.0 < rate <= 1.0:
        raise InvalidArgument(f"negative sampling rate {rate} outside (0, 1]")
    if rate < 1.0 and rng is None:
        raise InvalidArgument("an rng is required when subsampling negatives")
    unary, binary = set(signature.unary), set(signature.binary)

    def keep():
        return rate >= 1.0 or rng.random() < rate

    out: List[ExampleAtom] = []
    for scene in scenes:
        for box in scene.boxes:
            if box.label is None:
                continue
            if box.label not in unary:
                raise SchemaError(f"image {scene.image_id}: unknown class {box.label!r}")
            for cls in signature.unary:
                if cls == box.label:
                    out.append(ExampleAtom(cls, (box.constant,), True))
                elif keep():
                    out.append(ExampleAtom(cls, (box.constant,), False))
        annotated = set()
        for t in scene.triples:
            if t.predicate not in binary:
                raise SchemaError(f"image {scene.image_id}: unknown predicate {t.predicate!r}")
            annotated.add((t.subject, t.predicate, t.object))
        for a, b in scene.pairs():
            for pred in signature.binary:
                args = (a.constant, b.constant)
                if (a.id, pred, b.id) in annotated:
                    out.append(ExampleAtom(pred, args, True))
                elif keep():
                    out.append(ExampleAtom(pred, args, False))
    return out


def _ground(constraint: Constraint, constants: Sequence[str]) -> List[Formula]:
    k = len(constraint.variables)
    return [substitute(constraint.body, dict(zip(constraint.variables, combo)))
            for combo in itertools.permutations(constants, k)]


def instantiate_constraints(constraints: Sequence[Constraint], scene) -> List[Formula]:
    """Ground each constraint over ordered tuples of distinct boxes in ``scene``.

    ``scene`` may be a scene annotation or a plain sequence of constants.
    """
    constants = [b.constant for b in scene.boxes] if hasattr(scene, "boxes") else list(scene)
    out: List[Formula] = []
    for c in constraints:
        out.extend(_ground(c, constants))
    return out


@dataclass(frozen=True)
class KnowledgeBase:
    signature: Signature
    examples: Tuple[ExampleAtom, ...]
    constraints: Tuple[Constraint, ...]
    mode: str = "prior"

    def ground_formulas(self) -> List[Formula]:
        """Example literals followed by every constraint instance per image."""
        out = [e.formula for e in self.examples]
        if self.constraints:
            for consts in self.signature.images.values():
                out.extend(instantiate_constraints(self.constraints, consts))
        return out

    def __len__(self):
        return len(self.examples) + len(self.constraints)


def assemble_kb(examples: Iterable[ExampleAtom], constraints: Iterable[Constraint],
                mode: str, signature: Signature) -> KnowledgeBase:
    """Collect examples (and, in ``prior`` mode, constraints) into a knowledge base."""
    if mode not in ("expl", "prior"):
        raise InvalidArgument(f"knowledge base mode must be 'expl' or 'prior', got {mode!r}")
    polarity: Dict[Tuple[str, Tuple[str, ...]], bool] = {}
    unique: List[ExampleAtom] = []
    for e in examples:
        key = (e.predicate, tuple(e.args))
        if key in polarity:
            if polarity[key] != e.positive:
                raise ConsistencyError(f"atom {e.atom} is both a positive and a negative example")
            continue
        if len(e.args) != signature.arity(e.predicate):
            raise SchemaError(f"{e.predicate} applied to {len(e.args)} arguments")
        polarity[key] = e.positive
        unique.append(e)
    kept = tuple(constraints) if mode == "prior" else ()
    for c in kept:
        for atom in atoms_of(c.body):
            if signature.arity(atom.predicate) != len(atom.args):
                raise SchemaError(f"constraint {c} misuses {atom.predicate}")
    return KnowledgeBase(signature, tuple(unique), kept, mode)
