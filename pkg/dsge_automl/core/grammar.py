"""
Context-free grammars describing the pipeline search space.

A grammar file holds one rule per line:

    <pipeline> ::= <preprocessing> <algorithm> | <algorithm>
    <radius>   ::= radius:RANDFLOAT(1.0,30.0)

- Nonterminals are written <name>, alternatives are separated by |
- A line that does not start with `<name> ::=` continues the previous rule
- # starts a comment
- RANDINT(lo,hi) / RANDFLOAT(lo,hi) are inclusive random-value terminals,
  optionally prefixed by a parameter tag (`leaf_size:RANDINT(5,100)`)

See grammars/README.md for the full format.
"""

import logging
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Optional, Union

from dsge_automl.core.errors import (
    DuplicateRuleError,
    EmptyRuleError,
    GrammarError,
    GrammarSyntaxError,
    NonTerminatingError,
    RandBoundsError,
    UndefinedNonterminalError,
    UnreachableNonterminalError,
)

logger = logging.getLogger(__name__)

Number = Union[int, float]


class SymbolKind(Enum):
    """What a grammar symbol stands for."""
    NONTERMINAL = "nonterminal"
    TERMINAL = "terminal"
    RAND_INT = "rand_int"
    RAND_FLOAT = "rand_float"


@dataclass(frozen=True)
class Symbol:
    """
    A single grammar symbol.

    For RAND symbols `name` is the parameter tag (possibly empty) and
    `lo`/`hi` are the inclusive bounds.
    """
    kind: SymbolKind
    name: str
    lo: Optional[Number] = None
    hi: Optional[Number] = None

    def __post_init__(self):
        if self.is_rand:
            if self.lo is None or self.hi is None or self.lo > self.hi:
                raise RandBoundsError(f"invalid bounds ({self.lo}, {self.hi}) for {self.render()}")
            if self.kind == SymbolKind.RAND_INT and not (
                isinstance(self.lo, int) and isinstance(self.hi, int)
            ):
                raise RandBoundsError(f"RANDINT bounds must be integers: ({self.lo}, {self.hi})")
        elif self.kind == SymbolKind.TERMINAL:
            if not self.name or any(c.isspace() or c in "<>" for c in self.name):
                raise GrammarSyntaxError(f"invalid terminal token {self.name!r}")

    @property
    def is_nonterminal(self) -> bool:
        return self.kind == SymbolKind.NONTERMINAL

    @property
    def is_rand(self) -> bool:
        return self.kind in (SymbolKind.RAND_INT, SymbolKind.RAND_FLOAT)

    def render(self) -> str:
        """Render the symbol the way it is written in a grammar file."""
        if self.kind == SymbolKind.NONTERMINAL:
            return f"<{self.name}>"
        if self.kind == SymbolKind.TERMINAL:
            return self.name
        prefix = f"{self.name}:" if self.name else ""
        if self.kind == SymbolKind.RAND_INT:
            return f"{prefix}RANDINT({self.lo},{self.hi})"
        return f"{prefix}RANDFLOAT({float(self.lo)!r},{float(self.hi)!r})"


@dataclass(frozen=True)
class Production:
    """One alternative of a rule."""
    rhs: tuple[Symbol, ...]

    def __post_init__(self):
        if not self.rhs:
            raise EmptyRuleError("production has an empty right-hand side")

    @property
    def nonterminals(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.rhs if s.is_nonterminal)

    def render(self) -> str:
        return " ".join(s.render() for s in self.rhs)


@dataclass(frozen=True)
class Grammar:
    """
    A validated grammar G = (N, T, P, S).

    Production order inside a rule is significant: codons index into it.
    Instances are immutable and safe to share between threads.
    """
    nonterminals: tuple[str, ...]
    rules: dict[str, tuple[Production, ...]] = field(hash=False)
    start: str

    def productions(self, nt: str) -> tuple[Production, ...]:
        """Get the productions of a nonterminal."""
        try:
            return self.rules[nt]
        except KeyError:
            raise UndefinedNonterminalError(nt) from None

    def expansion_count(self, nt: str) -> int:
        """Number of productions of `nt` (exclusive upper bound for its codons)."""
        return len(self.productions(nt))

    @cached_property
    def min_depths(self) -> dict[str, float]:
        """
        Minimum derivation depth of every nonterminal.

        A nonterminal whose productions are all terminals has depth 1.
        Nonterminals that can never finish a derivation get math.inf.
        """
        depth = {nt: math.inf for nt in self.nonterminals}
        changed = True
        while changed:
            changed = False
            for nt in self.nonterminals:
                for prod in self.rules[nt]:
                    d = 1 + max((depth[c] for c in prod.nonterminals), default=0)
                    if d < depth[nt]:
                        depth[nt] = d
                        changed = True
        return depth

    @cached_property
    def production_depths(self) -> dict[str, tuple[float, ...]]:
        """Minimum completion depth of each production, indexed like `rules`."""
        depths = self.min_depths
        return {
            nt: tuple(1 + max((depths[c] for c in p.nonterminals), default=0) for p in prods)
            for nt, prods in self.rules.items()
        }

    @property
    def min_depth(self) -> float:
        """Minimum depth of a complete derivation from the start symbol."""
        return self.min_depths[self.start]

    def feasible_choices(self, nt: str, depth: int, max_depth: int) -> list[int]:
        """
        Indices of the productions of `nt` that can complete within the bound.

        Args:
            nt: Nonterminal being expanded
            depth: Depth of `nt` in the derivation tree (start symbol = 1)
            max_depth: Depth bound of the whole derivation
        """
        remaining = max_depth - depth + 1
        return [i for i, d in enumerate(self.production_depths[nt]) if d <= remaining]

    @cached_property
    def is_recursive(self) -> bool:
        """True when some nonterminal can derive itself."""
        state: dict[str, int] = {}  # 1 = on stack, 2 = done

        def visit(nt: str) -> bool:
            state[nt] = 1
            for prod in self.rules[nt]:
                for child in prod.nonterminals:
                    mark = state.get(child)
                    if mark == 1:
                        return True
                    if mark is None and visit(child):
                        return True
            state[nt] = 2
            return False

        return any(state.get(nt) is None and visit(nt) for nt in self.nonterminals)

    def combination_count(self) -> Union[int, float]:
        """
        Count the distinct complete derivations of the grammar.

        RAND terminals contribute a factor of 1. Returns math.inf for
        recursive grammars; otherwise an exact (arbitrary precision) int.
        """
        if self.is_recursive:
            return math.inf

        memo: dict[str, int] = {}

        def count(nt: str) -> int:
            if nt not in memo:
                memo[nt] = sum(
                    math.prod(count(child) for child in prod.nonterminals)
                    for prod in self.rules[nt]
                )
            return memo[nt]

        return count(self.start)

    @property
    def production_total(self) -> int:
        return sum(len(prods) for prods in self.rules.values())


# =============================================================================
# Parsing
# =============================================================================

_TOKEN_RE = re.compile(
    r"""
      (?P<ws>[ \t\r\f\v]+)
    | (?P<define>::=)
    | (?P<bar>\|)
    | (?P<nt><(?P<ntname>[^<>\s|]+)>)
    | (?P<rand>(?:(?P<tag>[^\s<>|():]+):)?RAND(?P<rkind>INT|FLOAT)\((?P<args>[^()]*)\))
    | (?P<word>[^\s<>|]+)
    | (?P<bad>.)
    """,
    re.VERBOSE,
)

_MALFORMED_RAND_RE = re.compile(r"RAND(INT|FLOAT)\(")


@dataclass
class _Token:
    kind: str
    value: str
    column: int
    symbol: Optional[Symbol] = None


def _parse_bounds(kind: str, args: str, line: int, column: int) -> tuple[Number, Number]:
    parts = [a.strip() for a in args.split(",")]
    if len(parts) != 2 or not all(parts):
        raise RandBoundsError(f"RAND{kind} expects two bounds, got ({args})", line, column)
    try:
        if kind == "INT":
            lo, hi = int(parts[0]), int(parts[1])
        else:
            lo, hi = float(parts[0]), float(parts[1])
    except ValueError:
        raise RandBoundsError(f"non-numeric RAND{kind} bounds ({args})", line, column) from None
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise RandBoundsError(f"RAND{kind} bounds must be finite ({args})", line, column)
    if lo > hi:
        raise RandBoundsError(f"RAND{kind} lower bound exceeds upper bound ({args})", line, column)
    return lo, hi


def _tokenize(text: str, line: int) -> list[_Token]:
    tokens = []
    for m in _TOKEN_RE.finditer(text):
        kind = m.lastgroup
        column = m.start() + 1
        if m.group("ws"):
            continue
        if m.group("define"):
            tokens.append(_Token("define", "::=", column))
        elif m.group("bar"):
            tokens.append(_Token("bar", "|", column))
        elif m.group("nt"):
            name = m.group("ntname")
            tokens.append(_Token("nt", name, column, Symbol(SymbolKind.NONTERMINAL, name)))
        elif m.group("rand"):
            rkind = m.group("rkind")
            lo, hi = _parse_bounds(rkind, m.group("args"), line, column)
            sym_kind = SymbolKind.RAND_INT if rkind == "INT" else SymbolKind.RAND_FLOAT
            symbol = Symbol(sym_kind, m.group("tag") or "", lo, hi)
            tokens.append(_Token("symbol", m.group("rand"), column, symbol))
        elif m.group("word"):
            word = m.group("word")
            if _MALFORMED_RAND_RE.search(word):
                raise RandBoundsError(f"malformed random terminal {word!r}", line, column)
            tokens.append(_Token("symbol", word, column, Symbol(SymbolKind.TERMINAL, word)))
        else:
            raise GrammarSyntaxError(f"unexpected character {m.group(kind)!r}", line, column)
    return tokens


def parse_grammar(source: str) -> Grammar:
    """
    Parse and validate grammar text.

    Args:
        source: Grammar in the BNF-like file format

    Returns:
        Validated Grammar whose start symbol is the first rule

    Raises:
        GrammarError: syntax errors, undefined/unreachable nonterminals,
            empty or duplicate rules, malformed RAND bounds
    """
    alternatives: dict[str, list[list[Symbol]]] = {}
    defined_at: dict[str, int] = {}
    references: list[tuple[str, int, int]] = []
    current: Optional[str] = None
    last_line = 0

    def close_rule(name: Optional[str], line: int) -> None:
        if name is None:
            return
        alts = alternatives[name]
        if len(alts) == 1 and not alts[0]:
            raise EmptyRuleError(f"rule <{name}> has no productions", defined_at[name])
        if not alts[-1]:
            raise EmptyRuleError(f"rule <{name}> ends with an empty alternative", line)

    for lineno, raw in enumerate(source.splitlines(), start=1):
        text = raw.split("#", 1)[0]
        tokens = _tokenize(text, lineno)
        if not tokens:
            continue
        last_line = lineno

        if len(tokens) >= 2 and tokens[0].kind == "nt" and tokens[1].kind == "define":
            close_rule(current, lineno)
            current = tokens[0].value
            if current in alternatives:
                raise DuplicateRuleError(
                    f"rule <{current}> is already defined on line {defined_at[current]}",
                    lineno, tokens[0].column,
                )
            alternatives[current] = [[]]
            defined_at[current] = lineno
            body = tokens[2:]
        elif current is None:
            raise GrammarSyntaxError("expected '<name> ::=' to start a rule", lineno, tokens[0].column)
        else:
            body = tokens

        for tok in body:
            if tok.kind == "define":
                raise GrammarSyntaxError("unexpected '::='", lineno, tok.column)
            if tok.kind == "bar":
                if not alternatives[current][-1]:
                    raise EmptyRuleError(f"empty alternative in rule <{current}>", lineno, tok.column)
                alternatives[current].append([])
                continue
            alternatives[current][-1].append(tok.symbol)
            if tok.kind == "nt":
                references.append((tok.value, lineno, tok.column))

    if current is None:
        raise GrammarSyntaxError("grammar defines no rules")
    close_rule(current, last_line)

    for name, line, column in references:
        if name not in alternatives:
            raise UndefinedNonterminalError(name, line, column)

    nonterminals = tuple(alternatives)
    rules = {
        nt: tuple(Production(tuple(alt)) for alt in alts)
        for nt, alts in alternatives.items()
    }
    grammar = Grammar(nonterminals=nonterminals, rules=rules, start=nonterminals[0])
    _check_reachable(grammar, defined_at)
    _check_terminating(grammar, defined_at)
    return grammar


def _check_reachable(grammar: Grammar, defined_at: dict[str, int]) -> None:
    seen = {grammar.start}
    frontier = [grammar.start]
    while frontier:
        nt = frontier.pop()
        for prod in grammar.rules[nt]:
            for child in prod.nonterminals:
                if child not in seen:
                    seen.add(child)
                    frontier.append(child)
    for nt in grammar.nonterminals:
        if nt not in seen:
            raise UnreachableNonterminalError(nt, defined_at.get(nt))


def _check_terminating(grammar: Grammar, defined_at: dict[str, int]) -> None:
    for nt, depth in grammar.min_depths.items():
        if math.isinf(depth):
            raise NonTerminatingError(
                f"nonterminal <{nt}> can never derive a finite sentence", defined_at.get(nt)
            )


def load_grammar(path: Union[str, Path]) -> Grammar:
    """
    Read and parse a grammar file.

    Raises:
        GrammarError: with the file path prefixed to the message
        OSError: if the file cannot be read
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        grammar = parse_grammar(text)
    except GrammarError as e:
        e.args = (f"{path}: {e}",)
        raise
    logger.debug("Loaded grammar %s (%d rules, %d productions)",
                 path, len(grammar.nonterminals), grammar.production_total)
    return grammar


def render_grammar(grammar: Grammar) -> str:
    """Serialize a grammar back to the file format (one rule per line)."""
    lines = []
    for nt in grammar.nonterminals:
        alts = " | ".join(p.render() for p in grammar.rules[nt])
        lines.append(f"<{nt}> ::= {alts}")
    return "\n".join(lines) + "\n"


def expansion_count(grammar: Grammar, nt: str) -> int:
    """Number of productions for `nt`."""
    return grammar.expansion_count(nt)


def combination_count(grammar: Grammar) -> Union[int, float]:
    """Number of distinct derivations, or math.inf for recursive grammars."""
    return grammar.combination_count()
