"""
Dynamic Structured Grammatical Evolution (DSGE) representation.

- RandValue: stored (type, min, max, value) tuple for RANDINT/RANDFLOAT terminals
- Genotype: one codon list per nonterminal plus the stored random values
- Phenotype: the terminal token stream a genotype maps to

The genotype only ever holds the codons the mapping consumed: lists grow on
demand while mapping and surplus entries are dropped. Every variation
operator re-maps its result, which is the single repair step.
"""

import hashlib
import json
import logging
import random
from collections.abc import Collection
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

from dsge_automl.core.errors import MappingError
from dsge_automl.core.grammar import Grammar, Symbol, SymbolKind

logger = logging.getLogger(__name__)

Number = Union[int, float]

DEFAULT_MAX_DEPTH = 17


class RandType(Enum):
    INTEGER = "int"
    FLOAT = "float"


@dataclass(frozen=True)
class RandValue:
    """A random numeric value kept in the genotype together with its range."""
    rand_type: RandType
    rand_min: Number
    rand_max: Number
    rand_value: Number

    def __post_init__(self):
        if self.rand_type == RandType.INTEGER:
            for v in (self.rand_min, self.rand_max, self.rand_value):
                if not isinstance(v, int):
                    raise ValueError(f"integer RandValue holds non-integer {v!r}")
        if not self.rand_min <= self.rand_value <= self.rand_max:
            raise ValueError(
                f"RandValue {self.rand_value!r} outside [{self.rand_min!r}, {self.rand_max!r}]"
            )

    @classmethod
    def sample(cls, symbol: Symbol, rng: random.Random) -> "RandValue":
        """Draw a fresh value for a RAND symbol, uniform over its range."""
        if symbol.kind == SymbolKind.RAND_INT:
            return cls(RandType.INTEGER, symbol.lo, symbol.hi, rng.randint(symbol.lo, symbol.hi))
        lo, hi = float(symbol.lo), float(symbol.hi)
        return cls(RandType.FLOAT, lo, hi, min(hi, max(lo, rng.uniform(lo, hi))))

    def resample(self, rng: random.Random) -> "RandValue":
        """Same type and range, new uniformly drawn value."""
        if self.rand_type == RandType.INTEGER:
            value = rng.randint(self.rand_min, self.rand_max)
        else:
            value = min(self.rand_max, max(self.rand_min, rng.uniform(self.rand_min, self.rand_max)))
        return RandValue(self.rand_type, self.rand_min, self.rand_max, value)

    def matches(self, symbol: Symbol) -> bool:
        """Check that this value was drawn for a symbol with the same type and range."""
        expected = RandType.INTEGER if symbol.kind == SymbolKind.RAND_INT else RandType.FLOAT
        return (self.rand_type == expected
                and self.rand_min == symbol.lo
                and self.rand_max == symbol.hi)

    def render(self) -> str:
        if self.rand_type == RandType.INTEGER:
            return str(self.rand_value)
        return repr(float(self.rand_value))

    def to_list(self) -> list:
        return [self.rand_type.value, self.rand_min, self.rand_max, self.rand_value]

    @classmethod
    def from_list(cls, data: list) -> "RandValue":
        kind, lo, hi, value = data
        rand_type = RandType(kind)
        cast = int if rand_type == RandType.INTEGER else float
        return cls(rand_type, cast(lo), cast(hi), cast(value))


@dataclass(frozen=True)
class Genotype:
    """
    Per-nonterminal codon lists plus random values.

    Nonterminals with nothing stored are omitted, so two genotypes that
    encode the same derivation compare equal.
    """
    codons: dict[str, tuple[int, ...]] = field(default_factory=dict)
    rand_values: dict[str, tuple[RandValue, ...]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "codons", {
            nt: tuple(int(c) for c in seq) for nt, seq in self.codons.items() if len(seq)
        })
        object.__setattr__(self, "rand_values", {
            nt: tuple(seq) for nt, seq in self.rand_values.items() if len(seq)
        })

    @property
    def codon_count(self) -> int:
        return sum(len(seq) for seq in self.codons.values())

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            "codons": {nt: list(seq) for nt, seq in self.codons.items()},
            "rand_values": {nt: [v.to_list() for v in seq] for nt, seq in self.rand_values.items()},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Genotype":
        """Create from dictionary."""
        return cls(
            codons={nt: tuple(seq) for nt, seq in data.get("codons", {}).items()},
            rand_values={
                nt: tuple(RandValue.from_list(v) for v in seq)
                for nt, seq in data.get("rand_values", {}).items()
            },
        )

    def digest(self) -> bytes:
        """Stable digest of the genotype contents."""
        text = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.blake2b(text.encode("utf-8"), digest_size=16).digest()


@dataclass(frozen=True)
class Phenotype:
    """Ordered terminal tokens, e.g. `classifier:knn n_neighbors:5`."""
    tokens: tuple[str, ...]

    @property
    def text(self) -> str:
        return " ".join(self.tokens)

    def __str__(self) -> str:
        return self.text

    @classmethod
    def from_text(cls, text: str) -> "Phenotype":
        return cls(tuple(text.split()))


def _render_rand(symbol: Symbol, value: RandValue) -> str:
    return f"{symbol.name}:{value.render()}" if symbol.name else value.render()


def map_genotype(
    grammar: Grammar,
    genotype: Genotype,
    max_depth: int = DEFAULT_MAX_DEPTH,
    rng: Optional[random.Random] = None,
) -> tuple[Phenotype, Genotype]:
    """
    Map a genotype to its phenotype by leftmost derivation.

    Each expansion of a nonterminal reads that nonterminal's next codon; an
    exhausted list grows by a depth-feasible codon drawn from `rng`. RAND
    terminals read the next stored value of the nonterminal whose production
    holds them. Stored codons that are no longer depth-feasible and stored
    values whose range no longer matches are redrawn.

    Args:
        grammar: Grammar to derive from
        genotype: Genotype to read
        max_depth: Maximum derivation tree depth (start symbol = 1)
        rng: Stream for growth; defaults to one seeded from the genotype digest

    Returns:
        (phenotype, genotype holding exactly the consumed codons and values)

    Raises:
        MappingError: no feasible production within the bound, or a codon
            outside its nonterminal's range
    """
    if grammar.min_depth > max_depth:
        raise MappingError(
            f"max_depth {max_depth} is below the grammar's minimum depth {grammar.min_depth}"
        )
    if rng is None:
        rng = random.Random(genotype.digest())

    used_codons: dict[str, list[int]] = {}
    used_rands: dict[str, list[RandValue]] = {}
    tokens: list[str] = []

    # (symbol, depth, nonterminal whose production emitted it)
    stack: list[tuple[Symbol, int, Optional[str]]] = [
        (Symbol(SymbolKind.NONTERMINAL, grammar.start), 1, None)
    ]
    while stack:
        symbol, depth, owner = stack.pop()

        if symbol.kind == SymbolKind.TERMINAL:
            tokens.append(symbol.name)
            continue

        if symbol.is_rand:
            consumed = used_rands.setdefault(owner, [])
            stored = genotype.rand_values.get(owner, ())
            value = stored[len(consumed)] if len(consumed) < len(stored) else None
            if value is None or not value.matches(symbol):
                value = RandValue.sample(symbol, rng)
            consumed.append(value)
            tokens.append(_render_rand(symbol, value))
            continue

        nt = symbol.name
        choices = grammar.feasible_choices(nt, depth, max_depth)
        if not choices:
            raise MappingError(f"no production of <{nt}> fits in the remaining depth at depth {depth}")

        consumed = used_codons.setdefault(nt, [])
        stored = genotype.codons.get(nt, ())
        if len(consumed) < len(stored):
            codon = stored[len(consumed)]
            if not 0 <= codon < grammar.expansion_count(nt):
                raise MappingError(f"codon {codon} out of range for <{nt}>")
            if codon not in choices:
                codon = rng.choice(choices)
        else:
            codon = rng.choice(choices)
        consumed.append(codon)

        for child in reversed(grammar.rules[nt][codon].rhs):
            stack.append((child, depth + 1, nt))

    return Phenotype(tuple(tokens)), Genotype(
        codons={nt: tuple(seq) for nt, seq in used_codons.items()},
        rand_values={nt: tuple(seq) for nt, seq in used_rands.items()},
    )


def random_genotype(
    grammar: Grammar,
    rng: random.Random,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> Genotype:
    """
    Sample a genotype by growing an empty one through the mapper.

    Every codon is drawn uniformly among the depth-feasible productions and
    every RAND terminal gets a fresh value.

    Raises:
        MappingError: if no complete derivation fits in max_depth
    """
    return map_genotype(grammar, Genotype(), max_depth, rng)[1]


def mutate(
    grammar: Grammar,
    genotype: Genotype,
    rng: random.Random,
    per_codon_rate: float,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> Genotype:
    """
    Per-codon mutation.

    Each codon, with probability `per_codon_rate`, is replaced by a different
    valid codon for its nonterminal; each RandValue, with the same
    probability, is redrawn within its own range. The result is re-mapped.
    """
    if not 0.0 <= per_codon_rate <= 1.0:
        raise ValueError(f"per_codon_rate must be in [0, 1], got {per_codon_rate}")

    codons: dict[str, list[int]] = {}
    rand_values: dict[str, list[RandValue]] = {}
    for nt in grammar.nonterminals:
        n = grammar.expansion_count(nt)
        seq = list(genotype.codons.get(nt, ()))
        for i, codon in enumerate(seq):
            if rng.random() < per_codon_rate and n > 1:
                new = rng.randrange(n - 1)
                seq[i] = new + 1 if new >= codon else new
        codons[nt] = seq

        values = list(genotype.rand_values.get(nt, ()))
        for i, value in enumerate(values):
            if rng.random() < per_codon_rate:
                values[i] = value.resample(rng)
        rand_values[nt] = values

    return map_genotype(grammar, Genotype(codons, rand_values), max_depth, rng)[1]


def apply_crossover_mask(
    grammar: Grammar,
    a: Genotype,
    b: Genotype,
    swap: Collection[str],
    rng: random.Random,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> tuple[Genotype, Genotype]:
    """
    Exchange whole nonterminal entries between two parents.

    Child 1 takes the codons and random values of the nonterminals in `swap`
    from `b` and everything else from `a`; child 2 is the complement.
    """
    def pick(first: Genotype, second: Genotype) -> Genotype:
        codons = {}
        rand_values = {}
        for nt in grammar.nonterminals:
            donor = second if nt in swap else first
            codons[nt] = donor.codons.get(nt, ())
            rand_values[nt] = donor.rand_values.get(nt, ())
        return Genotype(codons, rand_values)

    child1 = map_genotype(grammar, pick(a, b), max_depth, rng)[1]
    child2 = map_genotype(grammar, pick(b, a), max_depth, rng)[1]
    return child1, child2


def crossover(
    grammar: Grammar,
    a: Genotype,
    b: Genotype,
    rng: random.Random,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> tuple[Genotype, Genotype]:
    """Uniform per-nonterminal crossover with a random binary mask."""
    swap = {nt for nt in grammar.nonterminals if rng.random() < 0.5}
    return apply_crossover_mask(grammar, a, b, swap, rng, max_depth)
