"""Tests for the DSGE genotype, mapping and variation operators."""

import random

import pytest

from dsge_automl.core.dsge import (
    Genotype,
    Phenotype,
    RandType,
    RandValue,
    apply_crossover_mask,
    crossover,
    map_genotype,
    mutate,
    random_genotype,
)
from dsge_automl.core.errors import MappingError
from dsge_automl.core.grammar import Grammar, Symbol, SymbolKind, parse_grammar
from dsge_automl.core.pipeline import compile_phenotype

N_SAMPLES = 10_000


class NoDraws:
    """Stands in for random.Random where mapping must not draw anything."""

    def _fail(self, *args, **kwargs):
        raise AssertionError("mapping drew a random number")

    random = choice = randint = uniform = randrange = _fail


def _rand_token_ok(symbol: Symbol, token: str) -> bool:
    if symbol.name:
        prefix = symbol.name + ":"
        if not token.startswith(prefix):
            return False
        token = token[len(prefix):]
    try:
        value = int(token) if symbol.kind == SymbolKind.RAND_INT else float(token)
    except ValueError:
        return False
    return symbol.lo <= value <= symbol.hi


def _ends(grammar: Grammar, symbols, tokens, pos: int) -> set:
    """Positions where a derivation of `symbols` starting at `pos` can end."""
    ends = {pos}
    for sym in symbols:
        nxt = set()
        for p in ends:
            if sym.kind == SymbolKind.NONTERMINAL:
                for prod in grammar.rules[sym.name]:
                    nxt |= _ends(grammar, prod.rhs, tokens, p)
            elif p < len(tokens):
                if sym.kind == SymbolKind.TERMINAL and tokens[p] == sym.name:
                    nxt.add(p + 1)
                elif sym.is_rand and _rand_token_ok(sym, tokens[p]):
                    nxt.add(p + 1)
        ends = nxt
    return ends


def random_genotype_text(grammar: Grammar, seed: int, **kwargs) -> str:
    g = random_genotype(grammar, random.Random(seed), **kwargs)
    return map_genotype(grammar, g, rng=NoDraws(), **kwargs)[0].text


def in_language(grammar: Grammar, pheno: Phenotype) -> bool:
    start = (Symbol(SymbolKind.NONTERMINAL, grammar.start),)
    return len(pheno.tokens) in _ends(grammar, start, pheno.tokens, 0)


# =============================================================================
# Value types
# =============================================================================


class TestRandValue:
    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            RandValue(RandType.INTEGER, 1, 5, 6)

    def test_rejects_float_in_integer_value(self):
        with pytest.raises(ValueError):
            RandValue(RandType.INTEGER, 1, 5, 2.5)

    def test_sample_stays_in_range(self):
        rng = random.Random(3)
        int_sym = Symbol(SymbolKind.RAND_INT, "k", 1, 3)
        float_sym = Symbol(SymbolKind.RAND_FLOAT, "r", 0.5, 0.75)
        for _ in range(500):
            v = RandValue.sample(int_sym, rng)
            assert v.rand_type == RandType.INTEGER and 1 <= v.rand_value <= 3
            f = RandValue.sample(float_sym, rng)
            assert f.rand_type == RandType.FLOAT and 0.5 <= f.rand_value <= 0.75

    def test_from_list_casts(self):
        v = RandValue.from_list(["float", 0, 1, 1])
        assert v == RandValue(RandType.FLOAT, 0.0, 1.0, 1.0)
        assert v.render() == "1.0"

    def test_matches_type_and_range(self):
        v = RandValue(RandType.INTEGER, 1, 5, 2)
        assert v.matches(Symbol(SymbolKind.RAND_INT, "k", 1, 5))
        assert not v.matches(Symbol(SymbolKind.RAND_INT, "k", 1, 6))
        assert not v.matches(Symbol(SymbolKind.RAND_FLOAT, "k", 1.0, 5.0))


class TestGenotype:
    def test_empty_lists_are_dropped(self):
        assert Genotype({"a": (), "b": (1,)}) == Genotype({"b": (1,)})

    def test_dict_round_trip(self, shipped_grammar):
        g = random_genotype(shipped_grammar, random.Random(11))
        assert Genotype.from_dict(g.to_dict()) == g

    def test_digest_is_deterministic(self, shipped_grammar):
        g1 = random_genotype(shipped_grammar, random.Random(5))
        g2 = random_genotype(shipped_grammar, random.Random(5))
        assert g1.digest() == g2.digest()
        assert Genotype({"s": (0,)}).digest() != Genotype({"s": (1,)}).digest()

    def test_phenotype_text(self):
        pheno = Phenotype.from_text("classifier:knn  n_neighbors:5")
        assert pheno.tokens == ("classifier:knn", "n_neighbors:5")
        assert str(pheno) == "classifier:knn n_neighbors:5"


# =============================================================================
# Mapping
# =============================================================================


class TestMapGenotype:
    def test_toy_derivation(self, toy_grammar):
        pheno, used = map_genotype(toy_grammar, Genotype({"s": (0,), "a": (1,), "b": (0,)}))
        assert pheno.tokens == ("y", "0")
        assert used == Genotype({"s": (0,), "a": (1,), "b": (0,)})

    def test_surplus_codons_are_dropped(self, toy_grammar):
        pheno, used = map_genotype(toy_grammar, Genotype({"s": (1, 0, 0), "a": (1,), "b": (1, 1)}))
        assert pheno.tokens == ("1",)
        assert used == Genotype({"s": (1,), "b": (1,)})

    def test_codon_out_of_range(self, toy_grammar):
        with pytest.raises(MappingError):
            map_genotype(toy_grammar, Genotype({"s": (7,)}))

    def test_depth_below_grammar_minimum(self, shipped_grammar):
        with pytest.raises(MappingError):
            map_genotype(shipped_grammar, Genotype(), max_depth=2)

    def test_stored_value_read_per_nonterminal(self):
        g = parse_grammar("<s> ::= k:RANDINT(1,5) RANDFLOAT(0.0,1.0)")
        stored = Genotype(
            {"s": (0,)},
            {"s": (RandValue(RandType.INTEGER, 1, 5, 3), RandValue(RandType.FLOAT, 0.0, 1.0, 0.25))},
        )
        pheno, used = map_genotype(g, stored, rng=NoDraws())
        assert pheno.tokens == ("k:3", "0.25")
        assert used == stored

    def test_mismatched_range_is_redrawn(self):
        g = parse_grammar("<s> ::= k:RANDINT(1,5)")
        stale = Genotype({"s": (0,)}, {"s": (RandValue(RandType.INTEGER, 1, 9, 7),)})
        pheno, used = map_genotype(g, stale, rng=random.Random(0))
        value = used.rand_values["s"][0]
        assert (value.rand_min, value.rand_max) == (1, 5)
        assert pheno.tokens == (f"k:{value.rand_value}",)

    def test_depth_bound_on_recursive_grammar(self):
        g = parse_grammar("<s> ::= <s> a | a")
        rng = random.Random(1)
        for _ in range(200):
            pheno, _ = map_genotype(g, Genotype(), max_depth=5, rng=rng)
            assert 1 <= len(pheno.tokens) <= 5

    def test_recursive_grammar_at_depth_three(self):
        g = parse_grammar("<s> ::= a <s> | a")
        seen = {random_genotype_text(g, seed, max_depth=3) for seed in range(500)}
        assert seen == {"a", "a a", "a a a"}

    def test_toy_language_is_reachable(self, toy_grammar):
        seen = {random_genotype_text(toy_grammar, seed) for seed in range(N_SAMPLES)}
        assert seen == {"x 0", "x 1", "y 0", "y 1", "0", "1"}

    def test_infeasible_stored_codon_is_replaced(self):
        g = parse_grammar("<s> ::= <s> a | a")
        pheno, used = map_genotype(g, Genotype({"s": (0, 0, 0, 0)}), max_depth=3, rng=random.Random(0))
        assert pheno.tokens == ("a", "a", "a")
        assert used.codons["s"] == (0, 0, 1)

    def test_default_stream_depends_only_on_genotype(self, shipped_grammar):
        partial = Genotype({"pipeline": (0,)})
        assert map_genotype(shipped_grammar, partial) == map_genotype(shipped_grammar, partial)


class TestShippedGrammarMapping:
    @pytest.fixture(scope="class")
    def samples(self, shipped_grammar):
        rng = random.Random(2024)
        out = []
        for _ in range(N_SAMPLES):
            g = random_genotype(shipped_grammar, rng)
            out.append((g, map_genotype(shipped_grammar, g, rng=NoDraws())[0]))
        return out

    def test_phenotypes_belong_to_language(self, shipped_grammar, samples):
        for _, pheno in samples:
            assert in_language(shipped_grammar, pheno), pheno.text

    def test_phenotypes_compile(self, registry, samples):
        for _, pheno in samples:
            compile_phenotype(pheno, registry)

    def test_consumes_exactly_what_it_holds(self, shipped_grammar, samples):
        for g, pheno in samples:
            again, used = map_genotype(shipped_grammar, g, rng=NoDraws())
            assert again == pheno
            assert used == g

    def test_varied_genotypes_consume_exactly_what_they_hold(self, shipped_grammar, samples):
        rng = random.Random(31)
        for i in range(N_SAMPLES // 2):
            a, b = samples[2 * i][0], samples[2 * i + 1][0]
            children = crossover(shipped_grammar, a, b, rng)
            for child in (mutate(shipped_grammar, children[0], rng, 0.1), children[1]):
                assert map_genotype(shipped_grammar, child, rng=NoDraws())[1] == child

    def test_growth_of_truncated_genotypes(self, shipped_grammar, samples):
        rng = random.Random(9)
        for g, _ in samples[:1_000]:
            truncated = Genotype(
                {nt: seq[: rng.randrange(len(seq) + 1)] for nt, seq in g.codons.items()},
                g.rand_values,
            )
            pheno, grown = map_genotype(shipped_grammar, truncated, rng=rng)
            assert in_language(shipped_grammar, pheno)
            assert map_genotype(shipped_grammar, grown, rng=NoDraws()) == (pheno, grown)

    def test_reaches_every_classifier(self, samples):
        seen = {t for _, p in samples for t in p.tokens if t.startswith("classifier:")}
        assert len(seen) == 8


# =============================================================================
# Variation
# =============================================================================


class TestMutation:
    def test_zero_rate_is_identity(self, shipped_grammar):
        g = random_genotype(shipped_grammar, random.Random(4))
        assert mutate(shipped_grammar, g, random.Random(0), 0.0) == g

    def test_full_rate_changes_codon(self):
        g = parse_grammar("<s> ::= a | b | c")
        rng = random.Random(0)
        for codon in range(3):
            for _ in range(50):
                child = mutate(g, Genotype({"s": (codon,)}), rng, 1.0)
                assert child.codons["s"][0] != codon

    def test_rate_outside_unit_interval(self, toy_grammar):
        with pytest.raises(ValueError):
            mutate(toy_grammar, Genotype(), random.Random(0), 1.5)

    def test_values_keep_type_and_range(self, shipped_grammar):
        rng = random.Random(17)
        g = random_genotype(shipped_grammar, rng)
        for _ in range(N_SAMPLES):
            g = mutate(shipped_grammar, g, rng, 0.5)
            pheno, again = map_genotype(shipped_grammar, g, rng=NoDraws())
            assert again == g
            assert in_language(shipped_grammar, pheno)
            for values in g.rand_values.values():
                for v in values:
                    assert v.rand_min <= v.rand_value <= v.rand_max
                    if v.rand_type == RandType.INTEGER:
                        assert isinstance(v.rand_value, int)
                    else:
                        assert isinstance(v.rand_value, float)


class TestCrossover:
    PARENT_A = Genotype({"s": (0,), "a": (0,), "b": (0,)})  # x 0
    PARENT_B = Genotype({"s": (0,), "a": (1,), "b": (1,)})  # y 1

    def test_mask_swaps_whole_entries(self, toy_grammar):
        c1, c2 = apply_crossover_mask(toy_grammar, self.PARENT_A, self.PARENT_B, {"a"}, NoDraws())
        assert map_genotype(toy_grammar, c1)[0].tokens == ("y", "0")
        assert map_genotype(toy_grammar, c2)[0].tokens == ("x", "1")

    def test_empty_mask_copies_parents(self, toy_grammar):
        c1, c2 = apply_crossover_mask(toy_grammar, self.PARENT_A, self.PARENT_B, set(), NoDraws())
        assert (c1, c2) == (self.PARENT_A, self.PARENT_B)

    def test_children_are_valid(self, shipped_grammar):
        rng = random.Random(8)
        for _ in range(N_SAMPLES):
            a = random_genotype(shipped_grammar, rng)
            b = random_genotype(shipped_grammar, rng)
            for child in crossover(shipped_grammar, a, b, rng):
                pheno, again = map_genotype(shipped_grammar, child, rng=NoDraws())
                assert again == child
                assert in_language(shipped_grammar, pheno)
