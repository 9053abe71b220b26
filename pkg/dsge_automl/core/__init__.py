"""Grammar, genotype mapping, evolution and pipeline compilation."""
