"""Team cognitive profiles, combinatorial novelty and disruption for paper corpora."""

__version__ = "0.1.0"
