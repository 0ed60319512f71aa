"""Randomly weighted feature networks and neural tensor networks as fuzzy-logic
predicate groundings, trained by maximising knowledge-base satisfiability."""

__version__ = "0.1.0"
