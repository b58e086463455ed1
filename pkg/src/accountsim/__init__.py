"""Account-similarity toolkit: embed social-media accounts by content and
by network position, search exact nearest neighbors from seed accounts,
expand recursively, and evaluate retrieval with precision@k."""

__version__ = "0.1.0"
