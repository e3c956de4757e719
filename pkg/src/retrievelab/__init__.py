"""Desk-scale two-stage retrieval workbench.

Staged training for an embedder and a reranker, mixed-stage checkpoint
selection, exact retrieve-then-rerank with latency accounting, and an offline
double-blind A/B evaluation harness.
"""

__version__ = "0.1.0"
