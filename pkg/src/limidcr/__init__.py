"""Exact and anytime strategy selection for limited memory influence diagrams.

Modules: ``model`` (diagrams, strategies, exact evaluation), ``credal``
(translation to a credal network), ``reform`` (bilinear program and its
linearization), ``solver`` (branch-and-bound, SPU), ``bench`` (random
instances and the EBO diagram), ``cli`` (the ``limidcr`` command).
"""
