"""Operational transformation for unordered trees with unique edge identifiers.

``tree``          identifier trees and the Add/Del/Mv/Ren/Nop semantics
``transform``     the transformation IT, IT*, and exhaustive TP1/TP2 sweeps
``replication``   integration of remote tree requests over dependency sets
``word``          the per-node text object
``compose``       trees whose nodes carry words
``paths``         name-path trees with Del1/Del2 and the Del1 falsifier
``sim``/``fuzz``  replica simulator, scenario fuzzer and shrinker
``cli``           the ``ottree`` command
"""
