"""
rydberg_rbm

Reconstruction of positive pure states of Rydberg-atom chains with restricted
Boltzmann machines, an optional measurement-noise layer, and exact
(eigensolver and master-equation) ground truths to verify against.
"""

__version__ = "0.1.0"
