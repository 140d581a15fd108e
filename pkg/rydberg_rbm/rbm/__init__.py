"""
RBM module for rydberg_rbm
"""

from rydberg_rbm.rbm.machine import RBM, GibbsChain

__all__ = ['RBM', 'GibbsChain']
