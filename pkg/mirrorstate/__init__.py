"""
mirrorstate: mirror diffusion for quantum density matrices.

Score-based generative modeling in the unconstrained dual space of the
von Neumann entropy mirror map, so that every decoded sample is a valid
density matrix.
"""

__version__ = "0.1.0"
