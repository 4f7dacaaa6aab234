"""Multiphoton pair-breaking rates and charge-parity lifetimes in driven
superconducting circuits.

The package computes golden-rule quasiparticle-generation rates from the
dressed states of a periodically driven circuit, obtained by diagonalizing
the drive-photon-extended Hamiltonian, together with the BCS structure
factors that weight each multiphoton transition channel.
"""

__version__ = "0.1.0"
