"""Cluster-algebra realizations of lattice equations and their log-canonical
Hamiltonian structures, computed in exact arithmetic."""

from __future__ import annotations

__version__ = "0.1.0"
