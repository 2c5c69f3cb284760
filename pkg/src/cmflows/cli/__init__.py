"""Command-line interface."""
from .grammar import parse_hamiltonian
from .main import build_parser, main

__all__ = ["build_parser", "main", "parse_hamiltonian"]
