"""Harmonic functions in chambered cylinders: spectra, junction transfer, frequencies."""
from .cross_section import Grid1D, Grid2D, Interval, Rectangle, compute_spectrum, morse_index
from .harmonic_field import Profile, Side, ModeSeries, Term, canonical_semicylinder_solution, evaluate
from .junction import assemble_transfer, make_embedding, solve_matched, solve_transfer

__version__ = "0.1.0"

__all__ = [
    "Grid1D", "Grid2D", "Interval", "Rectangle", "compute_spectrum", "morse_index",
    "Profile", "Side", "ModeSeries", "Term", "canonical_semicylinder_solution", "evaluate",
    "assemble_transfer", "make_embedding", "solve_matched", "solve_transfer",
]
