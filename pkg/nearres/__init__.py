"""
nearres: near-resonant triad interactions for rotating flows on anisotropic tori.

Modules, bottom-up: lattice (geometry and mode sets), helical (per-mode
Coriolis algebra), resonance (bandwidth rules and triad counts), field
(truncated spectral fields), bilinear (NR advection), solver (IF-RK4
integration), sublevel and counting (the geometry behind the counts),
cli (the `nearres` command).
"""

__version__ = "0.1.0"
