"""Numerical toolkit for a tempered fractional Keller-Segel system.

Modules:

* :mod:`tfks.frac_ops` - Caputo, tempered Caputo, tempered fractional Laplacian, Mittag-Leffler.
* :mod:`tfks.model` - parameters, grids, gauge transform, residuals, CSV I/O.
* :mod:`tfks.pde_solver` - time marching in the gauged and original frames.
* :mod:`tfks.reductions` - similarity-reduced systems and their solvers.
* :mod:`tfks.lie` - symmetry algebras, adjoint action, optimal systems.
* :mod:`tfks.symcheck` - numerical verification of group flows.
* :mod:`tfks.cli` - batch command-line front end.
"""

__version__ = "0.1.0"
