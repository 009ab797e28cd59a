"""Darboux dressing of the nonlinear von Neumann equation i rho_dot = [H, f(rho)].

Subpackages:

* ``linalg``       dense complex matrix core (Jacobi eigensolver, matrix functions)
* ``nonlinearity`` scalar f families applied through the spectrum
* ``seeds``        seed solutions satisfying f(rho) - a*rho = commuting offset
* ``darboux``      Lax residuals, projectors, the dressing maps
* ``selfscatter``  closed-form self-scattering solutions and observables
* ``blocks``       block-structured high-dimensional dressing example
* ``oracle``       construction-blind RK4 integrator and conservation meters
* ``cli``          command-line driver (``nlvn``)
"""

__version__ = "0.1.0"
