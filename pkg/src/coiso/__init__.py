"""coiso: exact calculus for coisotropic deformations in Jacobi geometry.

The library works on trivialized charts T^k x R^m with Gaussian-rational
Fourier-polynomial coefficients.  Everything is exact; there is no floating
point anywhere.
"""

__version__ = "0.1.0"
