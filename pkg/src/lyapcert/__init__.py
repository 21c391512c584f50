"""Positivity certificates for forms and Lyapunov certificates for
homogeneous polynomial vector fields."""

from .poly import Polynomial, degree_info, evaluate, grad_inner, gradient, homogenize

__version__ = "0.1.0"

__all__ = ["Polynomial", "degree_info", "evaluate", "grad_inner", "gradient", "homogenize"]
