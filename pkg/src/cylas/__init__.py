"""Radial and axisymmetric positive solutions of u_tt + Δ_S u + b u_t + a u + u^p = 0
on a half cylinder, and what they say about isolated singularities on the ball."""

__version__ = "0.1.0"
