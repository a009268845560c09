"""Rigorous numerics for localized patterns of the 2D Swift-Hohenberg equation.

Modules: ``interval`` (outward-rounded arithmetic), ``d2seq`` (D2-symmetric
cosine sequences), ``shmodel`` (operator and constants), ``ansatz`` (numerical
construction of U0), ``c0bound`` (decay constant), ``bounds`` (Y0, Z1, Zu, Z2),
``prover`` (radii checks and certificates), ``cli``.
"""

__version__ = "0.1.0"
