"""
ringlab - flat planetary ring dynamics laboratory

Annulus self-gravity, libration circles, collision-free (Model A) and kinetic
(Model B) ring simulations, and the Fuller chattering synthesis.
"""

__version__ = "0.1.0"
