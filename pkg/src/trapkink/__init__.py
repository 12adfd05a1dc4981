"""Kinks and kink-antikink pairs of the phi^4 field in a parabolic trap."""

from .model import SimParams, potential_d2u, potential_du, potential_v, tf_profile, tf_support_radius

__version__ = "0.1.0"

__all__ = ["SimParams", "potential_v", "potential_du", "potential_d2u", "tf_profile",
           "tf_support_radius"]
