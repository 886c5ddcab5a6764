"""Named chart potentials and reference-class perturbations.

Presets rather than arbitrary expressions: ``flat``, ``cos_bump`` (with an
amplitude A giving h = A cos(x^1), so the n = 1 metric becomes
1 - (A/4) cos(x^1)), and ``product_bump`` (h = A cos(x^1) cos(y^1)).
"""

from __future__ import annotations

import numpy as np

from .exceptions import ConfigError
from .grid import GridSpec, ScalarField
from .transverse import HermitianField, ddbar

__all__ = ["POTENTIAL_PRESETS", "potential_field", "chi_field"]

POTENTIAL_PRESETS = ("flat", "cos_bump", "product_bump")


def potential_field(spec: GridSpec, name: str, amplitude: float = 0.0) -> ScalarField:
    if name == "flat":
        return ScalarField.zeros(spec, basic=True)
    if name == "cos_bump":
        return ScalarField.from_function(spec, lambda x, y, *rest: amplitude * np.cos(x))
    if name == "product_bump":
        return ScalarField.from_function(
            spec, lambda x, y, *rest: amplitude * np.cos(x) * np.cos(y)
        )
    raise ConfigError(f"unknown potential preset {name!r}; choose from {POTENTIAL_PRESETS}")


def chi_field(spec: GridSpec, name: str, amplitude: float = 0.0) -> HermitianField:
    """A reference-class perturbation chi; always ddbar-exact by construction."""
    if name in ("none", ""):
        return HermitianField.zeros(spec)
    if name in POTENTIAL_PRESETS:
        return ddbar(potential_field(spec, name, amplitude))
    raise ConfigError(f"unknown chi preset {name!r}; choose 'none' or one of {POTENTIAL_PRESETS}")
