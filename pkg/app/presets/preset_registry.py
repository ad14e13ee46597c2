"""Preset registry: central lookup of the published ZI models by name.

Presets are registered here so the CLI and the tests can ask for a model
by its name string rather than importing builders directly.
"""

from collections.abc import Callable

from app.errors import IntensityValidationError
from app.models.intensity import IntensitySpec
from app.presets.book_presets import cont, luckock, smith, stigler

# Maps preset names to their builder functions.
# Each builder takes the constants of its table row and returns an IntensitySpec.
PRESET_REGISTRY: dict[str, Callable[..., IntensitySpec]] = {
    "smith": smith,
    "cont": cont,
    "luckock": luckock,
    "stigler": stigler,
}


def preset(name: str, **preset_params) -> IntensitySpec:
    """Build the named preset from its constants."""
    builder = PRESET_REGISTRY.get(name.lower())
    if builder is None:
        raise IntensityValidationError(
            f"Unknown preset '{name}'. Must be one of: {', '.join(sorted(PRESET_REGISTRY))}"
        )
    return builder(**preset_params)
