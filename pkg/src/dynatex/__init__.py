"""Pose-driven neural video renderer with a learnable hybrid texture.

Subpackages are imported lazily by the code that needs them; importing
dynatex itself stays cheap (no torch import) so dataset tooling starts
fast.
"""

__version__ = "0.1.0"

from . import errors

__all__ = ["errors", "__version__"]
