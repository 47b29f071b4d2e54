"""Learned reactive planning: super-map memory, policy trees and an optimistic fallback."""
from importlib import resources

__version__ = "0.1.0"


def fixture_path(name: str):
    """Path to a bundled fixture file, e.g. fixture_path("two_door.json")."""
    return resources.files(__name__).joinpath("data", name)
