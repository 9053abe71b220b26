"""
Load component declarations from the component library.
"""

import json
import logging
import os
from typing import Optional

from dsge_automl.core.components import ComponentEntry, ComponentRegistry, Role
from dsge_automl.core.errors import ConfigError
from dsge_automl.ml import IMPLEMENTATIONS

logger = logging.getLogger(__name__)


class ComponentLoader:
    """Loads component entries from component_library/*.json."""

    def __init__(self, library_path: str):
        """
        Initialize the loader.

        Args:
            library_path: Path to a component_library directory
        """
        self.library_path = library_path
        self.entries: dict[str, ComponentEntry] = {}

    def list_files(self) -> list[str]:
        """Library files in load order; names starting with '_' are skipped."""
        if not os.path.isdir(self.library_path):
            return []
        return sorted(
            name for name in os.listdir(self.library_path)
            if name.endswith(".json") and not name.startswith("_")
        )

    def load(self) -> ComponentRegistry:
        """
        Load every library file and bind entries to their implementations.

        Returns:
            Registry of all loaded components

        Raises:
            ConfigError: if the library holds no component at all
        """
        self.entries.clear()
        for name in self.list_files():
            self._load_file(os.path.join(self.library_path, name))

        if not self.entries:
            raise ConfigError(f"no components found in {self.library_path}")

        for component_id in self.entries:
            if component_id not in IMPLEMENTATIONS:
                logger.info("Component %s has no implementation; it can be compiled but not run", component_id)
        registry = ComponentRegistry.from_entries(self.entries.values(), IMPLEMENTATIONS)
        logger.debug("Loaded %d components from %s", len(registry), self.library_path)
        return registry

    def _load_file(self, file_path: str) -> None:
        """Load the components of one library file."""
        try:
            with open(file_path, "r") as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            logger.warning("Skipping component file %s: %s", file_path, e)
            return

        role = data.get("role")
        for entry_data in data.get("components", []):
            try:
                entry = ComponentEntry.from_dict(entry_data, role)
            except (KeyError, ValueError) as e:
                logger.warning("Skipping malformed component in %s: %s", file_path, e)
                continue
            if entry.id in self.entries:
                logger.warning("Component %s redefined in %s", entry.id, file_path)
            self.entries[entry.id] = entry

    def get_entry(self, component_id: str) -> Optional[ComponentEntry]:
        return self.entries.get(component_id)

    def get_entries_by_role(self) -> dict[Role, list[ComponentEntry]]:
        by_role: dict[Role, list[ComponentEntry]] = {}
        for entry in self.entries.values():
            by_role.setdefault(entry.role, []).append(entry)
        return by_role


def load_registry(library_path: str) -> ComponentRegistry:
    """Shortcut for ComponentLoader(library_path).load()."""
    return ComponentLoader(library_path).load()
