"""
Component registry for pipeline methods.

Entries are loaded from JSON files in component_library/ and bound to the
native implementations in dsge_automl.ml.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Iterable, Optional

from dsge_automl.core.errors import ComponentFailure, PipelineCompileError

logger = logging.getLogger(__name__)


class Role(Enum):
    PREPROCESSING = "preprocessing"
    CLASSIFIER = "classifier"


_TYPE_NAMES = ("int", "float", "bool", "str")


@dataclass
class ParamSpec:
    """A parameter a component accepts (e.g., n_neighbors)."""
    name: str
    type: str              # "int", "float", "bool", "str"
    default: Any = None
    min_val: Optional[float] = None
    max_val: Optional[float] = None
    choices: Optional[list] = None
    nullable: bool = False  # whether None is a legal value
    description: str = ""

    def __post_init__(self):
        if self.type not in _TYPE_NAMES:
            raise ValueError(f"parameter {self.name!r}: unknown type {self.type!r}")

    @property
    def required(self) -> bool:
        return self.default is None and not self.nullable

    def check(self, value: Any) -> Any:
        """
        Validate a parsed value against this declaration.

        Integers are accepted for float parameters and widened. Nothing is
        clamped: a value out of range is a compile error.

        Returns:
            The value, converted where widening applies

        Raises:
            PipelineCompileError: wrong type, out of range or not a listed choice
        """
        if value is None:
            if self.nullable:
                return None
            raise PipelineCompileError(f"parameter {self.name!r} may not be None")

        if self.type == "bool":
            ok = isinstance(value, bool)
        elif self.type == "int":
            ok = isinstance(value, int) and not isinstance(value, bool)
        elif self.type == "float":
            ok = isinstance(value, (int, float)) and not isinstance(value, bool)
            if ok:
                value = float(value)
                ok = math.isfinite(value)
        else:
            ok = isinstance(value, str)
        if not ok:
            raise PipelineCompileError(
                f"parameter {self.name!r} expects {self.type}, got {value!r}"
            )

        if self.choices is not None and value not in self.choices:
            raise PipelineCompileError(
                f"parameter {self.name!r} must be one of {self.choices}, got {value!r}"
            )
        if self.min_val is not None and value < self.min_val:
            raise PipelineCompileError(f"parameter {self.name!r} below minimum {self.min_val}: {value!r}")
        if self.max_val is not None and value > self.max_val:
            raise PipelineCompileError(f"parameter {self.name!r} above maximum {self.max_val}: {value!r}")
        return value

    @classmethod
    def from_dict(cls, data: dict) -> "ParamSpec":
        return cls(
            name=data["name"],
            type=data.get("type", "float"),
            default=data.get("default"),
            min_val=data.get("min"),
            max_val=data.get("max"),
            choices=data.get("choices"),
            nullable=data.get("nullable", False),
            description=data.get("description", ""),
        )

    def to_dict(self) -> dict:
        data = {"name": self.name, "type": self.type, "default": self.default}
        if self.min_val is not None:
            data["min"] = self.min_val
        if self.max_val is not None:
            data["max"] = self.max_val
        if self.choices is not None:
            data["choices"] = list(self.choices)
        if self.nullable:
            data["nullable"] = True
        if self.description:
            data["description"] = self.description
        return data


@dataclass
class ComponentEntry:
    """A pipeline method that a phenotype may name."""
    id: str                # Name used in phenotype tokens (e.g., "knn")
    role: Role
    name: str = ""         # Display name (e.g., "K-Nearest Neighbours")
    description: str = ""
    parameters: list[ParamSpec] = field(default_factory=list)

    def parameter(self, name: str) -> Optional[ParamSpec]:
        for p in self.parameters:
            if p.name == name:
                return p
        return None

    @property
    def parameter_names(self) -> list[str]:
        return [p.name for p in self.parameters]

    @classmethod
    def from_dict(cls, data: dict, role: Optional[str] = None) -> "ComponentEntry":
        """
        Create from dictionary.

        Args:
            data: Entry as stored in a component library file
            role: Role of the enclosing file, used when the entry has none
        """
        role_name = data.get("role", role)
        if role_name is None:
            raise ValueError(f"component {data.get('id')!r} has no role")
        return cls(
            id=data["id"],
            role=Role(role_name),
            name=data.get("name", data["id"]),
            description=data.get("description", ""),
            parameters=[ParamSpec.from_dict(p) for p in data.get("parameters", [])],
        )

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "role": self.role.value,
            "name": self.name,
            "description": self.description,
            "parameters": [p.to_dict() for p in self.parameters],
        }


Factory = Callable[..., Any]


class ComponentRegistry:
    """Component declarations and the classes that implement them."""

    def __init__(self):
        self._entries: dict[str, ComponentEntry] = {}
        self._factories: dict[str, Factory] = {}

    def register(self, entry: ComponentEntry, factory: Optional[Factory] = None) -> None:
        """
        Add a component. Entries without a factory can be compiled but not built.
        """
        if entry.id in self._entries:
            logger.warning("Component %s registered twice; keeping the later one", entry.id)
        self._entries[entry.id] = entry
        if factory is not None:
            self._factories[entry.id] = factory
        else:
            self._factories.pop(entry.id, None)

    def get(self, component_id: str) -> Optional[ComponentEntry]:
        return self._entries.get(component_id)

    def __contains__(self, component_id: str) -> bool:
        return component_id in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def factory(self, component_id: str) -> Optional[Factory]:
        return self._factories.get(component_id)

    def names(self) -> list[str]:
        return sorted(self._entries)

    def by_role(self, role: Role) -> list[ComponentEntry]:
        return [e for _, e in sorted(self._entries.items()) if e.role == role]

    def build(self, component_id: str, params: dict, seed: int = 0):
        """
        Instantiate the implementation of a component.

        Args:
            component_id: Registered id
            params: Checked parameter values
            seed: Passed to implementations that use randomness

        Raises:
            ComponentFailure: no implementation is bound, or the constructor rejects the values
        """
        factory = self._factories.get(component_id)
        if factory is None:
            raise ComponentFailure(f"component {component_id!r} has no implementation")
        kwargs = dict(params)
        if getattr(factory, "uses_seed", False):
            kwargs["seed"] = seed
        try:
            return factory(**kwargs)
        except TypeError as e:
            raise ComponentFailure(f"cannot build {component_id!r}: {e}") from None

    @classmethod
    def from_entries(
        cls,
        entries: Iterable[ComponentEntry],
        implementations: Optional[dict[str, Factory]] = None,
    ) -> "ComponentRegistry":
        registry = cls()
        implementations = implementations or {}
        for entry in entries:
            registry.register(entry, implementations.get(entry.id))
        return registry
