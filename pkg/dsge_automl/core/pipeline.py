"""
Phenotype to pipeline compilation and pipeline execution.

- ComponentSpec / PipelineSpec: immutable description of a pipeline
- compile_phenotype: left-to-right scan of `tag:value` tokens
- render_pipeline: the inverse, spec back to phenotype tokens
- fit_predict: train on one dataset, predict another
"""

import logging
import re
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from dsge_automl.core.cancel import CancelToken, poll
from dsge_automl.core.components import ComponentRegistry, Role
from dsge_automl.core.dsge import Phenotype
from dsge_automl.core.errors import ComponentFailure, PipelineCompileError
from dsge_automl.ml.dataset import Dataset

logger = logging.getLogger(__name__)

_INT_RE = re.compile(r"[+-]?\d+")
_FLOAT_RE = re.compile(r"[+-]?(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?")
_LITERALS = {"None": None, "True": True, "False": False}


def parse_value(text: str) -> Any:
    """Parse a token value: None/True/False, then integer, then float, then text."""
    if text in _LITERALS:
        return _LITERALS[text]
    if _INT_RE.fullmatch(text):
        return int(text)
    if _FLOAT_RE.fullmatch(text):
        return float(text)
    return text


def format_value(value: Any) -> str:
    if value is None or isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class ComponentSpec:
    role: Role
    name: str
    params: tuple[tuple[str, Any], ...] = ()

    @property
    def param_dict(self) -> dict:
        return dict(self.params)

    def tokens(self) -> list[str]:
        return [f"{self.role.value}:{self.name}"] + [
            f"{key}:{format_value(value)}" for key, value in self.params
        ]

    def to_dict(self) -> dict:
        # list of pairs keeps the parameter order through JSON
        return {
            "role": self.role.value,
            "name": self.name,
            "params": [[key, value] for key, value in self.params],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ComponentSpec":
        return cls(
            role=Role(data["role"]),
            name=data["name"],
            params=tuple((key, value) for key, value in data.get("params", [])),
        )


@dataclass(frozen=True)
class PipelineSpec:
    """Preprocessors in order, then exactly one classifier."""
    preprocessors: tuple[ComponentSpec, ...]
    classifier: ComponentSpec

    @property
    def components(self) -> tuple[ComponentSpec, ...]:
        return self.preprocessors + (self.classifier,)

    def method_names(self) -> list[str]:
        return [c.name for c in self.components]

    def to_dict(self) -> dict:
        return {
            "preprocessors": [c.to_dict() for c in self.preprocessors],
            "classifier": self.classifier.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineSpec":
        return cls(
            preprocessors=tuple(ComponentSpec.from_dict(c) for c in data.get("preprocessors", [])),
            classifier=ComponentSpec.from_dict(data["classifier"]),
        )


def _close_component(role: Role, name: str, given: list[tuple[str, Any]],
                     registry: ComponentRegistry) -> ComponentSpec:
    entry = registry.get(name)
    params = list(given)
    present = {key for key, _ in given}
    for param in entry.parameters:
        if param.name in present:
            continue
        if param.required:
            raise PipelineCompileError(f"{name}: missing required parameter {param.name!r}")
        params.append((param.name, param.default))
    return ComponentSpec(role, name, tuple(params))


def compile_phenotype(pheno: Phenotype, registry: ComponentRegistry) -> PipelineSpec:
    """
    Compile a phenotype into a pipeline specification.

    Tokens are read left to right. `preprocessing:<name>` and
    `classifier:<name>` open a component; every other `key:value` token is a
    parameter of the open component. Omitted parameters take the registry
    default.

    Raises:
        PipelineCompileError: malformed token, unknown component or
            parameter, parameter before any component, duplicate parameter,
            value out of range, no classifier, more than one classifier or a
            preprocessor after the classifier
    """
    roles = {r.value: r for r in Role}
    preprocessors: list[ComponentSpec] = []
    classifier: Optional[ComponentSpec] = None
    current: Optional[tuple[Role, str]] = None
    given: list[tuple[str, Any]] = []

    def close() -> None:
        nonlocal classifier
        if current is None:
            return
        spec = _close_component(current[0], current[1], given, registry)
        if spec.role == Role.CLASSIFIER:
            classifier = spec
        else:
            preprocessors.append(spec)

    for position, token in enumerate(pheno.tokens):
        key, sep, text = token.partition(":")
        if not sep or not key or not text:
            raise PipelineCompileError(f"token {position} ({token!r}) is not of the form tag:value")

        if key in roles:
            close()
            role = roles[key]
            entry = registry.get(text)
            if entry is None:
                raise PipelineCompileError(f"unknown component {text!r}")
            if entry.role != role:
                raise PipelineCompileError(
                    f"{text!r} is a {entry.role.value} component, tagged as {role.value}"
                )
            if role == Role.CLASSIFIER and classifier is not None:
                raise PipelineCompileError("more than one classifier in pipeline")
            if role == Role.PREPROCESSING and classifier is not None:
                raise PipelineCompileError(f"preprocessor {text!r} follows the classifier")
            current = (role, text)
            given = []
            continue

        if current is None:
            raise PipelineCompileError(f"parameter {key!r} appears before any component")
        param = registry.get(current[1]).parameter(key)
        if param is None:
            accepted = ", ".join(registry.get(current[1]).parameter_names) or "none"
            raise PipelineCompileError(f"{current[1]}: unknown parameter {key!r} (accepts: {accepted})")
        if any(k == key for k, _ in given):
            raise PipelineCompileError(f"{current[1]}: parameter {key!r} given twice")
        try:
            value = param.check(parse_value(text))
        except PipelineCompileError as e:
            raise PipelineCompileError(f"{current[1]}: {e}") from None
        given.append((key, value))

    close()
    if classifier is None:
        raise PipelineCompileError("pipeline has no classifier")
    return PipelineSpec(tuple(preprocessors), classifier)


def render_pipeline(spec: PipelineSpec) -> Phenotype:
    """Phenotype tokens that compile back to `spec`."""
    tokens: list[str] = []
    for component in spec.components:
        tokens.extend(component.tokens())
    return Phenotype(tuple(tokens))


def describe_pipeline(spec: PipelineSpec) -> str:
    """Text diagram of a pipeline, one box per method."""
    boxes = []
    for component in spec.components:
        lines = [f"{component.role.value}: {component.name}"]
        lines += [f"  {key} = {format_value(value)}" for key, value in component.params]
        boxes.append(lines)
    width = max(len(line) for box in boxes for line in box) + 2

    out = []
    for i, box in enumerate(boxes):
        if i:
            out.append(" " * (width // 2) + "|")
            out.append(" " * (width // 2) + "v")
        out.append("+" + "-" * width + "+")
        out += [f"| {line.ljust(width - 1)}|" for line in box]
        out.append("+" + "-" * width + "+")
    return "\n".join(out)


def fit_predict(
    spec: PipelineSpec,
    train: Dataset,
    test: Dataset,
    registry: ComponentRegistry,
    cancel: Optional[CancelToken] = None,
    seed: int = 0,
) -> np.ndarray:
    """
    Fit a pipeline on `train` and predict the labels of `test`.

    Each preprocessor is fitted on the train representation produced so far
    and applied to both sides; the classifier sees the final representation.

    Raises:
        ComponentFailure: a component cannot be built or fails numerically
        EvaluationTimeout: `cancel` fired
    """
    if train.n_features != test.n_features:
        raise ComponentFailure(
            f"train has {train.n_features} features, test has {test.n_features}"
        )
    X_train, X_test, y = train.features, test.features, train.labels
    try:
        for component in spec.preprocessors:
            poll(cancel)
            step = registry.build(component.name, component.param_dict, seed)
            X_train = step.fit_transform(X_train, y, cancel)
            X_test = step.transform(X_test)
            if X_train.shape[1] == 0:
                raise ComponentFailure(f"{component.name} left no features")
        poll(cancel)
        model = registry.build(spec.classifier.name, spec.classifier.param_dict, seed)
        model.fit(X_train, y, cancel)
        poll(cancel)
        return np.asarray(model.predict(X_test, cancel), dtype=np.int64)
    except (ArithmeticError, ValueError, np.linalg.LinAlgError, MemoryError) as e:
        raise ComponentFailure(f"{type(e).__name__}: {e}") from None
