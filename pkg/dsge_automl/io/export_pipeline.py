"""
Export the best pipeline of a run.

- best_pipeline.json: PipelineSpec plus fitness and phenotype
- best_pipeline.txt: boxed text diagram with a header
"""

import json
import os
from typing import Optional

from dsge_automl import __version__
from dsge_automl.core.pipeline import PipelineSpec, describe_pipeline

PIPELINE_JSON = "best_pipeline.json"
PIPELINE_TEXT = "best_pipeline.txt"


def pipeline_document(spec: PipelineSpec, phenotype: str, cv_fitness: float,
                      test_macro_f: Optional[float] = None) -> dict:
    return {
        "pipeline": spec.to_dict(),
        "phenotype": phenotype,
        "cv_fitness": cv_fitness,
        "test_macro_f": test_macro_f,
    }


def export_pipeline_text(spec: PipelineSpec, phenotype: str, cv_fitness: float,
                         test_macro_f: Optional[float] = None) -> str:
    """
    Text rendering of a pipeline.

    Returns:
        Header lines followed by the pipeline diagram
    """
    lines = [
        "# " + "=" * 70,
        f"# Best pipeline (dsge-automl {__version__})",
        "#",
        f"# Phenotype:   {phenotype}",
        f"# CV fitness:  {cv_fitness:.6f}",
    ]
    if test_macro_f is not None:
        lines.append(f"# Test F:      {test_macro_f:.6f}")
    lines += ["# " + "=" * 70, "", describe_pipeline(spec), ""]
    return "\n".join(lines)


def write_best_pipeline(out_dir: str, spec: PipelineSpec, phenotype: str, cv_fitness: float,
                        test_macro_f: Optional[float] = None) -> tuple[str, str]:
    """Write both best-pipeline files. Returns their paths."""
    os.makedirs(out_dir, exist_ok=True)
    json_path = os.path.join(out_dir, PIPELINE_JSON)
    text_path = os.path.join(out_dir, PIPELINE_TEXT)
    with open(json_path, "w") as f:
        json.dump(pipeline_document(spec, phenotype, cv_fitness, test_macro_f), f, indent=2)
        f.write("\n")
    with open(text_path, "w") as f:
        f.write(export_pipeline_text(spec, phenotype, cv_fitness, test_macro_f))
    return json_path, text_path
