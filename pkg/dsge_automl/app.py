"""
dsge-automl - Main Application

Locates the shipped grammars, component library and experiments, and hands
the command line to the CLI.
"""

import os
from typing import Optional


class AutoMLApp:
    """
    Main application class.

    Handles base-path discovery and running the command line.
    """

    def __init__(self, base_path: Optional[str] = None):
        self.base_path = base_path or self._find_base_path()

    def _find_base_path(self) -> str:
        """
        Find the base path of the application.

        Returns:
            Path to the directory holding component_library/
        """
        this_file = os.path.abspath(__file__)
        package_dir = os.path.dirname(this_file)   # dsge_automl/
        base_dir = os.path.dirname(package_dir)    # repository root

        if os.path.exists(os.path.join(base_dir, "component_library")):
            return base_dir

        cwd = os.getcwd()
        if os.path.exists(os.path.join(cwd, "component_library")):
            return cwd

        return base_dir

    @property
    def component_library_path(self) -> str:
        return os.path.join(self.base_path, "component_library")

    @property
    def grammars_path(self) -> str:
        return os.path.join(self.base_path, "grammars")

    @property
    def experiments_path(self) -> str:
        return os.path.join(self.base_path, "experiments")

    @property
    def default_grammar(self) -> str:
        return os.path.join(self.grammars_path, "pipeline.bnf")

    def experiment_config(self, name: str) -> str:
        return os.path.join(self.experiments_path, name, "config.json")

    def list_experiments(self) -> list[str]:
        """List experiments that have a config.json."""
        experiments = []
        if os.path.exists(self.experiments_path):
            for item in sorted(os.listdir(self.experiments_path)):
                if os.path.exists(self.experiment_config(item)):
                    experiments.append(item)
        return experiments

    def run(self, argv: Optional[list[str]] = None) -> int:
        """Run the command line; returns the exit status."""
        from dsge_automl.cli.main import main as cli_main
        return cli_main(argv, app=self)


def main():
    """Main entry point."""
    raise SystemExit(AutoMLApp().run())


if __name__ == "__main__":
    main()
