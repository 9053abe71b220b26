#!/usr/bin/env python3
"""
dsge-automl - Entry Point

Usage:
    python run.py run --experiment blobs_demo
    python run.py grammar-check --grammar grammars/pipeline.bnf
    python run.py replay --report out/report.json
"""

import sys


def main():
    """Main entry point."""
    # Check Python version
    if sys.version_info < (3, 10):
        print(f"Error: Python 3.10+ required, you have {sys.version}")
        sys.exit(1)

    # Check numerical stack
    try:
        import numpy
        import pandas
    except ImportError as e:
        print(f"Error: {e.name} not found.")
        print("Install the requirements with:")
        print("  pip install -r requirements.txt")
        sys.exit(1)

    from dsge_automl.app import AutoMLApp
    app = AutoMLApp()
    sys.exit(app.run())


if __name__ == "__main__":
    main()
