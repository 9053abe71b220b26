"""Component library, configuration, report and export files."""
