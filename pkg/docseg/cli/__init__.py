from docseg.cli.config import CONFIG_ENV, GLOBAL, apply_file_defaults, config_path, fingerprint, read_config_file
from docseg.cli.main import EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL, build_parser, run, pipeline_smoke, main
