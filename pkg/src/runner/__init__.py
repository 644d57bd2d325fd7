# Command-line runner modules
from .config import RunConfig, ConfigError, DEFAULTS, SCHEMA_VERSION, parse_config, load_config, default_config
from .csv_io import write_rows, read_rows, write_json
from .commands import (
    cmd_simulate,
    cmd_covariance,
    cmd_verify,
    cmd_reproduce,
    covariance_table,
    EXIT_PASS,
    EXIT_FAIL,
    EXIT_CONFIG,
    EXIT_IO
)
