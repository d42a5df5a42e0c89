from .config import ConfigError, load_config, validate_config
from .runlog import RunLog, emit
from .runner import RunResult, run

__all__ = ["ConfigError", "load_config", "validate_config", "RunLog", "emit",
           "RunResult", "run"]
