from .decorators import timed
from .logger_config import add_file_handler, set_log_level

__all__ = ["timed", "set_log_level", "add_file_handler"]
