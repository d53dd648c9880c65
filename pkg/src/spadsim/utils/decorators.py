import functools
import logging
import time

logger = logging.getLogger(__name__)


def timed(func):
    """Decorator that logs the wall time of a pipeline stage.

    Parameters
    ----------
    func : function
        The function to time.

    Returns
    -------
    wrapper : function
        The wrapped function; its return value is passed through unchanged.
    """

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        start_time = time.perf_counter()
        result = func(*args, **kwargs)
        logger.info(f"{func.__name__} took {time.perf_counter() - start_time:.3f} s.")
        return result

    return wrapper
