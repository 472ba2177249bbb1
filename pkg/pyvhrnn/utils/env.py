"""This module contains utility functions for parsing environment variables which provide
defaults for the command-line interface."""

import os
from typing import Any, Callable


def parse_env(
    keys: list[str], postprocess_fn: Callable[[str], Any], raise_if_not_found: bool = True
) -> Any:
    """Parse the environment for the first key that is found and return the value after
    postprocessing it.

    Arguments:
        keys (list[str]): The keys to search for in the environment.
        postprocess_fn (Callable[[str], Any]): The postprocessing function to apply to the value.
        raise_if_not_found (bool): Whether to raise an error if the environment
            variable is not found. Defaults to True.

    Raises:
        ValueError: If none of the keys are found in the environment and raise_if_not_found is True.

    Returns:
        Any | None: The postprocessed value or None.
    """
    for k in keys:
        if k in os.environ:
            return postprocess_fn(os.environ[k])
    if raise_if_not_found:
        raise ValueError(f"None of the keys {keys} were found in the environment.")
    return None


def log_level() -> str | None:
    """Get the log level for the command-line interface from the environment using the
    following keys:
    - PYVHRNN_LOG_LEVEL

    Returns:
        str | None: The upper-cased level name or None if not set.
    """
    return parse_env(
        keys=["PYVHRNN_LOG_LEVEL"],
        postprocess_fn=lambda x: x.strip().upper(),
        raise_if_not_found=False,
    )


def workers() -> int | None:
    """Get the number of evaluation workers from the environment using the following keys:
    - PYVHRNN_WORKERS

    Raises:
        ValueError: If the value is not a positive integer.

    Returns:
        int | None: The number of workers or None if not set.
    """
    return parse_env(
        keys=["PYVHRNN_WORKERS"],
        postprocess_fn=_positive_int,
        raise_if_not_found=False,
    )


def seed() -> int | None:
    """Get the default random seed from the environment using the following keys:
    - PYVHRNN_SEED

    Returns:
        int | None: The seed or None if not set.
    """
    return parse_env(
        keys=["PYVHRNN_SEED"],
        postprocess_fn=int,
        raise_if_not_found=False,
    )


def _positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        raise ValueError(f"Expected a positive integer, got {value}")
    return number
