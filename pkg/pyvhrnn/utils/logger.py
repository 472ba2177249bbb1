"""This module contains the fallback logger of components which were not given one.

Debug and info messages are dropped. Warnings and errors go to the standard logging tree under the
component's name, so they surface whenever the application configured logging and stay silent
otherwise."""

import logging

# pylint: disable=C0115, C0116

logging.getLogger("pyvhrnn").addHandler(logging.NullHandler())


class Logger:
    def __init__(self, name: str):
        self.name = name
        self._delegate = logging.getLogger(name)

    def debug(self, *args, **kwargs) -> None:
        pass

    def info(self, *args, **kwargs) -> None:
        pass

    def warning(self, msg: str, *args, **kwargs) -> None:
        self._delegate.warning(msg, *args, **kwargs)

    def error(self, msg: str, *args, **kwargs) -> None:
        self._delegate.error(msg, *args, **kwargs)

    def exception(self, msg: str, *args, **kwargs) -> None:
        self._delegate.exception(msg, *args, **kwargs)
