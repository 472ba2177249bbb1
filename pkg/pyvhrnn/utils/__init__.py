# pylint: disable=consider-using-from-import, missing-module-docstring
from pyvhrnn.utils import env
from pyvhrnn.utils.logger import Logger
