# pylint: disable=missing-module-docstring
from pyvhrnn.cli.main import main

if __name__ == "__main__":
    raise SystemExit(main())
