"""Allow ``python -m syzygy``."""

from syzygy.cli import main

if __name__ == "__main__":
    raise SystemExit(main())
