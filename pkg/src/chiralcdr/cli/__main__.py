"""Allow ``python -m chiralcdr.cli``."""

import sys

from .main import main

sys.exit(main())
