"""Allow ``python -m resunmix``."""

import sys

from resunmix.cli import main

sys.exit(main())
