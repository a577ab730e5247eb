"""saginshare - two-operator SAGIN sharing simulator.

Entry point for the command line.
"""

import sys

from .ui import main

if __name__ == "__main__":
    sys.exit(main())
