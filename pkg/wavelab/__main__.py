import sys

from wavelab.handlers.cli import main

sys.exit(main())
