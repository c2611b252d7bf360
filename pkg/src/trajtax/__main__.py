import sys

from trajtax.cli import main

sys.exit(main())
