import sys

from powerbias.cli import main

sys.exit(main())
