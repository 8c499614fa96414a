import sys

from eqyamabe.cli import main

sys.exit(main())
