import sys

from aocsi.cli import main

sys.exit(main())
