import sys

from gausslimit.cli import main

sys.exit(main())
