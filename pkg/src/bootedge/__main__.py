import sys

from bootedge.cli import main

sys.exit(main())
