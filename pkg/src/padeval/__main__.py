import sys

from padeval.cli import main

sys.exit(main())
