import sys

from batemanlab.cli import main

sys.exit(main())
