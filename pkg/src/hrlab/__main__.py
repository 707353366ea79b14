import sys

from hrlab.cli import main

sys.exit(main())
